//! Projected Kiefer-Wolfowitz ascent on a smooth mock objective.

use crossing_lab::optimizer::{kiefer_wolfowitz, FnObjective, KwConfig, ThresholdBox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let target = (-0.3, 0.45);
    let objective = FnObjective(move |l: f64, u: f64| -(l - target.0).powi(2) - (u - target.1).powi(2));
    let cfg = KwConfig::with_projection(ThresholdBox {
        lower_range: (-1.0, -0.1),
        upper_range: (0.1, 1.0),
        grid_counts: (2, 2),
        margin: 0.1,
    });
    let tr = kiefer_wolfowitz(&objective, &cfg, (-0.9, 0.9), 0)?;
    for s in tr.steps.iter().step_by(100) {
        println!("iter {:>3}: ({:+.4}, {:+.4})", s.iter, s.theta_lower, s.theta_upper);
    }
    println!("final {:?}, optimum {target:?}", tr.final_theta);
    Ok(())
}
