//! Total-variation distance between two copies of the crossing chain started
//! from different states, against a same-law control.

use crossing_lab::ergodics::{tv_decay_experiment, Chain, InitialCondition, TvOptions};
use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::walk::Thresholds;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::new(KernelSpec::state_shape(0.1, 0.1, 1.0))?;
    let thr = Thresholds::strict(-0.05, 0.05)?;
    let init = (
        InitialCondition { s0: -0.06, x0: 1.0 },
        InitialCondition { s0: -0.06, x0: -1.0 },
    );
    let opts = TvOptions {
        max_steps_per_replicate: 100_000,
        ..Default::default()
    };
    let series = tv_decay_experiment(&kernel, &thr, Chain::U, init, &[1, 2, 4, 8], 5_000, 3, &opts)?;
    series.write_csv(std::io::stdout())?;
    println!("fitted rate: {:?}", series.fitted_rate);
    Ok(())
}
