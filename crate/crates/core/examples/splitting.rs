//! Samples one-step increments through the splitting map and reports how often
//! the state-independent component fires.

use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let specs = [
        ("iid_uniform", KernelSpec::iid_uniform(1.0, 0.4, 0.5, 1.0)),
        ("state_shape", KernelSpec::state_shape(0.3, 0.2, 1.0)),
        ("one_sided_exp", KernelSpec::one_sided_exp(0.2, 0.8, 0.3, 0.2, 1.0)),
    ];
    let n = 200_000;
    for (name, spec) in specs {
        let kernel = Kernel::new(spec)?;
        let mut rng = seeded(11);
        let (mut x, mut regen, mut sum) = (0.0, 0u64, 0.0);
        for _ in 0..n {
            let (y, r) = kernel.step(x, &mut rng);
            regen += r as u64;
            sum += y;
            x = y;
        }
        println!(
            "{name:>14}: regeneration rate {:.4} (alpha {}), mean increment {:+.4}",
            regen as f64 / n as f64,
            spec.alpha,
            sum / n as f64
        );
    }
    Ok(())
}
