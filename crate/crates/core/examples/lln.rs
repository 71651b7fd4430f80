//! Running ergodic average of the overshoot over crossing cycles.

use crossing_lab::ergodics::{lln_run, Observable};
use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::walk::{Side, Thresholds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0))?;
    let thr = Thresholds::strict(-0.3, 0.3)?;
    let run = lln_run(&kernel, &thr, Side::Long, Observable::Overshoot, 2_000, 1, 1_000_000_000)?;
    for n in [100, 500, 1_000, 2_000] {
        println!("n = {n:>5}: running mean {:.5}", run.mean_at(n));
    }
    println!("final {:.5} +/- {:.5} after {} steps", run.mean, run.stderr, run.steps);
    Ok(())
}
