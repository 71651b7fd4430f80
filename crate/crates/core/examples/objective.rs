//! Long-run expected utility of a threshold strategy.

use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::trading::{long_run_objective, ObjectiveOptions, ObjectiveSpec, PenaltySpec, UtilitySpec, Variant};
use crossing_lab::walk::{Side, Thresholds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0))?;
    let thr = Thresholds::strict(-0.4, 0.4)?;
    let opts = ObjectiveOptions {
        max_steps: 2_000_000_000,
        ..Default::default()
    };
    for side in [Side::Long, Side::Short] {
        let spec = ObjectiveSpec {
            utility: UtilitySpec::capped_linear(Some(1.0)),
            penalty: PenaltySpec::LinearCapped { slope: 0.001, cap: 0.5 },
            mu: 0.001,
            variant: Variant::Level,
            side,
        };
        let est = long_run_objective(&kernel, &thr, &spec, 300, 17, &opts)?;
        println!("{side:?}: {:.4} +/- {:.4} over {} cycles", est.mean, est.stderr, est.n_cycles);
    }
    Ok(())
}
