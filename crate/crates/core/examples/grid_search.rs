//! Grid search over thresholds with common random numbers.

use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::optimizer::{grid_search, SimulatedObjective, ThresholdBox};
use crossing_lab::trading::{ObjectiveOptions, ObjectiveSpec, PenaltySpec, UtilitySpec, Variant};
use crossing_lab::walk::{Boundary, Side};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0))?;
    let bx = ThresholdBox {
        lower_range: (-0.8, -0.1),
        upper_range: (0.1, 0.8),
        grid_counts: (3, 3),
        margin: 0.1,
    };
    bx.validate(kernel.h())?;
    let objective = SimulatedObjective {
        kernel,
        spec: ObjectiveSpec {
            utility: UtilitySpec::exponential(2.0),
            penalty: PenaltySpec::LinearCapped { slope: 0.01, cap: 1.0 },
            mu: 0.0,
            variant: Variant::Level,
            side: Side::Long,
        },
        n_cycles: 150,
        boundary: Boundary::Strict,
        options: ObjectiveOptions {
            max_steps: 2_000_000_000,
            ..Default::default()
        },
    };
    let res = grid_search(&objective, &bx, 21)?;
    res.write_surface_csv(std::io::stdout())?;
    println!("best thresholds: {:?}", res.best);
    Ok(())
}
