//! Monte Carlo check of the overshoot-chain lower bound, plus an inflated
//! bound as a negative control.

use crossing_lab::ergodics::{verify_minorization, DeltaBox, MinorizationChain, Probe, VerifyOptions};
use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::walk::Thresholds;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::new(KernelSpec::iid_uniform(1.0, 1.0, 1.0, 1.0))?;
    let thr = Thresholds::strict(-0.5, 0.5)?;
    let chain = MinorizationChain::Z {
        boxes: vec![
            DeltaBox { x: (0.0, 0.5), s: (0.0, 0.5) },
            DeltaBox { x: (0.5, 1.0), s: (0.0, 0.5) },
            DeltaBox { x: (0.5, 1.0), s: (0.5, 1.0) },
            DeltaBox { x: (0.0, 1.0), s: (0.0, 1.0) },
        ],
    };
    let probes = [
        Probe { x_at_l: 0.2, s_at_l: 0.1 },
        Probe { x_at_l: 0.6, s_at_l: 0.3 },
    ];
    let opts = VerifyOptions {
        replicates: 100_000,
        ..Default::default()
    };
    let report = verify_minorization(&kernel, &thr, &chain, &probes, &opts, 9)?;
    for r in &report.results {
        println!(
            "probe {} box {}: empirical {:.4} +/- {:.4}, bound {:.3e}",
            r.probe, r.target, r.empirical, r.stderr, r.bound
        );
    }
    println!("violations: {}", report.violations);
    println!("violations at 10x bound: {}", report.rescaled(10.0).violations);
    Ok(())
}
