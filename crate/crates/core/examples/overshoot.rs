//! Ladder overshoots over zero and their empirical mean.

use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::walk::{extract_overshoots, simulate_path, Boundary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::new(KernelSpec::iid_uniform(1.0, 0.5, 0.5, 1.0))?;
    let path = simulate_path(&kernel, 0.0, 0.0, 200_000, 5)?;
    let ov = extract_overshoots(&path, Boundary::Strict);
    let n = ov.records.len();
    let mean = ov.records.iter().map(|r| r.o).sum::<f64>() / n as f64;
    println!("{n} overshoots, mean {mean:.4}");
    Ok(())
}
