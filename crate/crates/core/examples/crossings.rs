//! Simulates a walk and lists its crossing cycles.

use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::walk::{extract_crossings, simulate_path, Thresholds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0))?;
    let thr = Thresholds::strict(-0.5, 0.5)?;
    let path = simulate_path(&kernel, 0.0, 0.0, 5_000, 42)?;
    let records = extract_crossings(&path, &thr);
    println!("{} cycles in {} steps", records.len(), path.len());
    for r in records.iter().take(8) {
        println!(
            "cycle {:>3}: T={:>5} L={:>5} S_T={:+.3} S_L={:+.3} in state space: {}",
            r.index, r.t_idx, r.l_idx, r.s_at_t, r.s_at_l, r.in_state_space
        );
    }
    Ok(())
}
