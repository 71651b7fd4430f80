//! Ergodic averages of bounded functionals along one path of the crossing chain.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{batch_means_stderr, lln_average, ErgodicsError};
use crate::kernels::Kernel;
use crate::rng::seeded;
use crate::walk::{CrossingRecord, CrossingTracker, Side, Thresholds, Walker};

/// Bounded functional `φ(U_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Observable {
    /// `S_{L_n} - θ̄`, which lies in `(0, M]`.
    Overshoot,
    /// `1{L_n - T_n ≤ max_duration}` (or its mirrored analogue).
    ShortCycle { max_duration: u64 },
}

impl Observable {
    pub fn eval(&self, rec: &CrossingRecord, thr: &Thresholds) -> f64 {
        match *self {
            Observable::Overshoot => rec.s_at_l - thr.upper(),
            Observable::ShortCycle { max_duration } => (rec.duration <= max_duration) as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnRun {
    /// `φ(U_n)` for the counted cycles `n = 2, 3, …`.
    pub values: Vec<f64>,
    pub running: Vec<f64>,
    pub mean: f64,
    /// Batch-means standard error of `mean`.
    pub stderr: f64,
    pub steps: u64,
}

impl LlnRun {
    /// Running mean after the first `n` counted cycles.
    pub fn mean_at(&self, n: usize) -> f64 {
        self.running[n - 1]
    }

    /// Columns `cycle,value,running_mean`; `cycle` is the chain index `n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "cycle,value,running_mean")?;
        for (i, (v, r)) in self.values.iter().zip(&self.running).enumerate() {
            writeln!(out, "{},{v},{r}", i + 2)?;
        }
        Ok(())
    }
}

/// Simulates one path from `S_0 = X_0 = 0` until `n_cycles` cycles with
/// `n ≥ 2` have completed and averages `φ` over them.
pub fn lln_run(
    kernel: &Kernel,
    thr: &Thresholds,
    side: Side,
    phi: Observable,
    n_cycles: usize,
    seed: u64,
    max_steps: u64,
) -> Result<LlnRun, ErgodicsError> {
    if n_cycles < 4 {
        return Err(ErgodicsError::InvalidExperiment(format!(
            "n_cycles = {n_cycles}, need at least 4"
        )));
    }
    if side == Side::Short && !kernel.is_bounded_below() {
        return Err(ErgodicsError::InvalidExperiment(
            "mirrored chain needs increments bounded below".into(),
        ));
    }
    let mut walker = Walker::new(kernel, 0.0, 0.0, seeded(seed));
    let mut tracker = CrossingTracker::new(*thr, side);
    let mut values = Vec::with_capacity(n_cycles);
    let mut steps = 0;
    while values.len() < n_cycles {
        if steps == max_steps {
            return Err(ErgodicsError::BudgetExceeded {
                max_steps,
                completed: values.len(),
            });
        }
        steps += 1;
        if let Some(rec) = tracker.push(walker.advance()) {
            if rec.in_state_space {
                values.push(phi.eval(&rec, thr));
            }
        }
    }
    let running = lln_average(&values);
    Ok(LlnRun {
        mean: running[n_cycles - 1],
        stderr: batch_means_stderr(&values),
        running,
        values,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    #[test]
    fn overshoot_average_is_in_range_and_reproducible() {
        let k = Kernel::new(KernelSpec::iid_uniform(1.0, 0.5, 0.5, 1.0)).unwrap();
        let thr = Thresholds::strict(-0.2, 0.2).unwrap();
        let run = |seed| lln_run(&k, &thr, Side::Long, Observable::Overshoot, 400, seed, u64::MAX);
        let a = run(3).unwrap();
        assert_eq!(a, run(3).unwrap());
        assert!(a.values.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!(a.mean > 0.0 && a.mean < 1.0 && a.stderr > 0.0);
        assert_eq!(a.mean_at(400), a.mean);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cycle,value,running_mean\n2,"));
    }

    #[test]
    fn indicator_values_are_binary() {
        let k = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0)).unwrap();
        let thr = Thresholds::strict(-0.2, 0.2).unwrap();
        let phi = Observable::ShortCycle { max_duration: 2 };
        let r = lln_run(&k, &thr, Side::Short, phi, 200, 1, u64::MAX).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn budget_is_enforced() {
        let k = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0)).unwrap();
        let thr = Thresholds::strict(-0.2, 0.2).unwrap();
        assert!(matches!(
            lln_run(&k, &thr, Side::Long, Observable::Overshoot, 1000, 1, 100),
            Err(ErgodicsError::BudgetExceeded { max_steps: 100, .. })
        ));
    }
}
