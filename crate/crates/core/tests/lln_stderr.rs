use crossing_lab::ergodics::{lln_run, ErgodicsError, Observable};
use crossing_lab::kernels::{Kernel, KernelSpec};
use crossing_lab::walk::{Side, Thresholds};

/// The batch-means standard error should match the spread of final averages
/// across independent seeds.
#[test]
fn reported_stderr_matches_seed_to_seed_spread() {
    let kernel = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0)).unwrap();
    let thr = Thresholds::strict(-0.3, 0.3).unwrap();
    let runs: Vec<_> = (0..10u64)
        .map(|seed| lln_run(&kernel, &thr, Side::Long, Observable::Overshoot, 400, 500 + seed, 20_000_000_000).unwrap())
        .collect();
    let means: Vec<f64> = runs.iter().map(|r| r.mean).collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let sd = (means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt();
    let reported = runs.iter().map(|r| r.stderr).sum::<f64>() / runs.len() as f64;
    let ratio = sd / reported;
    assert!((0.5..=2.0).contains(&ratio), "empirical sd {sd}, mean reported {reported}, ratio {ratio}");
}

#[test]
fn short_cycle_indicator_averages_in_unit_interval() {
    let kernel = Kernel::new(KernelSpec::iid_uniform(1.0, 0.4, 0.5, 1.0)).unwrap();
    let thr = Thresholds::strict(-0.3, 0.3).unwrap();
    let run = lln_run(
        &kernel,
        &thr,
        Side::Short,
        Observable::ShortCycle { max_duration: 5 },
        200,
        3,
        10_000_000_000,
    )
    .unwrap();
    assert!(run.values.iter().all(|v| *v == 0.0 || *v == 1.0));
    assert!((0.0..=1.0).contains(&run.mean));
}

#[test]
fn budget_is_enforced() {
    let kernel = Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0)).unwrap();
    let thr = Thresholds::strict(-0.3, 0.3).unwrap();
    let err = lln_run(&kernel, &thr, Side::Long, Observable::Overshoot, 1_000, 1, 1_000).unwrap_err();
    assert!(matches!(err, ErgodicsError::BudgetExceeded { max_steps: 1_000, .. }));
}
