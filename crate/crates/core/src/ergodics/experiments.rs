//! Replicated simulation experiments: total-variation decay of the chain laws
//! and Monte Carlo checks of the minorization inequalities.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{beta_measure, kappa_tilde, BoundParams, DeltaBox, UBox};
use super::{empirical_law, tv_distance, Axis, Binning, ErgodicsError};
use crate::kernels::Kernel;
use crate::rng::replicate_rng;
use crate::walk::{Boundary, CrossingTracker, Side, Thresholds, Walker};

/// Chain whose law is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chain {
    /// `U_n`, long side.
    U,
    /// `Ũ_n`, short side.
    UMirrored,
    /// Overshoots `O_n` at zero thresholds.
    O,
    /// The increment chain `X_n` itself.
    X,
}

impl Chain {
    fn dim(self) -> usize {
        match self {
            Chain::U | Chain::UMirrored => 5,
            Chain::O | Chain::X => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub s0: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvOptions {
    /// Bins per continuous coordinate; `None` picks 64 for one-dimensional
    /// chains and 4 for the five-dimensional crossing chains.
    pub bins_per_dim: Option<usize>,
    /// Durations above this share one overflow bin.
    pub m_max: u64,
    /// Step budget per replicate; replicates that exhaust it contribute only
    /// the chain elements they reached.
    pub max_steps_per_replicate: u64,
    pub min_replicates: usize,
}

impl Default for TvOptions {
    fn default() -> Self {
        Self {
            bins_per_dim: None,
            m_max: 8,
            max_steps_per_replicate: 1_000_000,
            min_replicates: 100,
        }
    }
}

/// TV between the laws of the `n`-th chain element under two initial
/// conditions, with a same-law control as noise floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvSeries {
    pub chain: Chain,
    pub indices: Vec<u64>,
    pub tv: Vec<f64>,
    /// TV between two independent samples started from the first initial
    /// condition; the Monte Carlo noise level at each `n`.
    pub noise: Vec<f64>,
    /// Least-squares slope of `ln tv` against `n` over points with
    /// `tv > 2·noise`; `None` when fewer than two points qualify.
    pub fitted_rate: Option<f64>,
    /// Expected TV between two independent samples of the first arm's law,
    /// `Σ √p_i / √(π N)`, for judging whether the control is at noise level.
    pub noise_scale: Vec<f64>,
    pub fit_window: Option<(u64, u64)>,
    pub replicates: usize,
    /// Replicates per arm that hit the step budget before the last index.
    pub censored: [usize; 3],
    pub n_bins: usize,
    pub binning: Binning,
}

impl TvSeries {
    /// Columns `n,tv,stderr`; `stderr` is the same-law control TV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,tv,stderr")?;
        for ((n, tv), noise) in self.indices.iter().zip(&self.tv).zip(&self.noise) {
            writeln!(out, "{n},{tv},{noise}")?;
        }
        Ok(())
    }
}

fn default_binning(
    kernel: &Kernel,
    thr: &Thresholds,
    chain: Chain,
    opts: &TvOptions,
) -> Result<Binning, ErgodicsError> {
    let m = kernel.m();
    let (lo, hi) = (thr.lower(), thr.upper());
    let axes = match chain {
        Chain::X => {
            let (a, b) = kernel.increment_support();
            vec![Axis::uniform(a.max(-4.0 * m), b, opts.bins_per_dim.unwrap_or(64))]
        }
        Chain::O => vec![Axis::uniform(0.0, m, opts.bins_per_dim.unwrap_or(64))],
        Chain::U | Chain::UMirrored => {
            let k = opts.bins_per_dim.unwrap_or(4);
            let down = [Axis::uniform(-m, 0.0, k), Axis::uniform(lo - m, lo, k)];
            let up = [Axis::uniform(0.0, m, k), Axis::uniform(hi, hi + m, k)];
            let (first, second) = if chain == Chain::U { (down, up) } else { (up, down) };
            let mut axes: Vec<Axis> = first.into_iter().chain(second).collect();
            axes.push(Axis::integer_with_overflow(1, opts.m_max));
            axes
        }
    };
    Binning::new(axes)
}

/// Runs one replicate and returns the chain values at each requested index,
/// stopping early if the step budget runs out.
fn sample_replicate(
    kernel: &Kernel,
    thr: &Thresholds,
    chain: Chain,
    init: InitialCondition,
    wanted: &[u64],
    rng: crate::rng::SimRng,
    max_steps: u64,
) -> Vec<f64> {
    let dim = chain.dim();
    let mut out = Vec::with_capacity(wanted.len() * dim);
    let mut walker = Walker::new(kernel, init.s0, init.x0, rng);
    let mut next = 0;
    let last = *wanted.last().expect("non-empty index list");
    match chain {
        Chain::X => {
            for k in 1..=last {
                let st = walker.advance();
                if k == wanted[next] {
                    out.push(st.x);
                    next += 1;
                }
            }
        }
        _ => {
            let mut tracker = match chain {
                Chain::U => CrossingTracker::new(*thr, Side::Long),
                Chain::UMirrored => CrossingTracker::new(*thr, Side::Short),
                _ => CrossingTracker::overshoots(thr.boundary()),
            };
            for _ in 0..max_steps {
                let Some(rec) = tracker.push(walker.advance()) else {
                    continue;
                };
                if rec.index == wanted[next] {
                    if dim == 1 {
                        out.push(rec.s_at_l);
                    } else {
                        out.extend_from_slice(&rec.state_vector());
                    }
                    next += 1;
                    if next == wanted.len() {
                        break;
                    }
                }
            }
        }
    }
    out
}

/// Estimates `n ↦ TV(Law_a(Y_n), Law_b(Y_n))` for the chosen chain.
///
/// Three arms of `replicates` independent runs are simulated: from
/// `init_pair.0`, from `init_pair.1`, and a control from `init_pair.0` again.
/// Replicate `r` of arm `a` uses seed `seed + r` on ChaCha stream `a`.
pub fn tv_decay_experiment(
    kernel: &Kernel,
    thr: &Thresholds,
    chain: Chain,
    init_pair: (InitialCondition, InitialCondition),
    n_list: &[u64],
    replicates: usize,
    seed: u64,
    opts: &TvOptions,
) -> Result<TvSeries, ErgodicsError> {
    if n_list.is_empty() || n_list[0] < 1 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ErgodicsError::InvalidExperiment(
            "n_list must be non-empty, positive and strictly increasing".into(),
        ));
    }
    if chain == Chain::UMirrored && !kernel.is_bounded_below() {
        return Err(ErgodicsError::InvalidExperiment(
            "mirrored chain needs increments bounded below".into(),
        ));
    }
    if replicates < opts.min_replicates.max(2) {
        return Err(ErgodicsError::InsufficientReplicates(format!(
            "{replicates} replicates, need at least {}",
            opts.min_replicates.max(2)
        )));
    }
    let binning = default_binning(kernel, thr, chain, opts)?;
    let dim = chain.dim();
    let inits = [init_pair.0, init_pair.1, init_pair.0];
    let arms: Vec<Vec<Vec<f64>>> = inits
        .iter()
        .enumerate()
        .map(|(arm, &init)| {
            (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let rng = replicate_rng(seed, r, arm as u64);
                    sample_replicate(
                        kernel,
                        thr,
                        chain,
                        init,
                        n_list,
                        rng,
                        opts.max_steps_per_replicate,
                    )
                })
                .collect()
        })
        .collect();
    let mut censored = [0; 3];
    for (c, arm) in censored.iter_mut().zip(&arms) {
        *c = arm.iter().filter(|v| v.len() < n_list.len() * dim).count();
    }
    let mut tv = Vec::with_capacity(n_list.len());
    let mut noise = Vec::with_capacity(n_list.len());
    let mut noise_scale = Vec::with_capacity(n_list.len());
    for (i, _) in n_list.iter().enumerate() {
        let law = |arm: &Vec<Vec<f64>>| {
            let samples = arm
                .iter()
                .filter_map(|v| v.get(i * dim..(i + 1) * dim));
            empirical_law(samples, &binning).map_err(|e| match e {
                ErgodicsError::EmptyInput => ErgodicsError::InsufficientReplicates(format!(
                    "no replicate reached index {} within the step budget",
                    n_list[i]
                )),
                other => other,
            })
        };
        let (a, b, c) = (law(&arms[0])?, law(&arms[1])?, law(&arms[2])?);
        let root_mass: f64 = a.masses.iter().map(|p| p.sqrt()).sum();
        noise_scale.push(root_mass / (std::f64::consts::PI * a.n_samples as f64).sqrt());
        tv.push(tv_distance(&a, &b)?);
        noise.push(tv_distance(&a, &c)?);
    }
    let (fitted_rate, fit_window) = fit_log_slope(n_list, &tv, &noise);
    Ok(TvSeries {
        chain,
        indices: n_list.to_vec(),
        tv,
        noise,
        fitted_rate,
        noise_scale,
        fit_window,
        replicates,
        censored,
        n_bins: binning.n_bins(),
        binning,
    })
}

fn fit_log_slope(n: &[u64], tv: &[f64], noise: &[f64]) -> (Option<f64>, Option<(u64, u64)>) {
    let pts: Vec<(f64, f64)> = n
        .iter()
        .zip(tv)
        .zip(noise)
        .filter(|((_, &t), &z)| t > 2.0 * z && t > 0.0)
        .map(|((&n, &t), _)| (n as f64, t.ln()))
        .collect();
    if pts.len() < 2 {
        return (None, None);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let window = (pts[0].0 as u64, pts[pts.len() - 1].0 as u64);
    (Some(sxy / sxx), Some(window))
}

/// Chain and target sets for [`verify_minorization`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MinorizationChain {
    /// Crossing chain against `κ̃`.
    U { boxes: Vec<UBox> },
    /// Overshoot chain `Z_n = (X_{L_n}, S_{L_n})` against `β`.
    Z { boxes: Vec<DeltaBox> },
}

/// Starting state for one transition. Both chains move according to
/// `(X_{L_n}, S_{L_n})` only, so that pair is all a probe needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub x_at_l: f64,
    pub s_at_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub replicates: usize,
    /// Multiplier applied to every bound; values above 1 make a negative control.
    pub bound_scale: f64,
    /// `γ̃` or `γ̃′`; defaults as in [`kappa_tilde`] / [`beta_measure`].
    pub gamma: Option<f64>,
    /// Step budget per simulated transition; runs that exhaust it land in no box.
    pub max_steps_per_cycle: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            replicates: 1_000_000,
            bound_scale: 1.0,
            gamma: None,
            max_steps_per_cycle: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeBoxResult {
    pub probe: usize,
    pub target: usize,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationReport {
    pub chain: &'static str,
    pub replicates: usize,
    pub bound_scale: f64,
    pub gamma: f64,
    pub bounds: Vec<f64>,
    pub results: Vec<ProbeBoxResult>,
    pub violations: usize,
    /// Transitions per probe that hit the step budget.
    pub censored: Vec<usize>,
}

impl MinorizationReport {
    /// The same empirical frequencies judged against bounds multiplied by
    /// `factor`; with `factor > 1` this is a negative control.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.bound_scale *= factor;
        for r in &mut out.results {
            r.bound *= factor;
            r.violated = r.empirical < r.bound - 3.0 * r.stderr;
        }
        out.violations = out.results.iter().filter(|r| r.violated).count();
        out
    }
}

/// Checks `Q(y, B) ≥ bound(B) - 3·stderr` for every probe and box by direct
/// simulation of one chain transition per replicate.
pub fn verify_minorization(
    kernel: &Kernel,
    thr: &Thresholds,
    chain: &MinorizationChain,
    probes: &[Probe],
    opts: &VerifyOptions,
    seed: u64,
) -> Result<MinorizationReport, ErgodicsError> {
    let m = kernel.m();
    let params = BoundParams {
        lower: thr.lower(),
        upper: thr.upper(),
        alpha: kernel.alpha(),
        h: kernel.h(),
        m,
    };
    for (i, p) in probes.iter().enumerate() {
        let ok = match chain {
            MinorizationChain::Z { .. } => p.s_at_l > 0.0 && p.s_at_l <= p.x_at_l && p.x_at_l <= m,
            MinorizationChain::U { .. } => {
                p.x_at_l > 0.0 && p.x_at_l <= m && p.s_at_l > thr.upper() && p.s_at_l < thr.upper() + m
            }
        };
        if !ok {
            return Err(ErgodicsError::InvalidExperiment(format!(
                "probe {i} = {p:?} is outside the chain's state space"
            )));
        }
    }
    if opts.replicates < 1 {
        return Err(ErgodicsError::InsufficientReplicates("zero replicates".into()));
    }
    let (name, bounds, gamma, tracker_thr) = match chain {
        MinorizationChain::U { boxes } => {
            let b: Vec<_> = boxes
                .iter()
                .map(|b| kappa_tilde(&params, opts.gamma, b))
                .collect::<Result<_, _>>()?;
            let gamma = b.first().map_or(f64::NAN, |x| x.gamma);
            ("U", b.into_iter().map(|x| x.value).collect::<Vec<_>>(), gamma, *thr)
        }
        MinorizationChain::Z { boxes } => {
            let b: Vec<_> = boxes
                .iter()
                .map(|b| beta_measure(&params, opts.gamma, b))
                .collect::<Result<_, _>>()?;
            let gamma = b.first().map_or(f64::NAN, |x| x.gamma);
            (
                "Z",
                b.into_iter().map(|x| x.value).collect(),
                gamma,
                Thresholds::overshoot(Boundary::Strict),
            )
        }
    };
    let n_boxes = bounds.len();
    let mut results = Vec::with_capacity(probes.len() * n_boxes);
    let mut censored = Vec::with_capacity(probes.len());
    for (pi, probe) in probes.iter().enumerate() {
        let (counts, cens) = (0..opts.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let rng = replicate_rng(seed, r, pi as u64);
                let mut walker = Walker::new(kernel, probe.s_at_l, probe.x_at_l, rng);
                let mut tracker = CrossingTracker::new(tracker_thr, Side::Long);
                let mut hits = vec![0u64; n_boxes];
                for _ in 0..opts.max_steps_per_cycle {
                    if let Some(rec) = tracker.push(walker.advance()) {
                        for (i, hit) in hits.iter_mut().enumerate() {
                            let inside = match chain {
                                MinorizationChain::U { boxes } => {
                                    boxes[i].contains(&rec.state_vector())
                                }
                                MinorizationChain::Z { boxes } => {
                                    boxes[i].contains(rec.x_at_l, rec.s_at_l)
                                }
                            };
                            *hit += inside as u64;
                        }
                        return (hits, 0usize);
                    }
                }
                (hits, 1usize)
            })
            .reduce(
                || (vec![0u64; n_boxes], 0),
                |(mut a, ca), (b, cb)| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    (a, ca + cb)
                },
            );
        censored.push(cens);
        let n = opts.replicates as f64;
        for (bi, &count) in counts.iter().enumerate() {
            let q = count as f64 / n;
            let stderr = (q * (1.0 - q) / n).sqrt();
            let bound = opts.bound_scale * bounds[bi];
            results.push(ProbeBoxResult {
                probe: pi,
                target: bi,
                empirical: q,
                stderr,
                bound,
                violated: q < bound - 3.0 * stderr,
            });
        }
    }
    let violations = results.iter().filter(|r| r.violated).count();
    Ok(MinorizationReport {
        chain: name,
        replicates: opts.replicates,
        bound_scale: opts.bound_scale,
        gamma,
        bounds,
        results,
        violations,
        censored,
    })
}
