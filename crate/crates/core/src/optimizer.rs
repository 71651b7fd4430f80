//! Threshold optimization: exhaustive grid search and a projected
//! Kiefer–Wolfowitz stochastic approximation.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::Kernel;
use crate::trading::{long_run_objective, ObjectiveOptions, ObjectiveSpec, TradingError};
use crate::walk::{Boundary, Thresholds};

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("objective at ({lower}, {upper}): {source}")]
    Objective {
        lower: f64,
        upper: f64,
        source: TradingError,
    },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> OptimizerError {
    OptimizerError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

/// Rectangle of candidate `(θ̲, θ̄)` with grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdBox {
    pub lower_range: (f64, f64),
    pub upper_range: (f64, f64),
    pub grid_counts: (usize, usize),
    /// Minimum distance of either range from zero.
    pub margin: f64,
}

impl ThresholdBox {
    /// Checks the ranges against the margin, which must be at least `h / 10`.
    /// A count of 1 is allowed for a degenerate range `lo == hi`.
    pub fn validate(&self, h: f64) -> Result<(), OptimizerError> {
        if !(self.margin >= h / 10.0) {
            return Err(invalid("margin", format!("{} is below h/10 = {}", self.margin, h / 10.0)));
        }
        let check = |field, (lo, hi): (f64, f64), count: usize| {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid(field, format!("[{lo}, {hi}] is not a finite interval")));
            }
            if count == 0 || (count == 1) != (lo == hi) {
                return Err(invalid(
                    "grid_counts",
                    format!("count {count} does not fit range [{lo}, {hi}]"),
                ));
            }
            Ok(())
        };
        check("lower_range", self.lower_range, self.grid_counts.0)?;
        check("upper_range", self.upper_range, self.grid_counts.1)?;
        if self.lower_range.1 > -self.margin {
            return Err(invalid("lower_range", "must stay below -margin"));
        }
        if self.upper_range.0 < self.margin {
            return Err(invalid("upper_range", "must stay above margin"));
        }
        Ok(())
    }

    fn axis((lo, hi): (f64, f64), count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![lo];
        }
        (0..count)
            .map(|i| {
                if i == count - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect()
    }

    /// Grid points, lower threshold varying slowest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let uppers = Self::axis(self.upper_range, self.grid_counts.1);
        Self::axis(self.lower_range, self.grid_counts.0)
            .into_iter()
            .flat_map(|l| uppers.iter().map(move |&u| (l, u)))
            .collect()
    }

    pub fn project(&self, (l, u): (f64, f64)) -> (f64, f64) {
        (
            l.clamp(self.lower_range.0, self.lower_range.1),
            u.clamp(self.upper_range.0, self.upper_range.1),
        )
    }

    pub fn contains(&self, theta: (f64, f64)) -> bool {
        self.project(theta) == theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub mean: f64,
    pub stderr: f64,
    pub n_cycles: usize,
}

/// Noisy objective in the thresholds; equal seeds mean common random numbers.
pub trait ObjectiveEvaluator: Sync {
    fn evaluate(&self, lower: f64, upper: f64, seed: u64) -> Result<Evaluation, OptimizerError>;
}

/// Deterministic objective from a plain function, for tests and demos.
pub struct FnObjective<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> ObjectiveEvaluator for FnObjective<F> {
    fn evaluate(&self, lower: f64, upper: f64, _seed: u64) -> Result<Evaluation, OptimizerError> {
        Ok(Evaluation {
            mean: (self.0)(lower, upper),
            stderr: 0.0,
            n_cycles: 0,
        })
    }
}

/// The simulated long-run trading objective.
pub struct SimulatedObjective {
    pub kernel: Kernel,
    pub spec: ObjectiveSpec,
    pub n_cycles: usize,
    pub boundary: Boundary,
    pub options: ObjectiveOptions,
}

impl ObjectiveEvaluator for SimulatedObjective {
    fn evaluate(&self, lower: f64, upper: f64, seed: u64) -> Result<Evaluation, OptimizerError> {
        let thr = Thresholds::new(lower, upper, self.boundary)
            .map_err(|e| invalid("thresholds", e.to_string()))?;
        let est = long_run_objective(&self.kernel, &thr, &self.spec, self.n_cycles, seed, &self.options)
            .map_err(|source| OptimizerError::Objective {
                lower,
                upper,
                source,
            })?;
        Ok(Evaluation {
            mean: est.mean,
            stderr: est.stderr,
            n_cycles: est.n_cycles,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: (f64, f64),
    pub best_row: usize,
    pub surface: Vec<SurfaceRow>,
}

impl GridResult {
    pub fn write_surface_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta_lower,theta_upper,mean,stderr,n_cycles")?;
        for r in &self.surface {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.theta_lower, r.theta_upper, r.mean, r.stderr, r.n_cycles
            )?;
        }
        Ok(())
    }
}

/// Evaluates every grid point with the same seed and returns the argmax.
/// Ties go to the narrower band `θ̄ - θ̲`, then to the smaller `(θ̲, θ̄)`.
pub fn grid_search(
    objective: &impl ObjectiveEvaluator,
    bx: &ThresholdBox,
    seed: u64,
) -> Result<GridResult, OptimizerError> {
    let surface = bx
        .points()
        .into_par_iter()
        .map(|(l, u)| {
            objective.evaluate(l, u, seed).map(|e| SurfaceRow {
                theta_lower: l,
                theta_upper: u,
                mean: e.mean,
                stderr: e.stderr,
                n_cycles: e.n_cycles,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let better = |a: &SurfaceRow, b: &SurfaceRow| {
        a.mean
            .total_cmp(&b.mean)
            .then((b.theta_upper - b.theta_lower).total_cmp(&(a.theta_upper - a.theta_lower)))
            .then(b.theta_lower.total_cmp(&a.theta_lower))
            .then(b.theta_upper.total_cmp(&a.theta_upper))
    };
    let best_row = (0..surface.len())
        .max_by(|&i, &j| better(&surface[i], &surface[j]))
        .ok_or_else(|| invalid("grid_counts", "empty grid"))?;
    Ok(GridResult {
        best: (surface[best_row].theta_lower, surface[best_row].theta_upper),
        best_row,
        surface,
    })
}

/// Gains `a_n = a0 / (n + A)^γa` and perturbations `c_n = c0 / n^γc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KwConfig {
    #[serde(default = "defaults::a0")]
    pub a0: f64,
    #[serde(default = "defaults::big_a")]
    pub big_a: f64,
    #[serde(default = "defaults::gamma_a")]
    pub gamma_a: f64,
    #[serde(default = "defaults::c0")]
    pub c0: f64,
    #[serde(default = "defaults::gamma_c")]
    pub gamma_c: f64,
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    pub projection: ThresholdBox,
}

mod defaults {
    pub fn a0() -> f64 {
        1.0
    }
    pub fn big_a() -> f64 {
        10.0
    }
    pub fn gamma_a() -> f64 {
        1.0
    }
    pub fn c0() -> f64 {
        0.1
    }
    pub fn gamma_c() -> f64 {
        0.25
    }
    pub fn iterations() -> usize {
        500
    }
}

impl KwConfig {
    pub fn with_projection(projection: ThresholdBox) -> Self {
        Self {
            a0: defaults::a0(),
            big_a: defaults::big_a(),
            gamma_a: defaults::gamma_a(),
            c0: defaults::c0(),
            gamma_c: defaults::gamma_c(),
            iterations: defaults::iterations(),
            projection,
        }
    }

    /// `a0 = 0` is accepted and freezes the iterate.
    pub fn validate(&self, h: f64) -> Result<(), OptimizerError> {
        if !(self.gamma_a > 0.5 && self.gamma_a <= 1.0) {
            return Err(invalid("gamma_a", "must lie in (0.5, 1]"));
        }
        if !(self.gamma_c > 0.0 && self.gamma_c < 0.5) {
            return Err(invalid("gamma_c", "must lie in (0, 0.5)"));
        }
        if !(self.a0 >= 0.0 && self.a0.is_finite()) {
            return Err(invalid("a0", "must be nonnegative and finite"));
        }
        if !(self.big_a > 0.0 && self.big_a.is_finite()) {
            return Err(invalid("big_a", "must be positive and finite"));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(invalid("c0", "must be positive and finite"));
        }
        self.projection.validate(h)
    }

    pub fn gain(&self, n: usize) -> f64 {
        self.a0 / (n as f64 + self.big_a).powf(self.gamma_a)
    }

    pub fn perturbation(&self, n: usize) -> f64 {
        self.c0 / (n as f64).powf(self.gamma_c)
    }
}

/// One iteration: `θ_n`, the gradient estimate there and the objective value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KwStep {
    pub iter: usize,
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub grad_lower: f64,
    pub grad_upper: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KwTrajectory {
    pub steps: Vec<KwStep>,
    pub final_theta: (f64, f64),
}

impl KwTrajectory {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "iter,theta_lower,theta_upper,grad_lower,grad_upper,value")?;
        for s in &self.steps {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.iter, s.theta_lower, s.theta_upper, s.grad_lower, s.grad_upper, s.value
            )?;
        }
        Ok(())
    }
}

/// Projected ascent `θ_{n+1} = Π(θ_n + a_n ĝ_n)` with two-sided differences.
///
/// Step `n` evaluates everything with seed `seed + n`. Probes are projected
/// into the box, and each difference is divided by the actual probe spacing.
pub fn kiefer_wolfowitz(
    objective: &impl ObjectiveEvaluator,
    cfg: &KwConfig,
    theta0: (f64, f64),
    seed: u64,
) -> Result<KwTrajectory, OptimizerError> {
    let bx = &cfg.projection;
    if !bx.contains(theta0) {
        return Err(invalid("theta0", format!("{theta0:?} lies outside the projection box")));
    }
    let mut theta = theta0;
    let mut steps = Vec::with_capacity(cfg.iterations);
    for n in 1..=cfg.iterations {
        let s = seed.wrapping_add(n as u64);
        let c = cfg.perturbation(n);
        let f = |t: (f64, f64)| objective.evaluate(t.0, t.1, s).map(|e| e.mean);
        let diff = |plus: (f64, f64), minus: (f64, f64), width: f64| -> Result<f64, OptimizerError> {
            if width == 0.0 {
                return Ok(0.0);
            }
            Ok((f(plus)? - f(minus)?) / width)
        };
        let (lp, lm) = (bx.project((theta.0 + c, theta.1)), bx.project((theta.0 - c, theta.1)));
        let (up, um) = (bx.project((theta.0, theta.1 + c)), bx.project((theta.0, theta.1 - c)));
        let g = (diff(lp, lm, lp.0 - lm.0)?, diff(up, um, up.1 - um.1)?);
        steps.push(KwStep {
            iter: n,
            theta_lower: theta.0,
            theta_upper: theta.1,
            grad_lower: g.0,
            grad_upper: g.1,
            value: f(theta)?,
        });
        let a = cfg.gain(n);
        theta = bx.project((theta.0 + a * g.0, theta.1 + a * g.1));
    }
    Ok(KwTrajectory {
        steps,
        final_theta: theta,
    })
}
