//! Threshold trading: per-cycle profits and the long-run average utility
//! `lim (1/n) Σ u(profit_k) - p(duration_k)` over completed crossing cycles.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ergodics::batch_means_stderr;
use crate::kernels::Kernel;
use crate::rng::seeded;
use crate::walk::{CrossingRecord, CrossingTracker, Side, Thresholds, Walker};

pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;
pub const MIN_CYCLES: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum TradingError {
    #[error("invalid utility: {field} {reason}")]
    InvalidUtility { field: &'static str, reason: String },
    #[error("invalid penalty: {field} {reason}")]
    InvalidPenalty { field: &'static str, reason: String },
    #[error("{variant:?} objective needs a {needed:?} utility, got {got:?}")]
    DomainMismatch {
        variant: Variant,
        needed: WealthDomain,
        got: WealthDomain,
    },
    #[error("n_cycles must be at least {MIN_CYCLES}, got {0}")]
    TooFewCycles(usize),
    #[error("step budget of {max_steps} exhausted after {completed} counted cycles")]
    PathBudgetExceeded { max_steps: u64, completed: usize },
    #[error("short-side trading needs increments bounded below")]
    UnsupportedKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityKind {
    /// `u(w) = -exp(-a w)`.
    Exponential { risk_aversion: f64 },
    /// `u(w) = w^p / p` with `p < 0`.
    NegativePower { exponent: f64 },
    /// `u(w) = min(w, cap)`; no cap gives the identity.
    CappedLinear { cap: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WealthDomain {
    Wealth,
    PositiveWealth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    pub kind: UtilityKind,
    pub domain: WealthDomain,
}

impl UtilitySpec {
    pub fn exponential(risk_aversion: f64) -> Self {
        Self {
            kind: UtilityKind::Exponential { risk_aversion },
            domain: WealthDomain::Wealth,
        }
    }

    pub fn negative_power(exponent: f64) -> Self {
        Self {
            kind: UtilityKind::NegativePower { exponent },
            domain: WealthDomain::PositiveWealth,
        }
    }

    pub fn capped_linear(cap: Option<f64>) -> Self {
        Self {
            kind: UtilityKind::CappedLinear { cap },
            domain: WealthDomain::Wealth,
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        match self.kind {
            UtilityKind::Exponential { risk_aversion } => -(-risk_aversion * w).exp(),
            UtilityKind::NegativePower { exponent } => w.powf(exponent) / exponent,
            UtilityKind::CappedLinear { cap } => cap.map_or(w, |c| w.min(c)),
        }
    }

    /// Supremum over the domain; infinite for the uncapped identity.
    pub fn sup(&self) -> f64 {
        match self.kind {
            UtilityKind::Exponential { .. } | UtilityKind::NegativePower { .. } => 0.0,
            UtilityKind::CappedLinear { cap } => cap.unwrap_or(f64::INFINITY),
        }
    }

    /// Points on which monotonicity and the upper bound are checked.
    pub fn probe_grid(&self) -> Vec<f64> {
        match self.domain {
            WealthDomain::Wealth => (0..=400).map(|i| -20.0 + 0.1 * i as f64).collect(),
            WealthDomain::PositiveWealth => {
                (0..=400).map(|i| 10f64.powf(-4.0 + 0.02 * i as f64)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<(), TradingError> {
        let bad = |field, reason: &str| TradingError::InvalidUtility {
            field,
            reason: reason.to_string(),
        };
        match self.kind {
            UtilityKind::Exponential { risk_aversion: a } if !(a > 0.0 && a.is_finite()) => {
                return Err(bad("risk_aversion", "must be positive and finite"))
            }
            UtilityKind::NegativePower { exponent: p } if !(p < 0.0 && p.is_finite()) => {
                return Err(bad("exponent", "must be negative and finite"))
            }
            UtilityKind::NegativePower { .. } if self.domain != WealthDomain::PositiveWealth => {
                return Err(bad("domain", "negative power needs positive_wealth"))
            }
            UtilityKind::CappedLinear { cap: Some(c) } if !c.is_finite() => {
                return Err(bad("cap", "must be finite when given"))
            }
            _ => {}
        }
        let sup = self.sup();
        let mut prev = f64::NEG_INFINITY;
        for w in self.probe_grid() {
            let u = self.eval(w);
            if u.is_nan() || u < prev || u > sup {
                return Err(bad(
                    "kind",
                    &format!("not nondecreasing and bounded by {sup} at w = {w}"),
                ));
            }
            prev = u;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltySpec {
    /// `p(d) = min(slope · d, cap)`.
    LinearCapped { slope: f64, cap: f64 },
    ConstantZero,
}

impl PenaltySpec {
    pub fn eval(&self, duration: u64) -> f64 {
        match *self {
            PenaltySpec::LinearCapped { slope, cap } => (slope * duration as f64).min(cap),
            PenaltySpec::ConstantZero => 0.0,
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            PenaltySpec::LinearCapped { cap, .. } => cap,
            PenaltySpec::ConstantZero => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), TradingError> {
        if let PenaltySpec::LinearCapped { slope, cap } = *self {
            let bad = |field, reason: &str| TradingError::InvalidPenalty {
                field,
                reason: reason.to_string(),
            };
            if !(slope >= 0.0 && slope.is_finite()) {
                return Err(bad("slope", "must be nonnegative and finite"));
            }
            if !(cap >= 0.0 && cap.is_finite()) {
                return Err(bad("cap", "must be nonnegative and finite"));
            }
        }
        Ok(())
    }
}

/// Whether utility applies to the profit itself or to its exponential, the
/// latter matching a walk that models the log-price.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Level,
    LogPrice,
}

/// Everything that defines the objective apart from kernel and thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub utility: UtilitySpec,
    pub penalty: PenaltySpec,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub side: Side,
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<(), TradingError> {
        self.utility.validate()?;
        self.penalty.validate()?;
        let needed = match self.variant {
            Variant::Level => WealthDomain::Wealth,
            Variant::LogPrice => WealthDomain::PositiveWealth,
        };
        if self.utility.domain != needed {
            return Err(TradingError::DomainMismatch {
                variant: self.variant,
                needed,
                got: self.utility.domain,
            });
        }
        Ok(())
    }
}

/// Profit of one round trip of price `A_t = μt + S_t`.
///
/// Long: buy at the down-crossing, sell at the next up-crossing.
/// Short: sell at the up-crossing, buy back at the next down-crossing, so the
/// drift works against the position.
pub fn cycle_profit(rec: &CrossingRecord, mu: f64) -> f64 {
    let d = rec.duration as f64;
    match rec.side {
        Side::Long => rec.s_at_l - rec.s_at_t + mu * d,
        Side::Short => rec.s_at_l - rec.s_at_t - mu * d,
    }
}

/// `u(profit) - p(duration)`, or `u(exp(profit)) - p(duration)` for the
/// log-price variant.
pub fn objective_term(rec: &CrossingRecord, spec: &ObjectiveSpec) -> Result<f64, TradingError> {
    spec.validate()?;
    Ok(term_unchecked(rec, spec))
}

fn term_unchecked(rec: &CrossingRecord, spec: &ObjectiveSpec) -> f64 {
    let profit = cycle_profit(rec, spec.mu);
    let wealth = match spec.variant {
        Variant::Level => profit,
        Variant::LogPrice => profit.exp(),
    };
    spec.utility.eval(wealth) - spec.penalty.eval(rec.duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleTerm {
    pub cycle: u64,
    pub profit: f64,
    pub duration: u64,
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_cycles: usize,
    /// Walk steps consumed.
    pub steps: u64,
    pub per_cycle_terms: Option<Vec<CycleTerm>>,
}

impl ObjectiveEstimate {
    /// Columns `cycle,profit,duration,term,running_mean`; empty body when the
    /// trace was not kept.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "cycle,profit,duration,term,running_mean")?;
        let mut sum = 0.0;
        for (i, c) in self.per_cycle_terms.iter().flatten().enumerate() {
            sum += c.term;
            let running = sum / (i + 1) as f64;
            writeln!(
                out,
                "{},{},{},{},{}",
                c.cycle, c.profit, c.duration, c.term, running
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveOptions {
    pub max_steps: u64,
    pub keep_trace: bool,
    pub s0: f64,
    pub x0: f64,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            keep_trace: false,
            s0: 0.0,
            x0: 0.0,
        }
    }
}

/// Monte Carlo estimate of the long-run average objective from the first
/// `n_cycles` cycles of one path. The first cycle is skipped since its law
/// depends on the starting point.
pub fn long_run_objective(
    kernel: &Kernel,
    thr: &Thresholds,
    spec: &ObjectiveSpec,
    n_cycles: usize,
    seed: u64,
    opts: &ObjectiveOptions,
) -> Result<ObjectiveEstimate, TradingError> {
    spec.validate()?;
    if n_cycles < MIN_CYCLES {
        return Err(TradingError::TooFewCycles(n_cycles));
    }
    if spec.side == Side::Short && !kernel.is_bounded_below() {
        return Err(TradingError::UnsupportedKernel);
    }
    let mut walker = Walker::new(kernel, opts.s0, opts.x0, seeded(seed));
    let mut tracker = CrossingTracker::new(*thr, spec.side);
    let mut terms = Vec::with_capacity(n_cycles);
    let mut trace = opts.keep_trace.then(|| Vec::with_capacity(n_cycles));
    let mut steps = 0u64;
    while terms.len() < n_cycles {
        if steps == opts.max_steps {
            return Err(TradingError::PathBudgetExceeded {
                max_steps: opts.max_steps,
                completed: terms.len(),
            });
        }
        steps += 1;
        let Some(rec) = tracker.push(walker.advance()) else {
            continue;
        };
        if !rec.in_state_space {
            continue;
        }
        let term = term_unchecked(&rec, spec);
        terms.push(term);
        if let Some(t) = trace.as_mut() {
            t.push(CycleTerm {
                cycle: rec.index,
                profit: cycle_profit(&rec, spec.mu),
                duration: rec.duration,
                term,
            });
        }
    }
    Ok(ObjectiveEstimate {
        mean: terms.iter().sum::<f64>() / n_cycles as f64,
        stderr: batch_means_stderr(&terms),
        n_cycles,
        steps,
        per_cycle_terms: trace,
    })
}
