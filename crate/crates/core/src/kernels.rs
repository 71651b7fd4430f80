//! Increment kernels with a uniform minorization `P(x, ·) ≥ α·ℓ(·)`, where `ℓ`
//! is the normalized Lebesgue measure on `[-h, h]`.
//!
//! Each kernel is sampled through its splitting representation: with
//! probability `α` the next increment is `h(2u - 1)` regardless of the current
//! state, otherwise it is drawn from the residual kernel
//! `q(x, ·) = (P(x, ·) - α·ℓ(·)) / (1 - α)` by inverting its CDF.
//!
//! Three families are provided. None of them comes from an external source;
//! they are the smallest constructions that are bounded (or one-sided bounded),
//! have zero conditional mean and satisfy the minorization exactly:
//!
//! * [`Family::IidUniform`]: `P(x, ·) = Unif[-c, c]` for every `x`; minorized
//!   iff `α ≤ h / c`.
//! * [`Family::StateShape`]: residual `Unif[-b(x), b(x)]` with
//!   `b(x) = h + (M - h)·clip((x + M) / 2M, 0, 1)` on the state space `[-M, M]`.
//! * [`Family::OneSidedExp`]: residual mixes `Unif(0, M]` with weight
//!   `w(x) = w_min + (w_max - w_min)·logistic(x)` and `-Exp(λ(x))` with
//!   `λ(x) = (1 - w(x)) / (w(x)·M/2)`; state space `(-∞, M]`.

use rand::distr::{Open01, StandardUniform};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel spec: `{field}` {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("degenerate kernel: alpha = 1 leaves no residual component")]
    Degenerate,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> KernelError {
    KernelError::InvalidSpec {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// State-independent `Unif[-c, c]`.
    IidUniform { c: f64 },
    StateShape,
    OneSidedExp { w_min: f64, w_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: Family,
    pub alpha: f64,
    pub h: f64,
    /// Upper bound `M` of the increments.
    pub m: f64,
}

impl KernelSpec {
    pub fn iid_uniform(c: f64, alpha: f64, h: f64, m: f64) -> Self {
        Self {
            family: Family::IidUniform { c },
            alpha,
            h,
            m,
        }
    }

    pub fn state_shape(alpha: f64, h: f64, m: f64) -> Self {
        Self {
            family: Family::StateShape,
            alpha,
            h,
            m,
        }
    }

    pub fn one_sided_exp(w_min: f64, w_max: f64, alpha: f64, h: f64, m: f64) -> Self {
        Self {
            family: Family::OneSidedExp { w_min, w_max },
            alpha,
            h,
            m,
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let finite = |field, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, "must be finite"))
            }
        };
        finite("alpha", self.alpha)?;
        finite("h", self.h)?;
        finite("m", self.m)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid("alpha", format!("= {} is outside (0, 1]", self.alpha)));
        }
        if self.h <= 0.0 {
            return Err(invalid("h", format!("= {} must be positive", self.h)));
        }
        if self.h > self.m {
            return Err(invalid("h", format!("= {} exceeds m = {}", self.h, self.m)));
        }
        match self.family {
            Family::IidUniform { c } => {
                finite("c", c)?;
                if c < self.h || c > self.m {
                    return Err(invalid("c", format!("= {c} is outside [h, m]")));
                }
                if self.alpha > self.h / c {
                    return Err(invalid(
                        "alpha",
                        format!("= {} exceeds h / c = {}", self.alpha, self.h / c),
                    ));
                }
            }
            Family::StateShape => {
                if self.alpha >= 1.0 {
                    return Err(invalid("alpha", "= 1 leaves the residual kernel undefined"));
                }
            }
            Family::OneSidedExp { w_min, w_max } => {
                finite("w_min", w_min)?;
                finite("w_max", w_max)?;
                if self.alpha >= 1.0 {
                    return Err(invalid("alpha", "= 1 leaves the residual kernel undefined"));
                }
                if !(w_min > 0.0 && w_min < 1.0) {
                    return Err(invalid("w_min", format!("= {w_min} is outside (0, 1)")));
                }
                if !(w_max >= w_min && w_max < 1.0) {
                    return Err(invalid("w_max", format!("= {w_max} is outside [w_min, 1)")));
                }
            }
        }
        Ok(())
    }
}

/// One pair of driving uniforms and the regeneration flag it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDraw {
    pub u: f64,
    pub v: f64,
    pub regenerated: bool,
}

impl SplitDraw {
    pub fn new(u: f64, v: f64, alpha: f64) -> Self {
        Self {
            u,
            v,
            regenerated: v < alpha,
        }
    }
}

/// Closed form of the residual law, precomputed where it does not depend on
/// the state.
#[derive(Debug, Clone, Copy)]
enum Residual {
    /// Three uniform pieces on `[-c, -h]`, `[-h, h]`, `[h, c]`.
    Pieces { c: f64, outer_mass: f64, inner_mass: f64 },
    SymmetricUniform,
    ExpUniform { w_min: f64, w_max: f64 },
    /// `alpha = 1`: only the regeneration component exists.
    None,
}

/// A validated, immutable increment kernel.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    residual: Residual,
}

pub fn build_kernel(spec: KernelSpec) -> Result<Kernel, KernelError> {
    Kernel::new(spec)
}

impl Kernel {
    pub fn new(spec: KernelSpec) -> Result<Self, KernelError> {
        spec.validate()?;
        let residual = match spec.family {
            _ if spec.alpha >= 1.0 => Residual::None,
            Family::IidUniform { c } => {
                // q has density (1/2c - α/2h·1[-h,h]) / (1 - α)
                let outer_mass = (c - spec.h) / (2.0 * c) / (1.0 - spec.alpha);
                let inner_mass = (spec.h / c - spec.alpha) / (1.0 - spec.alpha);
                Residual::Pieces {
                    c,
                    outer_mass,
                    inner_mass,
                }
            }
            Family::StateShape => Residual::SymmetricUniform,
            Family::OneSidedExp { w_min, w_max } => Residual::ExpUniform { w_min, w_max },
        };
        Ok(Self { spec, residual })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn m(&self) -> f64 {
        self.spec.m
    }

    /// Closed interval containing every increment the kernel can produce.
    pub fn increment_support(&self) -> (f64, f64) {
        match self.spec.family {
            Family::IidUniform { c } => (-c, c),
            Family::StateShape => (-self.spec.m, self.spec.m),
            Family::OneSidedExp { .. } => (f64::NEG_INFINITY, self.spec.m),
        }
    }

    pub fn is_bounded_below(&self) -> bool {
        self.increment_support().0.is_finite()
    }

    /// Half-width `b(x)` of the `StateShape` residual.
    fn shape_half_width(&self, x: f64) -> f64 {
        let (h, m) = (self.spec.h, self.spec.m);
        h + (m - h) * ((x + m) / (2.0 * m)).clamp(0.0, 1.0)
    }

    /// Weight `w(x)` of the positive uniform piece and rate `λ(x)` of the
    /// negative exponential piece of the `OneSidedExp` residual.
    pub(crate) fn exp_mixture(&self, x: f64, w_min: f64, w_max: f64) -> (f64, f64) {
        let logistic = 1.0 / (1.0 + (-x).exp());
        let w = w_min + (w_max - w_min) * logistic;
        let lambda = (1.0 - w) / (w * self.spec.m / 2.0);
        (w, lambda)
    }

    /// The map `Φ(x, u, v)`: `h(2u - 1)` when `v < α`, else `q⁻¹(x, u)`.
    ///
    /// With `α = 1` the residual has no mass and every draw regenerates.
    pub fn split_step(&self, x: f64, u: f64, v: f64) -> (f64, bool) {
        if v < self.spec.alpha || matches!(self.residual, Residual::None) {
            (self.spec.h * (2.0 * u - 1.0), true)
        } else {
            (self.residual_quantile(x, u), false)
        }
    }

    /// Pseudoinverse `q⁻¹(x, u) = inf{r : q(x, (-∞, r]) ≥ u}` of the residual CDF.
    pub fn residual_inverse_cdf(&self, x: f64, u: f64) -> Result<f64, KernelError> {
        if matches!(self.residual, Residual::None) {
            return Err(KernelError::Degenerate);
        }
        Ok(self.residual_quantile(x, u.clamp(0.0, 1.0)))
    }

    fn residual_quantile(&self, x: f64, u: f64) -> f64 {
        let h = self.spec.h;
        match self.residual {
            Residual::Pieces {
                c,
                outer_mass,
                inner_mass,
            } => {
                let pieces = [(-c, -h, outer_mass), (-h, h, inner_mass), (h, c, outer_mass)];
                piecewise_uniform_quantile(&pieces, u)
            }
            Residual::SymmetricUniform => {
                let b = self.shape_half_width(x);
                -b + 2.0 * b * u
            }
            Residual::ExpUniform { w_min, w_max } => {
                let (w, lambda) = self.exp_mixture(x, w_min, w_max);
                let neg = 1.0 - w;
                if u < neg {
                    (u / neg).ln() / lambda
                } else {
                    self.spec.m * ((u - neg) / w).min(1.0)
                }
            }
            Residual::None => unreachable!("residual of a degenerate kernel"),
        }
    }

    /// Draws the driving uniforms for one step. `u` is taken from the open
    /// interval so that unbounded residuals never return `-∞`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SplitDraw {
        let u: f64 = rng.sample(Open01);
        let v: f64 = rng.sample(StandardUniform);
        SplitDraw::new(u, v, self.spec.alpha)
    }

    pub fn step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> (f64, bool) {
        let d = self.draw(rng);
        self.split_step(x, d.u, d.v)
    }
}

/// Quantile of a mixture of uniform pieces `(lo, hi, mass)` listed left to
/// right. Zero-mass pieces are skipped, which yields the left-continuous
/// pseudoinverse.
fn piecewise_uniform_quantile(pieces: &[(f64, f64, f64)], u: f64) -> f64 {
    let mut cum = 0.0;
    let mut last = None;
    for &(lo, hi, mass) in pieces {
        if mass <= 0.0 {
            continue;
        }
        if u <= cum + mass {
            let frac = ((u - cum) / mass).clamp(0.0, 1.0);
            return lo + frac * (hi - lo);
        }
        cum += mass;
        last = Some(hi);
    }
    last.expect("residual has positive total mass")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// Monte Carlo estimate of `∫ y P(x, dy)`.
pub fn check_zero_mean(kernel: &Kernel, x: f64, n_samples: u64, seed: u64) -> MeanEstimate {
    assert!(n_samples >= 1, "n_samples must be at least 1");
    let mut rng = rng::seeded(seed);
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        let (y, _) = kernel.step(x, &mut rng);
        let delta = y - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (y - mean);
    }
    let var = if n_samples > 1 {
        m2 / (n_samples - 1) as f64
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        stderr: (var / n_samples as f64).sqrt(),
        n_samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(c: f64, alpha: f64, h: f64) -> Kernel {
        Kernel::new(KernelSpec::iid_uniform(c, alpha, h, 1.0)).unwrap()
    }

    #[test]
    fn build_accepts_boundary_alpha() {
        assert!(Kernel::new(KernelSpec::iid_uniform(1.0, 0.5, 0.5, 1.0)).is_ok());
        assert!(Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0)).is_ok());
    }

    #[test]
    fn build_rejects_alpha_above_h_over_c() {
        let err = Kernel::new(KernelSpec::iid_uniform(1.0, 0.6, 0.5, 1.0)).unwrap_err();
        assert!(matches!(err, KernelError::InvalidSpec { field: "alpha", .. }));
    }

    #[test]
    fn build_names_offending_field() {
        let cases = [
            (KernelSpec::state_shape(0.0, 0.2, 1.0), "alpha"),
            (KernelSpec::state_shape(1.0, 0.2, 1.0), "alpha"),
            (KernelSpec::state_shape(0.5, 2.0, 1.0), "h"),
            (KernelSpec::state_shape(0.5, -1.0, 1.0), "h"),
            (KernelSpec::iid_uniform(1.5, 0.1, 0.5, 1.0), "c"),
            (KernelSpec::one_sided_exp(0.0, 0.5, 0.3, 0.2, 1.0), "w_min"),
            (KernelSpec::one_sided_exp(0.5, 1.0, 0.3, 0.2, 1.0), "w_max"),
        ];
        for (spec, field) in cases {
            match Kernel::new(spec) {
                Err(KernelError::InvalidSpec { field: f, .. }) => assert_eq!(f, field, "{spec:?}"),
                other => panic!("{spec:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn regenerated_step_ignores_state() {
        let k = Kernel::new(KernelSpec::state_shape(0.4, 0.3, 1.0)).unwrap();
        for x in [-1.0, -0.2, 0.0, 0.9] {
            assert_eq!(k.split_step(x, 0.5, 0.1), (0.0, true));
            assert_eq!(k.split_step(x, 1.0, 0.1), (0.3, true));
            assert_eq!(k.split_step(x, 0.0, 0.1), (-0.3, true));
        }
    }

    #[test]
    fn uniform_residual_median_and_endpoints() {
        let k = uniform(1.0, 0.25, 0.5);
        assert_eq!(k.residual_inverse_cdf(0.3, 0.0).unwrap(), -1.0);
        assert_eq!(k.residual_inverse_cdf(0.3, 1.0).unwrap(), 1.0);
        // residual is symmetric, so its median is 0
        assert!(k.residual_inverse_cdf(0.0, 0.5).unwrap().abs() < 1e-15);
        let (y, regen) = k.split_step(0.0, 0.5, 0.9);
        assert!(!regen && y.abs() < 1e-15);
    }

    #[test]
    fn uniform_residual_cdf_matches_analytic_form() {
        // q density: 1/(2c(1-α)) outside [-h,h], (1/2c - α/2h)/(1-α) inside
        let (c, alpha, h) = (1.0, 0.25, 0.5);
        let k = uniform(c, alpha, h);
        let d_out = 1.0 / (2.0 * c * (1.0 - alpha));
        let d_in = (1.0 / (2.0 * c) - alpha / (2.0 * h)) / (1.0 - alpha);
        let cdf = |r: f64| {
            if r < -h {
                (r + c) * d_out
            } else if r <= h {
                (c - h) * d_out + (r + h) * d_in
            } else {
                (c - h) * d_out + 2.0 * h * d_in + (r - h) * d_out
            }
        };
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let r = k.residual_inverse_cdf(0.0, u).unwrap();
            assert!((cdf(r) - u).abs() < 1e-12, "u={u} r={r}");
        }
    }

    #[test]
    fn boundary_alpha_residual_skips_empty_piece() {
        // α = h/c leaves no residual mass in [-h, h]
        let k = uniform(1.0, 0.5, 0.5);
        assert_eq!(k.residual_inverse_cdf(0.0, 0.5).unwrap(), -0.5);
        assert!(k.residual_inverse_cdf(0.0, 0.5 + 1e-9).unwrap() > 0.5);
    }

    #[test]
    fn degenerate_kernel_has_no_residual() {
        let k = Kernel::new(KernelSpec::iid_uniform(0.5, 1.0, 0.5, 1.0)).unwrap();
        assert_eq!(k.residual_inverse_cdf(0.0, 0.3), Err(KernelError::Degenerate));
        assert!(k.split_step(0.0, 0.7, 0.999).1);
    }

    #[test]
    fn one_sided_exp_residual_has_zero_mean() {
        let k = Kernel::new(KernelSpec::one_sided_exp(0.3, 0.7, 0.2, 0.25, 1.0)).unwrap();
        for x in [-2.0, 0.0, 0.8] {
            let (w, lambda) = k.exp_mixture(x, 0.3, 0.7);
            assert!((w * 0.5 - (1.0 - w) / lambda).abs() < 1e-14);
            assert_eq!(k.residual_inverse_cdf(x, 0.0).unwrap(), f64::NEG_INFINITY);
            assert_eq!(k.residual_inverse_cdf(x, 1.0).unwrap(), 1.0);
            assert_eq!(k.residual_inverse_cdf(x, 1.0 - w).unwrap(), 0.0);
        }
    }

    #[test]
    fn residual_quantile_is_monotone() {
        let kernels = [
            uniform(1.0, 0.25, 0.5),
            Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0)).unwrap(),
            Kernel::new(KernelSpec::one_sided_exp(0.3, 0.7, 0.2, 0.25, 1.0)).unwrap(),
        ];
        for k in &kernels {
            for x in [-0.9, 0.0, 0.7] {
                let mut prev = f64::NEG_INFINITY;
                for i in 0..=1000 {
                    let r = k.residual_inverse_cdf(x, i as f64 / 1000.0).unwrap();
                    assert!(r >= prev, "{:?} x={x} i={i}", k.spec());
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn zero_mean_within_four_stderr() {
        let cases = [
            (uniform(1.0, 0.25, 0.5), 0.0),
            (Kernel::new(KernelSpec::state_shape(0.3, 0.2, 1.0)).unwrap(), 0.7),
            (
                Kernel::new(KernelSpec::one_sided_exp(0.3, 0.7, 0.2, 0.25, 1.0)).unwrap(),
                -2.0,
            ),
        ];
        for (seed, (k, x)) in cases.iter().enumerate() {
            let est = check_zero_mean(k, *x, 1_000_000, 11 + seed as u64);
            assert!(est.stderr > 0.0);
            assert!(est.mean.abs() <= 4.0 * est.stderr, "{:?}: {est:?}", k.spec());
        }
    }

    #[test]
    fn spec_roundtrips_through_json() {
        let spec = KernelSpec::one_sided_exp(0.3, 0.7, 0.2, 0.25, 1.0);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<KernelSpec>(&text).unwrap(), spec);
        let parsed: KernelSpec =
            serde_json::from_str(r#"{"family":"state_shape","alpha":0.3,"h":0.2,"m":1}"#).unwrap();
        assert_eq!(parsed, KernelSpec::state_shape(0.3, 0.2, 1.0));
    }
}
