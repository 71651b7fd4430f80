//! Explicit lower bounds for the one-step kernels of the crossing chain `U_n`
//! and the overshoot chain `Z_n = (X_{L_n}, S_{L_n})`.
//!
//! Both bounds are integrals of a series `Σ_j (α/2)^j ω_j` against a density
//! built from Irwin–Hall laws. The `U` bound
//!
//! ```text
//! κ̃(B) = ∫_{B ∩ C_h} α^m / (h⁴ 2^m) f_{m-1}((x₄ - x₃ - x₂)/h) Σ_{j≥2} (α/2)^j ω_j dx ⊗ δ(dm)
//! ```
//!
//! depends on `(x₁, x₃)` only through indicators, so `x₁` and `x₃` are
//! integrated out exactly as interval overlaps and the remaining integral over
//! `(x₂, e = x₄ - x₃)` is done with Gauss–Legendre on pieces cut at every kink
//! of the integrand. The rules are exact on each piece, and panel refinement
//! is kept as a convergence check.

use serde::{Deserialize, Serialize};

use super::irwin_hall::irwin_hall_pdf;
use super::quadrature::Rule;
use super::ErgodicsError;

const SERIES_REL_TOL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-6;
const MAX_PANELS: usize = 64;

/// Model constants entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub h: f64,
    pub m: f64,
}

/// Box `[x₁] × [x₂] × [x₃] × [x₄] × {duration}` in the state space of `U_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UBox {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    pub x3: (f64, f64),
    pub x4: (f64, f64),
    pub duration: u32,
}

impl UBox {
    pub fn contains(&self, u: &[f64; 5]) -> bool {
        let inside = |(lo, hi): (f64, f64), v: f64| v >= lo && v <= hi;
        inside(self.x1, u[0])
            && inside(self.x2, u[1])
            && inside(self.x3, u[2])
            && inside(self.x4, u[3])
            && u[4] == self.duration as f64
    }
}

/// Box `[x] × [s]` in `Δ = {(x, s) ∈ (0, M]² : x ≥ s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBox {
    pub x: (f64, f64),
    pub s: (f64, f64),
}

impl DeltaBox {
    pub fn contains(&self, x: f64, s: f64) -> bool {
        x >= self.x.0 && x <= self.x.1 && s >= self.s.0 && s <= self.s.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationBound {
    /// `γ̃` (crossing chain) or `γ̃′` (overshoot chain).
    pub gamma: f64,
    /// Last series index kept.
    pub j_truncation: u32,
    /// `ω_j` for `j = 2..=j_truncation`.
    pub omega: Vec<f64>,
    /// `Σ_{j=2}^{J} (α/2)^j ω_j`.
    pub series: f64,
    pub value: f64,
    /// Panels per piece at which the quadrature settled.
    pub panels: usize,
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Minimum of `f_{j-1}` over `[lo, hi]`. Irwin–Hall densities are log-concave,
/// hence unimodal, so the minimum sits at an endpoint; interior knots are
/// checked as well.
fn irwin_hall_min(order: u32, lo: f64, hi: f64) -> f64 {
    let mut min = irwin_hall_pdf(order, lo).min(irwin_hall_pdf(order, hi));
    let mut knot = lo.floor() + 1.0;
    while knot < hi {
        min = min.min(irwin_hall_pdf(order, knot));
        knot += 1.0;
    }
    min
}

/// `Σ_{j≥2} (α/2)^j ω_j` with `ω_j = min f_{j-1}` on `[lo, hi]`, truncated once
/// the tail bound `Σ_{j>J} (α/2)^j` (densities never exceed 1) falls below
/// `SERIES_REL_TOL` of the partial sum.
fn omega_series(alpha: f64, lo: f64, hi: f64) -> (f64, u32, Vec<f64>) {
    let ratio = alpha / 2.0;
    let first_positive = (hi.floor() as u32).saturating_add(2).max(2);
    let j_cap = first_positive + 4000;
    let mut omega = Vec::new();
    let mut partial = 0.0;
    let mut weight = ratio * ratio;
    let mut j = 2u32;
    loop {
        let w = if lo > 0.0 { irwin_hall_min(j - 1, lo, hi) } else { 0.0 };
        omega.push(w);
        partial += weight * w;
        let tail = weight * ratio / (1.0 - ratio);
        if (partial > 0.0 && tail < SERIES_REL_TOL * partial) || j >= j_cap {
            return (partial, j, omega);
        }
        weight *= ratio;
        j += 1;
    }
}

fn refine(mut eval: impl FnMut(usize) -> f64) -> (f64, usize) {
    let mut panels = 1;
    let mut prev = eval(panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = eval(panels);
        let scale = next.abs().max(f64::MIN_POSITIVE);
        if (next - prev).abs() <= QUAD_REL_TOL * scale {
            return (next, panels);
        }
        prev = next;
    }
    (prev, panels)
}

/// Lower bound `κ̃(B)` for the crossing chain's transition kernel.
/// `gamma_tilde` defaults to `min((θ̄ - θ̲)/h, 1) / 2`.
pub fn kappa_tilde(
    p: &BoundParams,
    gamma_tilde: Option<f64>,
    b: &UBox,
) -> Result<MinorizationBound, ErgodicsError> {
    let spread = (p.upper - p.lower) / p.h;
    let limit = spread.min(1.0);
    let gamma = gamma_tilde.unwrap_or(limit / 2.0);
    if !(gamma > 0.0 && gamma < limit) {
        return Err(ErgodicsError::InvalidGamma { gamma, limit });
    }
    let (series, j_truncation, omega) =
        omega_series(p.alpha, spread - gamma, spread + p.m / p.h);
    let mut bound = MinorizationBound {
        gamma,
        j_truncation,
        omega,
        series,
        value: 0.0,
        panels: 0,
    };
    let m = b.duration;
    if m < 2 {
        return Ok(bound);
    }
    let h = p.h;
    let gh = gamma * h;
    // x₁ ∈ [-h, 0], θ̲ ≤ x₂ - x₁ ≤ θ̲ + γ̃h, x₂ < θ̲
    let i1 = (b.x1.0.max(-h), b.x1.1.min(0.0));
    let x2_range = (
        b.x2.0.max(i1.0 + p.lower),
        b.x2.1.min(p.lower).min(i1.1 + p.lower + gh),
    );
    // x₃ ∈ [0, h] ∩ (0, M], x₄ ∈ (θ̄, θ̄ + M), e = x₄ - x₃ ≤ θ̄
    let i3 = (b.x3.0.max(0.0), b.x3.1.min(h).min(p.m));
    let i4 = (b.x4.0.max(p.upper), b.x4.1.min(p.upper + p.m));
    let e_range = (i4.0 - i3.1, (i4.1 - i3.0).min(p.upper));
    if i1.1 <= i1.0 || i3.1 <= i3.0 || i4.1 <= i4.0 || x2_range.1 <= x2_range.0 || e_range.1 <= e_range.0 {
        return Ok(bound);
    }
    let w = |x2: f64| overlap(i1, (x2 - p.lower - gh, x2 - p.lower));
    let v = |e: f64| overlap(i3, (i4.0 - e, i4.1 - e));
    let v_breaks = [i4.0 - i3.1, i4.0 - i3.0, i4.1 - i3.1, i4.1 - i3.0, e_range.0, e_range.1];
    let mut x2_breaks = vec![
        i1.0 + p.lower,
        i1.1 + p.lower,
        i1.0 + p.lower + gh,
        i1.1 + p.lower + gh,
    ];
    for k in 0..m {
        for bp in v_breaks {
            x2_breaks.push(bp - h * k as f64);
        }
    }
    let order = m - 1;
    let rule = Rule::new(m as usize / 2 + 3);
    let (integral, panels) = refine(|panels| {
        rule.integrate(x2_range.0, x2_range.1, &x2_breaks, panels, |x2| {
            let wx = w(x2);
            if wx == 0.0 {
                return 0.0;
            }
            let mut breaks = v_breaks.to_vec();
            breaks.extend((0..=order).map(|k| x2 + h * k as f64));
            let inner = rule.integrate(e_range.0, e_range.1, &breaks, panels, |e| {
                v(e) * irwin_hall_pdf(order, (e - x2) / h)
            });
            wx * inner
        })
    });
    let scale = (p.alpha / 2.0).powi(m as i32) / h.powi(4);
    bound.value = (scale * series * integral).max(0.0);
    bound.panels = panels;
    Ok(bound)
}

/// Lower bound `β(A)` for the overshoot chain's transition kernel.
/// `gamma_prime` defaults to `1/2`.
///
/// The density is `Σ_{l≥2} (α/2)^l ω′_l / h²` on
/// `{(x₁, x₂) ∈ (0, h]² : x₁ - x₂ ≥ γ̃′ min(M, h)}`; the `1/h²` is the Jacobian
/// of `(x₁, x₂) = (hv, s̄ - hu + hv)`.
pub fn beta_measure(
    p: &BoundParams,
    gamma_prime: Option<f64>,
    a: &DeltaBox,
) -> Result<MinorizationBound, ErgodicsError> {
    let gamma = gamma_prime.unwrap_or(0.5);
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ErgodicsError::InvalidGamma { gamma, limit: 1.0 });
    }
    let ratio_mh = (p.m / p.h).min(1.0);
    let (series, j_truncation, omega) =
        omega_series(p.alpha, gamma * ratio_mh, p.m / p.h + ratio_mh);
    let mut bound = MinorizationBound {
        gamma,
        j_truncation,
        omega,
        series,
        value: 0.0,
        panels: 0,
    };
    let gap = gamma * p.m.min(p.h);
    let j1 = (a.x.0.max(0.0), a.x.1.min(p.h).min(p.m));
    let j2 = (a.s.0.max(0.0), a.s.1.min(p.h).min(p.m));
    if j1.1 <= j1.0 || j2.1 <= j2.0 {
        return Ok(bound);
    }
    let rule = Rule::new(2);
    let breaks = [j2.0 + gap, j2.1 + gap];
    let (area, panels) = refine(|panels| {
        rule.integrate(j1.0, j1.1, &breaks, panels, |x1| {
            overlap(j2, (f64::NEG_INFINITY, x1 - gap))
        })
    });
    bound.value = (series * area / (p.h * p.h)).max(0.0);
    bound.panels = panels;
    Ok(bound)
}
