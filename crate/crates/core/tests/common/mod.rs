//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's samplers or quadrature.

#![allow(dead_code)]

use crossing_lab::ergodics::{BoundParams, DeltaBox, UBox};
use crossing_lab::kernels::{Family, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Bernoulli, Distribution, Exp, Uniform};

pub fn oracle_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_0dd5)
}

/// One increment from `P(x, ·)` written as a plain mixture, without the
/// splitting map or any quantile function.
pub fn direct_increment<R: Rng>(spec: &KernelSpec, x: f64, rng: &mut R) -> f64 {
    let (alpha, h, m) = (spec.alpha, spec.h, spec.m);
    match spec.family {
        Family::IidUniform { c } => Uniform::new_inclusive(-c, c).unwrap().sample(rng),
        Family::StateShape => {
            if Bernoulli::new(alpha).unwrap().sample(rng) {
                return Uniform::new_inclusive(-h, h).unwrap().sample(rng);
            }
            let b = h + (m - h) * ((x + m) / (2.0 * m)).clamp(0.0, 1.0);
            Uniform::new_inclusive(-b, b).unwrap().sample(rng)
        }
        Family::OneSidedExp { w_min, w_max } => {
            if Bernoulli::new(alpha).unwrap().sample(rng) {
                return Uniform::new_inclusive(-h, h).unwrap().sample(rng);
            }
            let w = w_min + (w_max - w_min) / (1.0 + (-x).exp());
            if Bernoulli::new(w).unwrap().sample(rng) {
                Uniform::new_inclusive(0.0, m).unwrap().sample(rng)
            } else {
                let mean = w * m / (2.0 * (1.0 - w));
                -Exp::new(1.0 / mean).unwrap().sample(rng)
            }
        }
    }
}

/// Histogram counts on `edges`, with values outside folded into the end bins.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<u64> {
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    for &v in values {
        let i = edges.partition_point(|&e| e <= v).saturating_sub(1).min(nb - 1);
        counts[i] += 1;
    }
    counts
}

/// TV between two equal-size histograms and `½ Σ` of the binomial standard
/// error of each bin difference under the pooled frequency.
pub fn tv_with_stderr(a: &[u64], b: &[u64]) -> (f64, f64) {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (na, nb) = (na as f64, nb as f64);
    let mut tv = 0.0;
    let mut se = 0.0;
    for (&ca, &cb) in a.iter().zip(b) {
        let (pa, pb) = (ca as f64 / na, cb as f64 / nb);
        tv += (pa - pb).abs();
        let p = (ca + cb) as f64 / (na + nb);
        se += (p * (1.0 - p) * (1.0 / na + 1.0 / nb)).sqrt();
    }
    (0.5 * tv, 0.5 * se)
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `f_m(t) = Σ_{k ≤ t} (-1)^k C(m, k) (t - k)^{m-1} / (m - 1)!`.
/// Reliable only for small `m` or small `t`.
pub fn irwin_hall_alternating(m: u32, t: f64) -> f64 {
    if t < 0.0 || t > m as f64 {
        return 0.0;
    }
    let fact: f64 = (1..m).map(|i| i as f64).product();
    (0..=t.floor() as u32)
        .map(|k| (-1f64).powi(k as i32) * binom(m, k) * (t - k as f64).powi(m as i32 - 1))
        .sum::<f64>()
        / fact
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let step = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * step);
    }
    acc * step / 3.0
}

/// `(f * 1_{[0,1]})(t) = ∫_{t-1}^{t} f(y) dy`, integrated piecewise between
/// integer knots where a spline density is smooth.
pub fn convolve_with_uniform(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let (a, b) = (t - 1.0, t);
    let mut knots = vec![a];
    let mut k = a.floor() + 1.0;
    while k < b {
        knots.push(k);
        k += 1.0;
    }
    knots.push(b);
    knots
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            // nudge toward the piece interior so indicator densities see their one-sided value
            let inner = |y: f64| f(y + (mid - y) * 1e-12);
            simpson(inner, w[0], w[1], 64)
        })
        .sum()
}

/// Essential infimum of `f_{order}` on `[lo, hi]` from a dense grid. The end
/// points are pulled inward by a hair so that the jump of `f_1` at an
/// interval end, a null set, does not count.
pub fn grid_min(order: u32, lo: f64, hi: f64) -> f64 {
    let n = 4000;
    let (lo, hi) = (lo + 1e-12, hi - 1e-12);
    (0..=n)
        .map(|i| irwin_hall_alternating(order, lo + (hi - lo) * i as f64 / n as f64))
        .fold(f64::INFINITY, f64::min)
}

/// `Σ_{j≥2} (α/2)^j min_{[lo, hi]} f_{j-1}` summed until the weights vanish.
pub fn omega_series(alpha: f64, lo: f64, hi: f64) -> f64 {
    let mut acc = 0.0;
    let mut j = 2u32;
    loop {
        let w = (alpha / 2.0).powi(j as i32);
        if w < 1e-20 || j > 400 {
            return acc;
        }
        acc += w * grid_min(j - 1, lo, hi).max(0.0);
        j += 1;
    }
}

/// Plain Monte Carlo mean of `g` over a product box; returns (integral, stderr).
fn mc_box<const D: usize>(
    ranges: [(f64, f64); D],
    n: usize,
    seed: u64,
    g: impl Fn(&[f64; D]) -> f64,
) -> (f64, f64) {
    let vol: f64 = ranges.iter().map(|r| (r.1 - r.0).max(0.0)).product();
    if vol == 0.0 {
        return (0.0, 0.0);
    }
    let mut rng = oracle_rng(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    let mut x = [0.0; D];
    for _ in 0..n {
        for (xi, r) in x.iter_mut().zip(&ranges) {
            *xi = r.0 + (r.1 - r.0) * rng.random::<f64>();
        }
        let v = g(&x);
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    (vol * mean, vol * (var / n as f64).sqrt())
}

/// `κ̃(B)` by Monte Carlo over `(x₁, x₂, x₃, x₄)` with the integrand and the
/// set `C_h` written out directly.
pub fn kappa_mc(p: &BoundParams, gamma: f64, b: &UBox, n: usize, seed: u64) -> (f64, f64) {
    let m = b.duration;
    if m < 2 {
        return (0.0, 0.0);
    }
    let (lo, hi, h, big_m, alpha) = (p.lower, p.upper, p.h, p.m, p.alpha);
    let spread = (hi - lo) / h;
    let series = omega_series(alpha, spread - gamma, spread + big_m / h);
    let scale = alpha.powi(m as i32) / (h.powi(4) * 2f64.powi(m as i32));
    let ranges = [
        (b.x1.0.max(-h), b.x1.1.min(0.0)),
        (b.x2.0.max(lo - h), b.x2.1.min(lo)),
        (b.x3.0.max(0.0), b.x3.1.min(h).min(big_m)),
        (b.x4.0.max(hi), b.x4.1.min(hi + big_m)),
    ];
    mc_box(ranges, n, seed, |x| {
        let [x1, x2, x3, x4] = *x;
        let in_u = x1 < 0.0 && x2 < lo && x3 > 0.0 && x3 <= big_m && x4 > hi && x4 < hi + big_m;
        let in_c = (-h..=0.0).contains(&x1)
            && x2 - x1 >= lo
            && x2 - x1 <= lo + gamma * h
            && (0.0..=h).contains(&x3)
            && x4 - x3 <= hi;
        if in_u && in_c {
            scale * irwin_hall_alternating(m - 1, (x4 - x3 - x2) / h) * series
        } else {
            0.0
        }
    })
}

/// `β(A)` by Monte Carlo in the coordinates `(u, v)` of the last up-jump,
/// where the set is `{(hv, s̄ - hu + hv) ∈ A ∩ (0, min(h, M)]², hu - s̄ ≥ γ′ min(M, h)}`
/// under Lebesgue measure `du dv`. The result does not depend on `s̄`.
pub fn beta_mc(p: &BoundParams, gamma: f64, a: &DeltaBox, s_bar: f64, n: usize, seed: u64) -> (f64, f64) {
    let (h, big_m) = (p.h, p.m);
    let r = (big_m / h).min(1.0);
    let series = omega_series(p.alpha, gamma * r, big_m / h + r);
    let side = h.min(big_m);
    let ranges = [(s_bar / h, s_bar / h + 1.0), (0.0, 1.0)];
    mc_box(ranges, n, seed, |uv| {
        let (u, v) = (uv[0], uv[1]);
        let (x1, x2) = (h * v, s_bar - h * u + h * v);
        let inside = x1 > 0.0
            && x1 <= side
            && x2 > 0.0
            && x2 <= side
            && a.contains(x1, x2)
            && h * u - s_bar >= gamma * side;
        if inside {
            series
        } else {
            0.0
        }
    })
}

/// The `n`-th overshoot `(X_{L_n}, S_{L_n})` of an i.i.d. `Unif[-c, c]` walk
/// from zero with strict zero thresholds, or `None` past `max_steps`.
pub fn iid_overshoot<R: Rng>(c: f64, n: usize, max_steps: u64, rng: &mut R) -> Option<(f64, f64)> {
    let dist = Uniform::new_inclusive(-c, c).unwrap();
    let mut s = 0.0;
    let mut below = false;
    let mut seen = 0;
    for _ in 0..max_steps {
        let x = dist.sample(rng);
        s += x;
        if !below {
            below = s < 0.0;
        } else if s > 0.0 {
            below = false;
            seen += 1;
            if seen == n {
                return Some((x, s));
            }
        }
    }
    None
}
