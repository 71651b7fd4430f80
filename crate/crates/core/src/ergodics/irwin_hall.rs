//! Irwin–Hall density `f_m`, the law of a sum of `m` independent `Unif[0, 1]`.
//!
//! `f_m` is the cardinal B-spline of order `m`, so it is evaluated with the
//! Cox–de Boor recursion
//! `f_r(t) = (t f_{r-1}(t) + (r - t) f_{r-1}(t - 1)) / (r - 1)`,
//! whose terms are all nonnegative. The textbook alternating sum
//! `Σ (-1)^k C(m, k) (t - k)^{m-1} / (m - 1)!` loses most of its digits to
//! cancellation once `m` is in the twenties.

/// Density of the sum of `m ≥ 1` independent uniforms on `[0, 1]`; zero outside
/// `[0, m]`. `f_1` is taken as the indicator of the closed interval.
pub fn irwin_hall_pdf(m: u32, t: f64) -> f64 {
    assert!(m >= 1, "Irwin-Hall order must be at least 1");
    let mf = m as f64;
    if !(0.0..=mf).contains(&t) {
        return 0.0;
    }
    // piece [k, k+1] containing t, with s = t - k ∈ [0, 1]
    let k = (t.floor() as u32).min(m - 1);
    let s = t - k as f64;
    // vals[d] = f_r(s + d), d = 0..r-1
    let m = m as usize;
    let mut vals = vec![0.0; m];
    vals[0] = 1.0;
    for r in 2..=m {
        let rf = r as f64;
        for d in (0..r).rev() {
            let df = d as f64;
            let here = if d < r - 1 { vals[d] } else { 0.0 };
            let left = if d > 0 { vals[d - 1] } else { 0.0 };
            vals[d] = ((s + df) * here + (rf - s - df) * left) / (rf - 1.0);
        }
    }
    vals[k as usize]
}

/// CDF of the Irwin–Hall law, via `F_m(t) = Σ_{i ≥ 0} f_{m+1}(t - i)`.
pub fn irwin_hall_cdf(m: u32, t: f64) -> f64 {
    assert!(m >= 1, "Irwin-Hall order must be at least 1");
    if t <= 0.0 {
        return 0.0;
    }
    if t >= m as f64 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut i = 0.0;
    while t - i > 0.0 {
        acc += irwin_hall_pdf(m + 1, t - i);
        i += 1.0;
    }
    acc.min(1.0)
}
