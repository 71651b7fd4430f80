//! Explicit minorization constants for both embedded chains.

use crossing_lab::ergodics::{beta_measure, irwin_hall_pdf, kappa_tilde, BoundParams, DeltaBox, UBox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = BoundParams {
        lower: -0.25,
        upper: 0.25,
        alpha: 0.9,
        h: 0.5,
        m: 1.0,
    };
    for m in 2..=5 {
        let b = UBox {
            x1: (-p.h, 0.0),
            x2: (p.lower - p.h, p.lower),
            x3: (0.0, p.h),
            x4: (p.upper, p.upper + p.m),
            duration: m,
        };
        let k = kappa_tilde(&p, None, &b)?;
        println!("kappa(duration {m}) = {:.3e} (series to j = {})", k.value, k.j_truncation);
    }
    let beta = beta_measure(&p, None, &DeltaBox { x: (0.0, 1.0), s: (0.0, 1.0) })?;
    println!("beta(Delta) = {:.3e}", beta.value);
    println!("f_3(1.5) = {}", irwin_hall_pdf(3, 1.5));
    Ok(())
}
