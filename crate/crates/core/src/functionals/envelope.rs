//! The singular transform `f̃(t) = ∫_t^∞ |f(s)| (s − t)^{-1/2} ds` and the
//! Gaussian envelope `E(t)` bounding `R_a[|ℰ(f(·+t)) − 1|²]`.

use crate::integrand::Integrand;
use crate::special::{norm_pdf, Legendre};
use core::f64::consts::PI;
use num_traits::Float;

/// `f̃(t)`, exact for step integrands.
pub fn f_tilde(f: &Integrand, t: f64) -> f64 {
    f.pieces()
        .map(|(a, b, c)| {
            let hi = (b - t).max(0.0).sqrt();
            let lo = (a - t).max(0.0).sqrt();
            2.0 * c.abs() * (hi - lo)
        })
        .sum()
}

/// `∫₀^a f̃(t) dt`, exact for step integrands.
pub fn f_tilde_integral(f: &Integrand, a: f64) -> f64 {
    // ∫₀^a √((b − t)⁺) dt = (2/3)(b^{3/2} − ((b − a)⁺)^{3/2})
    let w = |b: f64| {
        let b = b.max(0.0);
        (2.0 / 3.0) * (b.powf(1.5) - (b - a).max(0.0).powf(1.5))
    };
    f.pieces().map(|(lo, hi, c)| 2.0 * c.abs() * (w(hi) - w(lo))).sum()
}

/// `E(t) = E[(exp(σ_t|N| + c f̃(t) + σ_t²/2) − 1)²]` with `σ_t` the tail
/// `L²` norm and `c = √(2/π)`; half-line Gauss–Legendre in `|N|`.
pub fn gaussian_envelope(f: &Integrand, t: f64) -> f64 {
    let sigma = f.tail_l2(t);
    let k = (2.0 / PI).sqrt() * f_tilde(f, t) + 0.5 * sigma * sigma;
    let g = |z: f64| {
        let e = (sigma * z + k).exp() - 1.0;
        2.0 * e * e * norm_pdf(z)
    };
    let top = 12.0 + 4.0 * sigma;
    Legendre::new(10).integrate(0.0, top, 48, g)
}
