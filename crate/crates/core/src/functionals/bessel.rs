//! Mean of the Bessel(3) process and the centered Wiener integral.

use crate::error::Result;
use crate::integrand::Integrand;
use crate::path::SamplePath;
use crate::special::Legendre;
use core::f64::consts::PI;
use num_traits::Float;

/// `φ_a(t) = E[1/R_t]` for Bessel(3) from `a`: `(1/a) erf(a/√(2t))`,
/// `φ_0(t) = √(2/(πt))`.
pub fn phi_a(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        return (2.0 / (PI * t)).sqrt();
    }
    libm::erf(a / (2.0 * t).sqrt()) / a
}

/// `m_a(t) = a + ∫₀ᵗ φ_a(s) ds`, integrated in `r = √s`.
pub fn bessel_mean(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return a;
    }
    if a == 0.0 {
        return (8.0 * t / PI).sqrt();
    }
    let q = Legendre::new(10);
    let rt = t.sqrt();
    // integrand 2r φ_a(r²) varies on the scale a near 0: doubling panels
    let f = |r: f64| if r == 0.0 { 0.0 } else { 2.0 * r * phi_a(a, r * r) };
    let mut acc = 0.0;
    let (mut lo, mut hi) = (0.0, a.min(rt));
    loop {
        acc += q.integrate(lo, hi, 4, f);
        if hi >= rt {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(rt);
    }
    a + acc
}

/// `∫ f dX − ∫ f φ_a` for a path of `R_a^+`.
pub fn centered_wiener_integral(f: &Integrand, path: &SamplePath, a: f64) -> Result<f64> {
    let raw = super::wiener::wiener_integral(f, path, None)?;
    let g = &path.grid;
    let drift: f64 = f
        .pieces()
        .filter(|p| p.2 != 0.0)
        .map(|(s, t, c)| {
            let (s, t) = (g.time(g.nearest(s)), g.time(g.nearest(t)));
            c * (bessel_mean(a, t) - bessel_mean(a, s))
        })
        .sum();
    Ok(raw - drift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(a: f64, t: f64) -> f64 {
        let s = (2.0 * t).sqrt();
        (a + t / a) * libm::erf(a / s) + (2.0 * t / PI).sqrt() * (-a * a / (2.0 * t)).exp()
    }

    #[test]
    fn mean_matches_noncentral_chi() {
        for &a in &[1e-3, 0.1, 1.0, 3.0] {
            for &t in &[0.01, 0.5, 2.0, 10.0] {
                let m = bessel_mean(a, t);
                assert!((m - closed_form(a, t)).abs() < 1e-10 * (1.0 + m), "a={a} t={t}");
            }
        }
    }

    #[test]
    fn phi_continuity_at_zero() {
        assert!((phi_a(1e-8, 1.0) - phi_a(0.0, 1.0)).abs() < 1e-12);
        assert!(phi_a(1.0, 1.0) <= phi_a(0.0, 1.0));
    }
}
