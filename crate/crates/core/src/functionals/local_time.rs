//! Local times: the band estimator and the exact Brownian-bridge conditional
//! law on a grid interval.

use crate::error::Result;
use crate::path::SamplePath;
use crate::special::erfcx;
use core::f64::consts::PI;
use num_traits::Float;

/// Band estimator `(1/2ε) ∫₀ᵗ 1{|X_s − level| < ε} ds` (left Riemann sum).
pub fn local_time_band(path: &SamplePath, level: f64, t: f64, eps: f64) -> Result<f64> {
    let k = path.grid.index_of(t)?;
    if k > path.steps() {
        return Err(crate::error::Error::BeyondHorizon { t, t_max: path.horizon() });
    }
    let count = path.values[..k].iter().filter(|&&x| (x - level).abs() < eps).count();
    Ok(count as f64 * path.dt() / (2.0 * eps))
}

/// `L⁰_t` by the band estimator; `eps = None` uses `√dt`.
pub fn local_time_zero(path: &SamplePath, t: f64, eps: Option<f64>) -> Result<f64> {
    local_time_band(path, 0.0, t, eps.unwrap_or_else(|| path.dt().sqrt()))
}

/// Probability that a Brownian bridge from `a` to `b` over time `h` touches
/// 0 (`a`, `b` relative to the level).
#[inline]
pub fn bridge_hit_probability(a: f64, b: f64, h: f64) -> f64 {
    if a * b <= 0.0 {
        1.0
    } else {
        (-2.0 * a * b / h).exp()
    }
}

/// `E[exp(−λ ℓ)]` for the local time `ℓ` at 0 of a Brownian bridge from `a`
/// to `b` over time `h`.
///
/// Uses `P(ℓ > y) = exp(−((|a| + |b| + y)² − (b − a)²) / 2h)`, which gives
/// `1 − λ √(πh/2) · erfcx((|a|+|b|+λh)/√(2h)) · exp(((b−a)² − (|a|+|b|)²)/2h)`.
#[inline]
pub fn bridge_kill(a: f64, b: f64, h: f64, lambda: f64) -> f64 {
    let c = a.abs() + b.abs();
    // (b−a)² − c² = −4ab when a, b share a sign, 0 otherwise
    let e = if a * b > 0.0 { -2.0 * a * b / h } else { 0.0 };
    if e < -745.0 {
        return 1.0;
    }
    let z = (c + lambda * h) / (2.0 * h).sqrt();
    1.0 - lambda * (PI * h / 2.0).sqrt() * erfcx(z) * e.exp()
}

/// `E[exp(−λℓ); ℓ > 0]`.
#[inline]
pub fn bridge_kill_on_hit(a: f64, b: f64, h: f64, lambda: f64) -> f64 {
    let k = bridge_kill(a, b, h, lambda);
    let p = bridge_hit_probability(a, b, h);
    (k - (1.0 - p)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::Legendre;

    #[test]
    fn kill_reduces_to_hit_probability_at_infinite_rate() {
        let (a, b, h) = (0.3, 0.2, 0.1);
        let k = bridge_kill(a, b, h, 1e9);
        assert!((k - (1.0 - bridge_hit_probability(a, b, h))).abs() < 1e-6);
        assert_eq!(bridge_kill(a, b, h, 0.0), 1.0);
    }

    #[test]
    fn kill_matches_direct_integral_of_tail() {
        // 1 − λ ∫ e^{−λy} P(ℓ > y) dy by quadrature
        let q = Legendre::new(10);
        for &(a, b, h, lam) in &[(0.1, -0.2, 0.05, 2.0), (0.05, 0.02, 0.01, 1.0), (0.0, 0.0, 1.0, 3.0)] {
            let c: f64 = a.abs() + b.abs();
            let d: f64 = b - a;
            let tail = |y: f64| (-((c + y).powi(2) - d * d) / (2.0 * h)).exp();
            let integral = q.integrate(0.0, 20.0, 200, |y| lam * (-lam * y).exp() * tail(y));
            assert!((bridge_kill(a, b, h, lam) - (1.0 - integral)).abs() < 1e-12);
        }
    }

    #[test]
    fn integrated_over_endpoint_gives_bm_laplace_transform() {
        // E_0[e^{−λ L_t}] = erfcx(λ √(t/2)), mixing the bridge law over B_t ~ N(0, t)
        let q = Legendre::new(10);
        for &(t, lam) in &[(1.0f64, 1.0), (0.3, 2.5)] {
            let f = |z: f64| crate::special::norm_pdf(z) * bridge_kill(0.0, z * t.sqrt(), t, lam);
            let s = q.integrate(-12.0, 0.0, 60, f) + q.integrate(0.0, 12.0, 60, f);
            assert!((s - erfcx(lam * (t / 2.0).sqrt())).abs() < 1e-11);
        }
    }

    #[test]
    fn band_estimator_on_constant_path() {
        let p = SamplePath::new(0.5, vec![0.0; 5]);
        // ε = 0.25: (1/0.5) · 4 · 0.5
        assert_eq!(local_time_zero(&p, 2.0, Some(0.25)).unwrap(), 4.0);
        assert_eq!(local_time_zero(&p, 0.0, Some(0.25)).unwrap(), 0.0);
    }
}
