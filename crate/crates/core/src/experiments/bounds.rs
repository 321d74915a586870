//! Analytic bounds on the part of a `W`-integral coming from bridge lengths
//! beyond the proposal cap `U`.

use crate::functionals::bridge_kill;
use crate::measure::MeasureSpec;
use crate::special::{norm_pdf, Legendre};
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

/// `∫_U^∞ F(u) du/√(2πu)` for `F(u) = O(1/u)`, in `v = u^{-1/2}`.
pub fn tail_integral<F: FnMut(f64) -> f64>(u_cap: f64, mut f: F) -> f64 {
    let vmax = 1.0 / u_cap.sqrt();
    let q = Legendre::new(10);
    q.integrate(0.0, vmax, 24, |v| 2.0 * f(1.0 / (v * v)) / (v * v)) / (2.0 * PI).sqrt()
}

/// `E[F(sd·N)]`, split at the kinks of `F`.
pub fn normal_average<F: FnMut(f64) -> f64>(sd: f64, kinks: &[f64], mut f: F) -> f64 {
    if sd == 0.0 {
        return f(0.0);
    }
    let (lo, hi) = (-10.0 * sd, 10.0 * sd);
    let mut cuts: Vec<f64> = kinks.iter().copied().filter(|&k| k > lo && k < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.insert(0, lo);
    cuts.push(hi);
    let q = Legendre::new(8);
    cuts.windows(2)
        .map(|w| q.integrate(w[0], w[1], 8, |x| f(x) * norm_pdf(x / sd) / sd))
        .sum()
}

/// `Σ_y ν(dy) E[e^{−M ℓ^y}]` for a bridge from `a` to `b` over `h`, with
/// `M` the mass of `v` and `ν = v/M`; by Jensen this bounds the
/// bridge's expected kill.
fn jensen_kill(v: &MeasureSpec, a: f64, b: f64, h: f64) -> f64 {
    let m = v.mass();
    if m == 0.0 {
        return 1.0;
    }
    v.integrate(|y| bridge_kill(a - y, b - y, h, m)) / m
}

/// Gaussian data of `∫ f dX` on a bridge of length `u` with `supp f ⊂ [0, s]`:
/// the exponential tilt shifts `X_s` by `total·(1 − s/u)` and the density
/// `ℰ(f)` has mean `exp(−total²/2u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedKill {
    pub s: f64,
    /// `∫ f`.
    pub total: f64,
}

/// Upper bound on `E[ℰ(f) · 𝒦(V; x + X on [s, u])]` for `X` a bridge of
/// length `u > s`.
pub fn tilted_kill_bound(v: &MeasureSpec, x: f64, tilt: TiltedKill, u: f64) -> f64 {
    let TiltedKill { s, total } = tilt;
    let shift = total * (1.0 - s / u);
    let prefactor = (-total * total / (2.0 * u)).exp();
    let sd = (s * (u - s) / u).max(0.0).sqrt();
    let mut kinks: Vec<f64> = v.atoms().iter().map(|a| a.0 - x - shift).collect();
    if let Some(d) = v.density() {
        kinks.extend(d.knots().iter().map(|k| k - x - shift));
    }
    prefactor * normal_average(sd, &kinks, |xi| jensen_kill(v, x + xi + shift, x, u - s))
}

/// Bound on `∫_U^∞ du/√(2πu) E[𝒦(V; x + X on [s, ∞))]` for `W_x`.
pub fn kill_tail_bound(v: &MeasureSpec, x: f64, s: f64, u_cap: f64) -> f64 {
    tail_integral(u_cap, |u| tilted_kill_bound(v, x, TiltedKill { s, total: 0.0 }, u))
}

/// `P(a bridge of length u avoids level m on [t, u])` bound, given that the
/// path is `X + h` with `h` constant `−m` after `t`.
fn avoid_probability(m: f64, t: f64, u: f64) -> f64 {
    let e_abs = (2.0 * t / PI).sqrt();
    (2.0 * (e_abs + m.abs()) * m.abs() / (u - t)).min(1.0)
}

/// Bound on `∫_U^∞ du/√(2πu) E[e^{−g(X+h)}; g(X+h) ≥ a, g(X+h) ≤ b]` where
/// `h` is constant `h_inf` after `s`. `b = ∞` allowed.
pub fn last_zero_tail_bound(h_inf: f64, s: f64, a: f64, b: f64, u_cap: f64) -> f64 {
    let m = -h_inf;
    tail_integral(u_cap, |u| {
        if b.is_finite() {
            // g ∈ [a, b] needs no zero in (b, u]
            return (-a).exp() * avoid_probability(m, b.max(s), u);
        }
        // split g over [a + k, a + k + 1)
        let kmax = ((u / 2.0 - a).floor().max(0.0) as usize).min(200);
        let mut acc = 0.0;
        for k in 0..kmax {
            let t = (a + k as f64 + 1.0).max(s);
            acc += (-(a + k as f64)).exp() * avoid_probability(m, t, u);
        }
        acc + (-(a + kmax as f64)).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::erfcx;

    #[test]
    fn tail_integral_of_power() {
        let u = 50.0;
        let got = tail_integral(u, |u| 1.0 / u);
        assert!((got - 2.0 / (2.0 * PI * u).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normal_average_of_abs() {
        let got = normal_average(1.7, &[0.0], f64::abs);
        assert!((got - 1.7 * (2.0 / PI).sqrt()).abs() < 1e-10);
        assert_eq!(normal_average(0.0, &[], |x| x + 3.0), 3.0);
    }

    #[test]
    fn bridge_mixture_gives_phi_at_zero() {
        // W[e^{−λ L^0}] = 1/λ: the bridge part alone carries all local time at 0
        let lam = 1.3;
        let v = MeasureSpec::atom(0.0, lam);
        let q = Legendre::new(10);
        // ∫_0^1 in u = r²: du/√(2πu) = 2 dr/√(2π)
        let head = q.integrate(0.0, 1.0, 40, |r| 2.0 * bridge_kill(0.0, 0.0, r * r, lam)) / (2.0 * PI).sqrt();
        let tail = kill_tail_bound(&v, 0.0, 0.0, 1.0);
        assert!((head + tail - 1.0 / lam).abs() < 1e-9, "{}", head + tail);
        // closed form of the bridge factor
        let u: f64 = 3.0;
        let k = 1.0 - lam * (PI * u / 2.0).sqrt() * erfcx(lam * (u / 2.0).sqrt());
        assert!((jensen_kill(&v, 0.0, 0.0, u) - k).abs() < 1e-15);
    }

    #[test]
    fn tilt_reduces_to_plain_bound() {
        let v = MeasureSpec::new(alloc::vec![(0.0, 1.0), (1.0, 0.5)], None).unwrap();
        let plain = tilted_kill_bound(&v, 0.2, TiltedKill { s: 0.0, total: 0.0 }, 100.0);
        assert!((plain - jensen_kill(&v, 0.2, 0.2, 100.0)).abs() < 1e-15);
        // the kill bound decays like 1/u
        let far = tilted_kill_bound(&v, 0.2, TiltedKill { s: 1.0, total: 0.7 }, 1e4);
        let farther = tilted_kill_bound(&v, 0.2, TiltedKill { s: 1.0, total: 0.7 }, 1e5);
        assert!(farther < far && farther * 1e5 < 2.0 * far * 1e4);
    }

    #[test]
    fn last_zero_bound_decays_like_inverse_root() {
        let b1 = last_zero_tail_bound(0.5, 1.0, 0.0, f64::INFINITY, 1e4);
        let b2 = last_zero_tail_bound(0.5, 1.0, 0.0, f64::INFINITY, 4e4);
        assert!((b1 / b2 - 2.0).abs() < 0.05);
        assert!(last_zero_tail_bound(0.0, 1.0, 0.0, f64::INFINITY, 1e4) < 1e-80);
    }
}
