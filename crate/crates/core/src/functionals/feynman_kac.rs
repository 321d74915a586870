//! Feynman–Kac weights `𝒦_t(V; X) = exp(−∫ L^x_t V(dx))` on grid paths.
//!
//! Atom local times enter through their exact Brownian-bridge conditional
//! Laplace transform on each grid interval, so the weights are conditional
//! expectations given the grid values rather than plug-in estimates. The
//! density part uses the trapezoidal occupation integral. On Bessel-tail
//! intervals a level that lies strictly behind the moving frame at both
//! endpoints is never visited.

use super::local_time::{bridge_hit_probability, bridge_kill, local_time_band};
use super::FunctionalValue;
use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::path::SamplePath;
use crate::sturm_liouville::TailFactors;
use alloc::vec;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalTimeMethod {
    /// Exact conditional law of the bridge local time on each interval.
    BridgeExact,
    /// `(1/2ε)` times the occupation of `(−ε, ε)` around each atom.
    Band { eps: f64 },
}

#[inline]
fn reachable(path: &SamplePath, i: usize, level: f64) -> bool {
    match &path.tail {
        Some(t) if i >= t.start => t.frame_level(i, level) > 0.0 || t.frame_level(i + 1, level) > 0.0,
        _ => true,
    }
}

#[inline]
fn atom_factor(path: &SamplePath, i: usize, y: f64, lambda: f64) -> f64 {
    if !reachable(path, i, y) {
        return 1.0;
    }
    let x = &path.values;
    bridge_kill(x[i] - y, x[i + 1] - y, path.step(i), lambda)
}

#[inline]
fn density_step(v: &MeasureSpec, path: &SamplePath, i: usize) -> f64 {
    match v.density() {
        None => 0.0,
        Some(d) => 0.5 * path.step(i) * (d.eval(path.values[i]) + d.eval(path.values[i + 1])),
    }
}

/// Kill factor over intervals `[i0, i1)`.
pub fn kill_between(v: &MeasureSpec, path: &SamplePath, i0: usize, i1: usize) -> f64 {
    let mut prod = 1.0;
    let mut occ = 0.0;
    for i in i0..i1 {
        for &(y, lam) in v.atoms() {
            prod *= atom_factor(path, i, y, lam);
        }
        occ += density_step(v, path, i);
    }
    prod * (-occ).exp()
}

fn index_within(path: &SamplePath, t: f64) -> Result<usize> {
    let k = path.grid.index_of(t)?;
    if k > path.steps() {
        return Err(Error::BeyondHorizon { t, t_max: path.horizon() });
    }
    Ok(k)
}

/// `𝒦_t(V; X)`.
pub fn fk_weight_t(v: &MeasureSpec, path: &SamplePath, t: f64) -> Result<f64> {
    Ok(kill_between(v, path, 0, index_within(path, t)?))
}

pub fn fk_weight_t_with(v: &MeasureSpec, path: &SamplePath, t: f64, method: LocalTimeMethod) -> Result<f64> {
    match method {
        LocalTimeMethod::BridgeExact => fk_weight_t(v, path, t),
        LocalTimeMethod::Band { eps } => {
            let k = index_within(path, t)?;
            let mut expo = 0.0;
            for &(y, lam) in v.atoms() {
                expo += lam * local_time_band(path, y, t, eps)?;
            }
            for i in 0..k {
                expo += density_step(v, path, i);
            }
            Ok((-expo).exp())
        }
    }
}

/// `𝒦(V; X)` over the whole path, continued exactly along the Bessel tail
/// when `tail` is given; otherwise the horizon value, flagged as censored.
pub fn fk_weight_total(v: &MeasureSpec, path: &SamplePath, tail: Option<&TailFactors>) -> FunctionalValue {
    let k = kill_between(v, path, 0, path.steps());
    match (tail, &path.tail) {
        (Some(tf), Some(_)) => FunctionalValue::exact(k * tf.kill(path.last())),
        _ => FunctionalValue { value: k, censored: true, bias_bound: 0.0 },
    }
}

/// Probability, given the grid values, that the path never touches `level`
/// (bridge crossing probabilities between grid points, then the tail).
pub fn no_hit_probability(path: &SamplePath, level: f64) -> FunctionalValue {
    let x = &path.values;
    let mut p = 1.0;
    for i in 0..path.steps() {
        if reachable(path, i, level) {
            p *= 1.0 - bridge_hit_probability(x[i] - level, x[i + 1] - level, path.step(i));
            if p == 0.0 {
                return FunctionalValue::exact(0.0);
            }
        }
    }
    match &path.tail {
        Some(t) => {
            let n = path.steps();
            let a = t.frame_level(n, level);
            let r = t.sign * (path.last() - t.final_floor());
            let after = if a <= 0.0 {
                1.0
            } else if r <= a {
                0.0
            } else {
                1.0 - a / r
            };
            FunctionalValue::exact(p * after)
        }
        None => FunctionalValue { value: p, censored: true, bias_bound: 0.0 },
    }
}

/// Result of [`last_zero_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastZeroSummary {
    /// Mass (with kill) of paths that never touch 0.
    pub never: f64,
    /// Upper bound on `E[e^{−g}𝒦; last zero after the horizon]`.
    pub after_horizon_bound: f64,
    pub censored: bool,
}

/// Decomposes `E[𝒦(V; X); last zero of X in interval j | grid]` over grid
/// intervals. `visit(τ_j, mass_j)` receives a representative time of the
/// last zero inside interval `j` (its right end when the path sits exactly
/// at 0 there, the midpoint otherwise) and the interval's mass.
///
/// Within an interval the local time at an atom sitting at 0 is taken
/// jointly with the crossing event; other atoms enter through their own
/// conditional factors.
pub fn last_zero_sweep<F: FnMut(f64, f64)>(
    v: &MeasureSpec,
    path: &SamplePath,
    tail: Option<&TailFactors>,
    mut visit: F,
) -> LastZeroSummary {
    let n = path.steps();
    let x = &path.values;
    let lam0 = v.atoms().iter().find(|a| a.0 == 0.0).map(|a| a.1);
    let others = || v.atoms().iter().filter(|a| a.0 != 0.0);

    let (tail_avoid, after_bound, censored) = match (tail, &path.tail) {
        (Some(tf), Some(_)) => {
            let y = path.last();
            let all = tf.kill(y);
            let avoid = tf.kill_avoiding_zero(y);
            (avoid, (all - avoid).max(0.0), false)
        }
        _ => (1.0, 0.0, true),
    };

    // per-interval: hit probability, kill of the zero atom, joint hit-kill, other factors
    let mut p = vec![0.0; n];
    let mut o = vec![0.0; n];
    for i in 0..n {
        p[i] = if reachable(path, i, 0.0) { bridge_hit_probability(x[i], x[i + 1], path.step(i)) } else { 0.0 };
        let mut f = (-density_step(v, path, i)).exp();
        for &(y, lam) in others() {
            f *= atom_factor(path, i, y, lam);
        }
        o[i] = f;
    }
    let mut suffix = vec![0.0; n + 1];
    suffix[n] = tail_avoid;
    for i in (0..n).rev() {
        suffix[i] = (1.0 - p[i]) * o[i] * suffix[i + 1];
    }
    let mut prefix = 1.0;
    for i in 0..n {
        if p[i] > 0.0 {
            let (kz, hz) = match lam0 {
                Some(lam) => {
                    let kz = bridge_kill(x[i], x[i + 1], path.step(i), lam);
                    (kz, (kz - (1.0 - p[i])).max(0.0))
                }
                None => (1.0, p[i]),
            };
            let mass = prefix * hz * o[i] * suffix[i + 1];
            if mass > 0.0 {
                let tau = if x[i + 1] == 0.0 { path.time(i + 1) } else { path.time(i) + 0.5 * path.step(i) };
                visit(tau, mass);
            }
            prefix *= kz * o[i];
        } else {
            prefix *= o[i];
        }
    }
    LastZeroSummary {
        never: suffix[0],
        after_horizon_bound: (-path.horizon()).exp() * prefix * after_bound,
        censored,
    }
}

/// `Γ(V; X) = e^{−g} 𝒦(V; X)` given the grid values.
pub fn gamma_functional(v: &MeasureSpec, path: &SamplePath, tail: Option<&TailFactors>) -> FunctionalValue {
    let mut acc = crate::stats::KahanSum::new();
    let s = last_zero_sweep(v, path, tail, |tau, m| acc.add((-tau).exp() * m));
    acc.add(s.never);
    let half = 0.5 * s.after_horizon_bound;
    FunctionalValue { value: acc.value() + half, censored: s.censored, bias_bound: half }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::BesselTail;
    use crate::sturm_liouville::TailFactors;

    #[test]
    fn unreachable_levels_are_not_killed_in_tail() {
        // bridge ends at 0, Bessel above: atom at 0 only acts on the bridge part
        let tail = BesselTail { start: 2, sign: 1.0, floor: vec![0.0; 3] };
        let p = SamplePath::new(0.1, vec![0.0, 0.05, 0.0, 0.2, 0.3]).with_tail(tail);
        let v = MeasureSpec::atom(0.0, 1.0);
        let full = fk_weight_t(&v, &p, 0.4).unwrap();
        let bridge_only = fk_weight_t(&v, &p, 0.2).unwrap();
        assert_eq!(full, bridge_only);
    }

    #[test]
    fn gamma_on_untranslated_draw_is_exp_u_times_kill() {
        let tail = BesselTail { start: 3, sign: -1.0, floor: vec![0.0; 3] };
        let p = SamplePath::new(0.1, vec![0.0, 0.2, -0.1, 0.0, -0.3, -0.2]).with_tail(tail);
        let v = MeasureSpec::atom(0.0, 1.5);
        let tf = TailFactors::new(&v, 0.0, -1.0, 1e-3);
        let g = gamma_functional(&v, &p, Some(&tf));
        let k = fk_weight_total(&v, &p, Some(&tf));
        assert!(!g.censored);
        assert!((g.value - (-0.3f64).exp() * k.value).abs() < 1e-14);
    }

    #[test]
    fn gamma_without_atoms_is_discounted_last_zero_law() {
        // masses of the last-zero location plus the never-hit mass sum to one
        let p = SamplePath::new(0.1, vec![0.3, 0.2, -0.1, 0.25, 0.4]);
        let mut total = 0.0;
        let s = last_zero_sweep(&MeasureSpec::zero(), &p, None, |_, m| total += m);
        assert!((total + s.never - 1.0).abs() < 1e-14);
        assert!(s.censored);
    }

    #[test]
    fn no_hit_uses_tail() {
        let tail = BesselTail { start: 0, sign: 1.0, floor: vec![0.0; 2] };
        let p = SamplePath::new(0.1, vec![2.0, 2.0]).with_tail(tail).offset(1.0);
        // frame level of -0.0 relative to floor 1 is -1: never reached
        assert_eq!(no_hit_probability(&p, 0.0).value, 1.0);
        // level 2 in frame: 1 < r = 2
        let v = no_hit_probability(&p, 2.0).value;
        let direct = (1.0 - (-2.0 * 1.0 * 1.0 / 0.1f64).exp()).powi(1) * (1.0 - 1.0 / 2.0);
        assert!((v - direct).abs() < 1e-14);
    }
}
