//! Exact continuation of Feynman–Kac weights along a Bessel(3) tail.
//!
//! For a Bessel(3) process `R` started at `r` and a killing measure `v` in
//! the frame of `R`, Doob's `h`-transform with `h(r) = r` gives
//!
//! ```text
//! E_r[exp(−∫ v(R)) ; R never hits a] = ψ(r) / (r · ψ'(∞)),
//! ```
//!
//! where `ψ'' = 2vψ`, `ψ(a) = 0`, `ψ'(a) = 1` (take `a = 0` for no
//! constraint). Past the support of `v`, `ψ` is linear.

use super::{build_nodes, hermite, shoot, Profile};
use crate::measure::MeasureSpec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct BesselTailFactor {
    profile: Profile,
    lo: f64,
    slope: f64,
}

impl BesselTailFactor {
    /// `frame_v` is the killing measure expressed in the Bessel frame.
    pub fn new(frame_v: &MeasureSpec, lo: f64, step: f64) -> Self {
        let top = frame_v.support().map_or(lo, |s| s.1.max(lo));
        let hi = top + 1.0;
        let mut extra: Vec<f64> = frame_v.atoms().iter().map(|a| a.0).collect();
        if let Some(d) = frame_v.density() {
            extra.extend_from_slice(d.knots());
        }
        let nodes = build_nodes(lo, hi, step, &extra);
        let profile = shoot(frame_v, &nodes, 0.0, 1.0);
        let slope = *profile.p_right.last().unwrap();
        Self { profile, lo, slope }
    }

    /// Expected kill factor from frame position `r` (0 below the
    /// avoided level).
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.lo {
            return if self.lo == 0.0 && r == 0.0 { 1.0 / self.slope } else { 0.0 };
        }
        let n = self.profile.x.len() - 1;
        let top = self.profile.x[n];
        let psi = if r >= top {
            self.profile.y[n] + self.slope * (r - top)
        } else {
            hermite(&self.profile, r).0
        };
        psi / (r * self.slope)
    }
}

/// Continuation factors for a path whose tail is `sign · Bessel(3)` above
/// `floor`, killed by `v` (path coordinates), with level 0 tracked for
/// last-exit functionals.
#[derive(Debug, Clone)]
pub struct TailFactors {
    pub floor: f64,
    pub sign: f64,
    level: f64,
    all: BesselTailFactor,
    avoid: Option<BesselTailFactor>,
}

impl TailFactors {
    pub fn new(v: &MeasureSpec, floor: f64, sign: f64, step: f64) -> Self {
        let fv = v.reframed(floor, sign);
        let level = sign * (0.0 - floor);
        let all = BesselTailFactor::new(&fv, 0.0, step);
        let avoid = (level > 0.0).then(|| BesselTailFactor::new(&fv, level, step));
        Self { floor, sign, level, all, avoid }
    }

    pub fn matches(&self, floor: f64, sign: f64) -> bool {
        self.sign == sign && (self.floor - floor).abs() <= 1e-12 * (1.0 + floor.abs())
    }

    #[inline]
    pub fn frame(&self, y: f64) -> f64 {
        self.sign * (y - self.floor)
    }

    /// `E[𝒦(V; tail)]` from path value `y` at the horizon.
    pub fn kill(&self, y: f64) -> f64 {
        self.all.eval(self.frame(y))
    }

    /// `E[𝒦(V; tail); tail avoids 0]`.
    pub fn kill_avoiding_zero(&self, y: f64) -> f64 {
        match &self.avoid {
            Some(a) => a.eval(self.frame(y)),
            None => self.kill(y),
        }
    }

    /// `P(tail reaches 0)`.
    pub fn zero_hit_probability(&self, y: f64) -> f64 {
        if self.level <= 0.0 {
            return 0.0;
        }
        let r = self.frame(y);
        if r <= self.level {
            1.0
        } else {
            self.level / r
        }
    }
}

/// Precomputed [`TailFactors`] keyed by `(floor, sign)`.
#[derive(Debug, Clone, Default)]
pub struct TailCache {
    entries: Vec<TailFactors>,
}

impl TailCache {
    /// Factors for both signs at each floor.
    pub fn new(v: &MeasureSpec, floors: &[f64], step: f64) -> Self {
        let mut entries = Vec::new();
        for &c in floors {
            for s in [1.0, -1.0] {
                if !entries.iter().any(|e: &TailFactors| e.matches(c, s)) {
                    entries.push(TailFactors::new(v, c, s, step));
                }
            }
        }
        Self { entries }
    }

    pub fn get(&self, floor: f64, sign: f64) -> Option<&TailFactors> {
        self.entries.iter().find(|e| e.matches(floor, sign))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_tail_is_one_and_avoidance_is_one_minus_a_over_r() {
        let t = TailFactors::new(&MeasureSpec::zero(), -1.0, 1.0, 1e-3);
        assert!((t.kill(3.0) - 1.0).abs() < 1e-12);
        // frame of y: y + 1, level frame 1
        let r = 3.0 + 1.0;
        assert!((t.kill_avoiding_zero(3.0) - (1.0 - 1.0 / r)).abs() < 1e-12);
        assert!((t.zero_hit_probability(3.0) - 0.25).abs() < 1e-15);
        assert_eq!(t.kill_avoiding_zero(-0.5), 0.0);
    }

    #[test]
    fn single_atom_from_origin() {
        // Bessel(3) from 0 has L^b_∞ ~ Exp(mean 2b): E[e^{-λL}] = 1/(1+2λb)
        for &(b, lam) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.3)] {
            let f = BesselTailFactor::new(&MeasureSpec::atom(b, lam), 0.0, 1e-3);
            assert!((f.eval(0.0) - 1.0 / (1.0 + 2.0 * lam * b)).abs() < 1e-12);
            // from r > b: hit with prob b/r
            let r = 3.0 * b;
            let want = 1.0 - b / r + (b / r) / (1.0 + 2.0 * lam * b);
            assert!((f.eval(r) - want).abs() < 1e-12, "{} {}", f.eval(r), want);
        }
    }

    #[test]
    fn cache_lookup() {
        let c = TailCache::new(&MeasureSpec::atom(0.0, 1.0), &[0.0, 0.5], 1e-2);
        assert!(c.get(0.5, -1.0).is_some());
        assert!(c.get(0.25, 1.0).is_none());
    }
}
