//! Deterministic integrands `f ∈ L²(ℝ₊)` used for translations and Wiener
//! integrals.
//!
//! Every integrand is a right-continuous step function with finitely many
//! pieces: `f = levels[k]` on `[breaks[k], breaks[k+1])` and zero after the
//! last break. Tabulated integrands are step functions on uniform cells.

use crate::error::{Error, Result};
use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct Integrand {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl Integrand {
    pub fn step(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breaks.len() != levels.len() + 1 {
            return Err(Error::InvalidIntegrand(format!(
                "{} breaks for {} levels",
                breaks.len(),
                levels.len()
            )));
        }
        if breaks.first().map_or(true, |&b| b < 0.0) {
            return Err(Error::InvalidIntegrand("breaks must start at t >= 0".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidIntegrand("breaks must be finite and increasing".into()));
        }
        if levels.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidIntegrand("levels must be finite".into()));
        }
        Ok(Self { breaks, levels })
    }

    pub fn zero() -> Self {
        Self { breaks: alloc::vec![0.0], levels: Vec::new() }
    }

    /// `c · 1_[a, b)`.
    pub fn indicator(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::step(alloc::vec![a, b], alloc::vec![c])
    }

    /// Cell-constant values on `[i·dt, (i+1)·dt)`.
    pub fn tabulated(dt: f64, values: Vec<f64>) -> Result<Self> {
        let breaks = (0..=values.len()).map(|i| i as f64 * dt).collect();
        Self::step(breaks, values)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .map(|(k, &c)| (self.breaks[k], self.breaks[k + 1], c))
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&c| c == 0.0)
    }

    /// Right end of the support (0 for the zero integrand).
    pub fn support_end(&self) -> f64 {
        self.pieces()
            .filter(|p| p.2 != 0.0)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.pieces()
            .find(|&(a, b, _)| a <= t && t < b)
            .map_or(0.0, |p| p.2)
    }

    /// Primitive `h(t) = ∫₀ᵗ f`.
    pub fn primitive(&self, t: f64) -> f64 {
        self.pieces()
            .map(|(a, b, c)| c * (b.min(t) - a).max(0.0))
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.pieces().map(|(a, b, c)| c * (b - a)).sum()
    }

    pub fn l1(&self) -> f64 {
        self.pieces().map(|(a, b, c)| c.abs() * (b - a)).sum()
    }

    /// `∫_s^t f²`.
    pub fn l2_sq_between(&self, s: f64, t: f64) -> f64 {
        self.pieces()
            .map(|(a, b, c)| c * c * (b.min(t) - a.max(s)).max(0.0))
            .sum()
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq_between(0.0, f64::INFINITY).sqrt()
    }

    /// `σ_t = (∫_t^∞ f²)^{1/2}`.
    pub fn tail_l2(&self, t: f64) -> f64 {
        self.l2_sq_between(t, f64::INFINITY).sqrt()
    }

    /// `∫_t^∞ |f|`.
    pub fn tail_l1(&self, t: f64) -> f64 {
        self.pieces()
            .map(|(a, b, c)| c.abs() * (b - a.max(t)).max(0.0))
            .sum()
    }

    /// `s ↦ f(s + t)`.
    pub fn shifted(&self, t: f64) -> Self {
        let mut breaks = alloc::vec![0.0];
        let mut levels = Vec::new();
        for (a, b, c) in self.pieces() {
            if b <= t {
                continue;
            }
            let a = (a - t).max(0.0);
            if a > *breaks.last().unwrap() {
                breaks.push(a);
                levels.push(0.0);
            }
            breaks.push(b - t);
            levels.push(c);
        }
        Self { breaks, levels }
    }

    /// `f · 1_[0, T)`.
    pub fn truncated(&self, t_cut: f64) -> Self {
        let mut breaks = alloc::vec![self.breaks[0]];
        let mut levels = Vec::new();
        for (a, b, c) in self.pieces() {
            if a >= t_cut {
                break;
            }
            breaks.push(b.min(t_cut));
            levels.push(c);
        }
        Self { breaks, levels }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { breaks: self.breaks.clone(), levels: self.levels.iter().map(|c| c * k).collect() }
    }

    /// Breaks rounded to the nearest multiple of `dt`; pieces that collapse
    /// are dropped.
    pub fn snapped(&self, dt: f64) -> Self {
        let snap = |t: f64| (t / dt).round() * dt;
        let mut breaks = alloc::vec![snap(self.breaks[0])];
        let mut levels = Vec::new();
        for (_, b, c) in self.pieces() {
            let b = snap(b);
            if b > *breaks.last().unwrap() {
                breaks.push(b);
                levels.push(c);
            }
        }
        Self { breaks, levels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_primitive() {
        let f = Integrand::indicator(0.0, 1.0, 1.0).unwrap();
        assert_eq!(f.primitive(0.5), 0.5);
        assert_eq!(f.primitive(2.0), 1.0);
        assert_eq!(f.value(1.0), 0.0);
        assert_eq!(f.support_end(), 1.0);
    }

    #[test]
    fn three_piece_norms() {
        let f = Integrand::step(vec![0.0, 1.0, 2.0, 4.0], vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(f.l1(), 1.0 + 2.0 + 1.0);
        assert_eq!(f.l2_sq_between(0.0, f64::INFINITY), 1.0 + 4.0 + 0.5);
        assert_eq!(f.tail_l2(3.0), (0.25f64).sqrt());
        assert_eq!(f.tail_l1(1.5), 1.0 + 1.0);
        assert_eq!(f.total(), 1.0 - 2.0 + 1.0);
    }

    #[test]
    fn shift_and_truncate() {
        let f = Integrand::step(vec![0.0, 1.0, 2.0, 4.0], vec![1.0, -2.0, 0.5]).unwrap();
        let g = f.shifted(1.5);
        assert_eq!(g.value(0.0), -2.0);
        assert_eq!(g.value(0.6), 0.5);
        assert_eq!(g.support_end(), 2.5);
        let g = f.shifted(10.0);
        assert!(g.is_zero());
        let tr = f.truncated(1.5);
        assert_eq!(tr.support_end(), 1.5);
        assert_eq!(tr.primitive(5.0), 1.0 - 1.0);
        // gap before the first piece
        let h = Integrand::indicator(2.0, 3.0, 1.0).unwrap().shifted(1.0);
        assert_eq!(h.value(0.5), 0.0);
        assert_eq!(h.value(1.5), 1.0);
    }

    #[test]
    fn rejects_bad_breaks() {
        assert!(Integrand::step(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(Integrand::step(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
    }
}
