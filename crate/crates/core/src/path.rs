//! Grid paths and the path operations used throughout: concatenation,
//! time shift, translation by a primitive, last exit and hitting times.

use crate::error::{Error, Result};
use crate::integrand::Integrand;
use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
    pub n: usize,
    /// Intervals from index `start` on have the longer step `dt`.
    pub coarse: Option<Coarse>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coarse {
    pub start: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("t_max {t_max}, dt {dt}")));
        }
        let n = (t_max / dt).round() as usize;
        if (n as f64 * dt - t_max).abs() > GRID_TOL * t_max.max(dt) {
            return Err(Error::InvalidGrid(format!("t_max {t_max} is not a multiple of dt {dt}")));
        }
        Ok(Self { t_max, dt, n, coarse: None })
    }

    pub fn with_steps(dt: f64, n: usize) -> Self {
        Self { t_max: n as f64 * dt, dt, n, coarse: None }
    }

    /// `start` steps of `dt`, then `n − start` steps of `coarse_dt`.
    pub fn two_scale(dt: f64, start: usize, coarse_dt: f64, n: usize) -> Self {
        debug_assert!(start <= n);
        let mut g = Self { t_max: 0.0, dt, n, coarse: Some(Coarse { start, dt: coarse_dt }) };
        g.t_max = g.time(n);
        g
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        match self.coarse {
            Some(c) if i > c.start => c.start as f64 * self.dt + (i - c.start) as f64 * c.dt,
            _ => i as f64 * self.dt,
        }
    }

    /// Length of interval `[i, i + 1]`.
    #[inline]
    pub fn step(&self, i: usize) -> f64 {
        match self.coarse {
            Some(c) if i >= c.start => c.dt,
            _ => self.dt,
        }
    }

    /// Fractional index of `t`.
    fn position(&self, t: f64) -> f64 {
        match self.coarse {
            Some(c) if t > c.start as f64 * self.dt => c.start as f64 + (t - c.start as f64 * self.dt) / c.dt,
            _ => t / self.dt,
        }
    }

    /// Index of grid time `t`; errors if `t` is not a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = self.position(t).round();
        if k < 0.0 || (self.time(k as usize) - t).abs() > GRID_TOL * self.dt.max(t.abs()) {
            return Err(Error::NotGridPoint(t));
        }
        Ok(k as usize)
    }

    /// Index of the grid point nearest to `t`, clamped to `[0, n]`.
    pub fn nearest(&self, t: f64) -> usize {
        (self.position(t).round().max(0.0) as usize).min(self.n)
    }

    /// The grid of `[time(k), t_max]`, re-based at 0.
    fn after(&self, k: usize) -> Self {
        match self.coarse {
            Some(c) if k < c.start => Self::two_scale(self.dt, c.start - k, c.dt, self.n - k),
            Some(c) => Self::with_steps(c.dt, self.n - k),
            None => Self::with_steps(self.dt, self.n - k),
        }
    }
}

/// Marks the part of a path that is a Bessel(3) process in a moving frame:
/// for `i ≥ start`, `sign · (values[i] − floor[i − start])` is a Bessel(3)
/// sample that never returns to zero. Past the last grid point the floor is
/// held at its final value.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTail {
    pub start: usize,
    pub sign: f64,
    pub floor: Vec<f64>,
}

impl BesselTail {
    #[inline]
    pub fn floor_at(&self, i: usize) -> f64 {
        self.floor[i - self.start]
    }

    #[inline]
    pub fn frame_level(&self, i: usize, level: f64) -> f64 {
        self.sign * (level - self.floor_at(i))
    }

    pub fn final_floor(&self) -> f64 {
        *self.floor.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub tail: Option<BesselTail>,
}

/// Result of a last-exit search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastExit {
    /// Last time at level, `None` if the level is never reached on the grid.
    pub time: Option<f64>,
    /// True unless the Bessel tail proves the level is never revisited.
    pub censored: bool,
}

impl SamplePath {
    pub fn new(dt: f64, values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        Self { grid: TimeGrid::with_steps(dt, values.len() - 1), values, tail: None }
    }

    pub fn with_tail(mut self, tail: BesselTail) -> Self {
        debug_assert_eq!(tail.floor.len(), self.values.len() - tail.start);
        self.tail = Some(tail);
        self
    }

    /// The (fine) grid step.
    #[inline]
    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    #[inline]
    pub fn step(&self, i: usize) -> f64 {
        self.grid.step(i)
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.grid.time(i)
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.grid.t_max
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Value at grid time `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let i = self.grid.index_of(t)?;
        self.values
            .get(i)
            .copied()
            .ok_or(Error::BeyondHorizon { t, t_max: self.horizon() })
    }

    /// `x ⊕ y`: `y` started where `x` ends. Requires equal steps and
    /// `y(0) == x(end)` exactly.
    pub fn concat(&self, y: &SamplePath) -> Result<SamplePath> {
        if self.grid.coarse.is_some() || y.grid.coarse.is_some() || self.dt() != y.dt() {
            return Err(Error::GridMismatch { left: self.dt(), right: y.dt() });
        }
        self.join(y, self.grid.dt)
    }

    /// `x ⊕ y` where `y` runs on a coarser uniform grid (or continues the
    /// coarse part of `x`).
    pub fn concat_coarse(&self, y: &SamplePath) -> Result<SamplePath> {
        let ok = y.grid.coarse.is_none()
            && match self.grid.coarse {
                Some(c) => c.dt == y.dt(),
                None => y.dt() >= self.dt(),
            };
        if !ok {
            return Err(Error::GridMismatch { left: self.dt(), right: y.dt() });
        }
        self.join(y, y.dt())
    }

    fn join(&self, y: &SamplePath, dt_y: f64) -> Result<SamplePath> {
        if self.last() != y.values[0] {
            return Err(Error::EndpointMismatch { left: self.last(), right: y.values[0] });
        }
        let mut values = Vec::with_capacity(self.values.len() + y.steps());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&y.values[1..]);
        let n0 = self.steps();
        let tail = y.tail.as_ref().map(|t| BesselTail {
            start: t.start + n0,
            sign: t.sign,
            floor: t.floor.clone(),
        });
        let n = values.len() - 1;
        let grid = match self.grid.coarse {
            Some(c) => TimeGrid::two_scale(self.dt(), c.start, c.dt, n),
            None if dt_y == self.dt() => TimeGrid::with_steps(self.dt(), n),
            None => TimeGrid::two_scale(self.dt(), n0, dt_y, n),
        };
        Ok(SamplePath { grid, values, tail })
    }

    /// `θ_u x = x(u + ·)` for grid time `u`.
    pub fn shift(&self, u: f64) -> Result<SamplePath> {
        let k = self.grid.index_of(u)?;
        self.shift_index(k)
    }

    pub fn shift_index(&self, k: usize) -> Result<SamplePath> {
        if k > self.steps() {
            return Err(Error::BeyondHorizon { t: self.grid.time(k), t_max: self.horizon() });
        }
        let values = self.values[k..].to_vec();
        let tail = self.tail.as_ref().map(|t| {
            if t.start >= k {
                BesselTail { start: t.start - k, sign: t.sign, floor: t.floor.clone() }
            } else {
                BesselTail { start: 0, sign: t.sign, floor: t.floor[k - t.start..].to_vec() }
            }
        });
        Ok(SamplePath { grid: self.grid.after(k), values, tail })
    }

    /// Spatial shift `c + x`.
    pub fn offset(&self, c: f64) -> SamplePath {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v += c);
        if let Some(t) = out.tail.as_mut() {
            t.floor.iter_mut().for_each(|v| *v += c);
        }
        out
    }

    fn add_profile<H: Fn(f64) -> f64>(&self, h: H) -> SamplePath {
        let mut out = self.clone();
        let g = self.grid;
        for (i, v) in out.values.iter_mut().enumerate() {
            *v += h(g.time(i));
        }
        if let Some(t) = out.tail.as_mut() {
            for (j, v) in t.floor.iter_mut().enumerate() {
                *v += h(g.time(t.start + j));
            }
        }
        out
    }

    /// `x + h` with `h = ∫₀^· f`.
    pub fn translate(&self, f: &Integrand) -> SamplePath {
        self.add_profile(|t| f.primitive(t))
    }

    /// `x + h_{·∧T}`.
    pub fn translate_truncated(&self, f: &Integrand, t_cut: f64) -> SamplePath {
        self.add_profile(|t| f.primitive(t.min(t_cut)))
    }

    /// Whether the tail proves `level` is never reached after the last grid point.
    pub fn level_unreachable_after_horizon(&self, level: f64) -> bool {
        self.tail
            .as_ref()
            .is_some_and(|t| t.sign * (level - t.final_floor()) <= 0.0)
    }

    /// Last time the path sits at `level`: exact grid hits, or the linearly
    /// interpolated root of the last strict sign change.
    pub fn last_exit_time(&self, level: f64) -> LastExit {
        let censored = !self.level_unreachable_after_horizon(level);
        let n = self.steps();
        let d = |i: usize| self.values[i] - level;
        for i in (1..=n).rev() {
            let (a, b) = (d(i - 1), d(i));
            if b == 0.0 {
                return LastExit { time: Some(self.time(i)), censored };
            }
            if a * b < 0.0 {
                let t = self.time(i - 1) + self.step(i - 1) * a / (a - b);
                return LastExit { time: Some(t), censored };
            }
        }
        let time = (d(0) == 0.0).then_some(0.0);
        LastExit { time, censored }
    }

    /// First grid index at which the path has reached `level`, detected by
    /// a sign change against the previous point. Index 0 if it starts there.
    pub fn hitting_index(&self, level: f64) -> Option<usize> {
        let d0 = self.values[0] - level;
        if d0 == 0.0 {
            return Some(0);
        }
        (1..self.values.len()).find(|&i| (self.values[i - 1] - level) * (self.values[i] - level) <= 0.0)
    }

    pub fn hitting_time(&self, level: f64) -> Option<f64> {
        self.hitting_index(level).map(|i| self.grid.time(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> SamplePath {
        SamplePath::new(0.5, v.to_vec())
    }

    #[test]
    fn grid_rejects_non_multiple() {
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        let g = TimeGrid::new(2.0, 0.25).unwrap();
        assert_eq!(g.n, 8);
        assert_eq!(g.index_of(0.75).unwrap(), 3);
        assert!(g.index_of(0.8).is_err());
    }

    #[test]
    fn concat_requires_exact_endpoint() {
        let a = p(&[0.0, 1.0, 2.0]);
        let b = p(&[2.0, 3.0]);
        let c = a.concat(&b).unwrap();
        assert_eq!(c.values, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.horizon(), 1.5);
        let bad = p(&[2.0 + 1e-15, 3.0]);
        assert!(matches!(a.concat(&bad), Err(Error::EndpointMismatch { .. })));
        let other = SamplePath::new(0.25, vec![2.0, 3.0]);
        assert!(matches!(a.concat(&other), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn shift_moves_tail() {
        let tail = BesselTail { start: 2, sign: -1.0, floor: vec![0.0, 0.0, 0.0] };
        let x = p(&[0.0, 1.0, 0.0, -1.0, -2.0]).with_tail(tail);
        let y = x.shift(0.5).unwrap();
        assert_eq!(y.values, vec![1.0, 0.0, -1.0, -2.0]);
        assert_eq!(y.tail.as_ref().unwrap().start, 1);
        let z = x.shift(1.5).unwrap();
        assert_eq!(z.tail.as_ref().unwrap().floor.len(), 2);
        assert_eq!(z.tail.as_ref().unwrap().start, 0);
        assert!(x.shift(0.7).is_err());
    }

    #[test]
    fn two_scale_grid() {
        let g = TimeGrid::two_scale(0.25, 4, 1.0, 6);
        assert_eq!(g.t_max, 3.0);
        assert_eq!(g.time(3), 0.75);
        assert_eq!(g.time(5), 2.0);
        assert_eq!(g.step(3), 0.25);
        assert_eq!(g.step(4), 1.0);
        assert_eq!(g.index_of(2.0).unwrap(), 5);
        assert!(g.index_of(1.5).is_err());
        assert_eq!(g.nearest(1.6), 5);
        let a = p(&[0.0, 1.0, 2.0]);
        let b = SamplePath::new(1.0, vec![2.0, 3.0, 0.0]);
        let c = a.concat_coarse(&b).unwrap();
        assert_eq!(c.horizon(), 3.0);
        assert_eq!(c.last_exit_time(0.0).time, Some(3.0));
        let s = c.shift_index(1).unwrap();
        assert_eq!(s.grid, TimeGrid::two_scale(0.5, 1, 1.0, 3));
        assert!(a.concat(&b).is_err());
    }

    #[test]
    fn translate_indicator() {
        let f = Integrand::indicator(0.0, 1.0, 1.0).unwrap();
        let x = p(&[0.0; 5]);
        let y = x.translate(&f);
        assert_eq!(y.values, vec![0.0, 0.5, 1.0, 1.0, 1.0]);
        let z = x.translate_truncated(&f, 0.5);
        assert_eq!(z.values, vec![0.0, 0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn last_exit_and_hitting() {
        let x = p(&[0.0, 1.0, -1.0, 2.0, 0.0, 3.0]);
        let g = x.last_exit_time(0.0);
        assert_eq!(g.time, Some(2.0));
        assert!(g.censored);
        let x = p(&[0.5, 1.0, -1.0, 2.0]);
        // root between t=1.0 and t=1.5 at fraction 1/3
        assert!((x.last_exit_time(0.0).time.unwrap() - (1.0 + 0.5 / 3.0)).abs() < 1e-15);
        assert_eq!(p(&[0.0, 1.0]).hitting_time(0.0), Some(0.0));
        assert_eq!(p(&[2.0, 1.5, 0.5]).hitting_time(1.0), Some(1.0));
        assert_eq!(p(&[2.0, 1.5]).hitting_time(1.0), None);
    }

    #[test]
    fn tail_certifies_no_return() {
        let tail = BesselTail { start: 2, sign: 1.0, floor: vec![0.0; 2] };
        let x = p(&[0.0, -0.3, 0.0, 0.4]).with_tail(tail);
        let g = x.last_exit_time(0.0);
        assert_eq!(g.time, Some(1.0));
        assert!(!g.censored);
        // translated upwards by 1 the level 0 sits below the frame: still unreachable
        assert!(x.offset(1.0).level_unreachable_after_horizon(0.0));
        assert!(!x.offset(-1.0).level_unreachable_after_horizon(0.0));
    }
}
