//! Killing measures `V = Σ λ_k δ_{y_k} + v(x) dx` with a piecewise-linear
//! density `v`.

use crate::error::{Error, Result};
use crate::special::Legendre;
use alloc::format;
use alloc::vec::Vec;

/// Piecewise-linear function through `(knots[i], values[i])`, zero outside
/// `[knots[0], knots[last]]`. A repeated knot encodes a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidMeasure("density needs matching knots/values, at least 2".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidMeasure("density knots must be non-decreasing".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMeasure("density must be finite and non-negative".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Right limit at `x`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x < k[0] || x >= k[k.len() - 1] {
            return 0.0;
        }
        // last i with k[i] <= x
        let i = k.partition_point(|&t| t <= x) - 1;
        let (x0, x1) = (k[i], k[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if x1 == x0 {
            return v1;
        }
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// Left limit at `x`.
    #[inline]
    pub fn eval_left(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0] || x > k[k.len() - 1] {
            return 0.0;
        }
        // first i with k[i] >= x
        let i = k.partition_point(|&t| t < x);
        let (x0, x1) = (k[i - 1], k[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        if x1 == x0 {
            return v0;
        }
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// `∫ g(x) v(x) dx`, exact for polynomial `g` of low degree.
    pub fn integrate<G: FnMut(f64) -> f64>(&self, mut g: G) -> f64 {
        let q = Legendre::new(8);
        let mut total = 0.0;
        for i in 0..self.knots.len() - 1 {
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            if b <= a {
                continue;
            }
            let (va, vb) = (self.values[i], self.values[i + 1]);
            // split at 0 so |x|-type weights stay polynomial
            let mut seg = |lo: f64, hi: f64| {
                q.integrate(lo, hi, 1, |x| g(x) * (va + (vb - va) * (x - a) / (b - a)))
            };
            if a < 0.0 && b > 0.0 {
                total += seg(a, 0.0) + seg(0.0, b);
            } else {
                total += seg(a, b);
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasureSpec {
    atoms: Vec<(f64, f64)>,
    density: Option<PiecewiseLinear>,
}

impl MeasureSpec {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<PiecewiseLinear>) -> Result<Self> {
        for &(x, m) in &atoms {
            if !x.is_finite() || !(m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom ({x}, {m}) must have finite position and mass >= 0")));
            }
        }
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|a| a.1 > 0.0).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        Ok(Self { atoms: merged, density })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `λ δ_x`.
    pub fn atom(x: f64, mass: f64) -> Self {
        Self::new(alloc::vec![(x, mass)], None).expect("valid atom")
    }

    /// `h · 1_[a, b](x) dx`.
    pub fn boxcar(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidMeasure("box needs a < b".into()));
        }
        let d = PiecewiseLinear::new(alloc::vec![a, a, b, b], alloc::vec![0.0, h, h, 0.0])?;
        Self::new(Vec::new(), Some(d))
    }

    pub fn with_density(mut self, d: PiecewiseLinear) -> Self {
        self.density = Some(d);
        self
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&PiecewiseLinear> {
        self.density.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.as_ref().map_or(true, |d| d.values.iter().all(|&v| v == 0.0))
    }

    #[inline]
    pub fn density_at(&self, x: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.eval(x))
    }

    /// `∫ g dV`.
    pub fn integrate<G: FnMut(f64) -> f64>(&self, mut g: G) -> f64 {
        let mut s: f64 = self.atoms.iter().map(|&(x, m)| m * g(x)).sum();
        if let Some(d) = &self.density {
            s += d.integrate(&mut g);
        }
        s
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// `∫ (1 + |x|) V(dx)`.
    pub fn weighted_mass(&self) -> f64 {
        self.integrate(|x| 1.0 + x.abs())
    }

    /// Smallest interval containing the support, `None` for `V = 0`.
    pub fn support(&self) -> Option<(f64, f64)> {
        if self.is_zero() {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(x, _) in &self.atoms {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if let Some(d) = &self.density {
            lo = lo.min(d.lo());
            hi = hi.max(d.hi());
        }
        Some((lo, hi))
    }

    /// The measure transported by `x ↦ s·(x − c)`, `s = ±1`.
    pub fn reframed(&self, c: f64, s: f64) -> MeasureSpec {
        let atoms = self.atoms.iter().map(|&(x, m)| (s * (x - c), m)).collect();
        let density = self.density.as_ref().map(|d| {
            let mut pts: Vec<(f64, f64)> =
                d.knots.iter().zip(&d.values).map(|(&x, &v)| (s * (x - c), v)).collect();
            if s < 0.0 {
                pts.reverse();
            }
            PiecewiseLinear {
                knots: pts.iter().map(|p| p.0).collect(),
                values: pts.iter().map(|p| p.1).collect(),
            }
        });
        MeasureSpec::new(atoms, density).expect("reframing keeps validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_density_limits() {
        let v = MeasureSpec::boxcar(-1.0, 1.0, 1.0).unwrap();
        let d = v.density().unwrap();
        assert_eq!(d.eval(0.3), 1.0);
        assert_eq!(d.eval(-1.0), 1.0);
        assert_eq!(d.eval_left(-1.0), 0.0);
        assert_eq!(d.eval(1.0), 0.0);
        assert_eq!(d.eval_left(1.0), 1.0);
        assert_eq!(d.eval(2.0), 0.0);
        assert!((v.mass() - 2.0).abs() < 1e-14);
        assert!((v.weighted_mass() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn atoms_merge_and_weighted_mass() {
        let v = MeasureSpec::new(vec![(1.0, 1.0), (-1.0, 2.0), (1.0, 0.5)], None).unwrap();
        assert_eq!(v.atoms(), &[(-1.0, 2.0), (1.0, 1.5)]);
        assert_eq!(v.weighted_mass(), 2.0 * 2.0 + 1.5 * 2.0);
        assert_eq!(v.support(), Some((-1.0, 1.0)));
        assert!(MeasureSpec::new(vec![(0.0, -1.0)], None).is_err());
    }

    #[test]
    fn reframe_reverses_density() {
        let d = PiecewiseLinear::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0]).unwrap();
        let v = MeasureSpec::zero().with_density(d);
        let r = v.reframed(2.0, -1.0);
        // r(y) = v(2 - y)
        for &y in &[0.1, 0.5, 1.5, 1.9] {
            assert!((r.density_at(y) - v.density_at(2.0 - y)).abs() < 1e-14);
        }
    }
}
