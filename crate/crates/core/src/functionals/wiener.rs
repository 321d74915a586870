//! Wiener integrals of step integrands and the exponential density
//! `ℰ_t(f; X) = exp(∫₀ᵗ f dX − ½ ∫₀ᵗ f²)`.
//!
//! Breaks are read at their nearest grid index, so the Wiener integral is an
//! exact telescoping sum of grid increments.

use crate::error::{Error, Result};
use crate::integrand::Integrand;
use crate::path::SamplePath;
use num_traits::Float;

fn cut(f: &Integrand, t: Option<f64>) -> f64 {
    t.unwrap_or_else(|| f.support_end())
}

fn pieces_on<'a>(
    f: &'a Integrand,
    path: &'a SamplePath,
    t: f64,
) -> Result<impl Iterator<Item = (usize, usize, f64)> + 'a> {
    let g = &path.grid;
    let kt = g.nearest(t);
    if f.support_end().min(t) > path.horizon() + 0.5 * g.dt {
        return Err(Error::BeyondHorizon { t: f.support_end().min(t), t_max: path.horizon() });
    }
    Ok(f.pieces().filter(|p| p.2 != 0.0).map(move |(a, b, c)| {
        let ia = g.nearest(a).min(kt);
        let ib = g.nearest(b).min(kt);
        (ia, ib, c)
    }))
}

/// `∫₀ᵗ f dX` (`t = None`: the whole support).
pub fn wiener_integral(f: &Integrand, path: &SamplePath, t: Option<f64>) -> Result<f64> {
    let x = &path.values;
    Ok(pieces_on(f, path, cut(f, t))?.map(|(ia, ib, c)| c * (x[ib] - x[ia])).sum())
}

/// `∫₀ᵗ f²` on the same snapped pieces as [`wiener_integral`].
pub fn energy(f: &Integrand, path: &SamplePath, t: Option<f64>) -> Result<f64> {
    let g = &path.grid;
    Ok(pieces_on(f, path, cut(f, t))?.map(|(ia, ib, c)| c * c * (g.time(ib) - g.time(ia))).sum())
}

/// `ℰ_t(f; X)`; `t = None` gives `ℰ(f; X)`.
pub fn exp_density(f: &Integrand, path: &SamplePath, t: Option<f64>) -> Result<f64> {
    Ok((wiener_integral(f, path, t)? - 0.5 * energy(f, path, t)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping_sum() {
        let p = SamplePath::new(0.5, vec![0.0, 1.0, 3.0, 2.0, 5.0]);
        let f = Integrand::step(vec![0.0, 1.0, 2.0], vec![2.0, -1.0]).unwrap();
        assert_eq!(wiener_integral(&f, &p, None).unwrap(), 2.0 * 3.0 - (5.0 - 3.0));
        assert_eq!(wiener_integral(&f, &p, Some(0.5)).unwrap(), 2.0);
        assert_eq!(energy(&f, &p, None).unwrap(), 4.0 + 1.0);
        let short = SamplePath::new(0.5, vec![0.0, 1.0]);
        assert!(wiener_integral(&f, &short, None).is_err());
    }

    #[test]
    fn multiplicative_split() {
        // ℰ(f; X) = ℰ_t(f; X) · ℰ(f(·+t); θ_t X)
        let p = SamplePath::new(0.25, vec![0.0, 0.3, -0.2, 0.5, 0.1, 0.9, 1.4, 1.0, 0.2]);
        let f = Integrand::step(vec![0.0, 0.5, 1.25, 2.0], vec![1.0, -0.5, 2.0]).unwrap();
        let t = 0.75;
        let whole = exp_density(&f, &p, None).unwrap();
        let head = exp_density(&f, &p, Some(t)).unwrap();
        let rest = exp_density(&f.shifted(t), &p.shift(t).unwrap(), None).unwrap();
        assert!((whole - head * rest).abs() < 1e-14 * whole);
    }
}
