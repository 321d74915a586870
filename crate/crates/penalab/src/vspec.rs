//! Text form of a killing measure, for the command line.
//!
//! Terms are joined by `+`:
//!
//! - `a:X:M`: atom of mass `M` at `X`
//! - `box:A:B:H`: density `H` on `[A, B]`
//! - `pl:K1,K2,...:V1,V2,...`: piecewise-linear density through the points
//!
//! Atoms may repeat; at most one density term is allowed.

use penalab_core::measure::{MeasureSpec, PiecewiseLinear};

#[derive(Debug, thiserror::Error)]
pub enum VSpecError {
    #[error("empty measure spec")]
    Empty,
    #[error("bad term `{0}`")]
    BadTerm(String),
    #[error("bad number `{0}`")]
    BadNumber(String),
    #[error("more than one density term")]
    TwoDensities,
    #[error(transparent)]
    Measure(#[from] penalab_core::Error),
}

fn num(s: &str) -> Result<f64, VSpecError> {
    s.trim().parse().map_err(|_| VSpecError::BadNumber(s.into()))
}

fn list(s: &str) -> Result<Vec<f64>, VSpecError> {
    s.split(',').map(num).collect()
}

pub fn parse(spec: &str) -> Result<MeasureSpec, VSpecError> {
    if spec.trim().is_empty() {
        return Err(VSpecError::Empty);
    }
    let mut atoms = Vec::new();
    let mut density: Option<PiecewiseLinear> = None;
    for term in spec.split('+') {
        let parts: Vec<&str> = term.trim().split(':').collect();
        let d = match parts.as_slice() {
            ["a", x, m] => {
                atoms.push((num(x)?, num(m)?));
                None
            }
            ["box", a, b, h] => {
                let (a, b) = (num(a)?, num(b)?);
                if !(b > a) {
                    return Err(VSpecError::BadTerm(term.into()));
                }
                let h = num(h)?;
                Some(PiecewiseLinear::new(vec![a, a, b, b], vec![0.0, h, h, 0.0])?)
            }
            ["pl", k, v] => Some(PiecewiseLinear::new(list(k)?, list(v)?)?),
            _ => return Err(VSpecError::BadTerm(term.into())),
        };
        if let Some(d) = d {
            if density.replace(d).is_some() {
                return Err(VSpecError::TwoDensities);
            }
        }
    }
    Ok(MeasureSpec::new(atoms, density)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_merge() {
        let v = parse("a:0:1 + a:0:0.5+a:1:2").unwrap();
        assert_eq!(v.atoms(), &[(0.0, 1.5), (1.0, 2.0)]);
        assert!(v.density().is_none());
    }

    #[test]
    fn box_and_atom() {
        let v = parse("box:-0.5:0.5:1+a:2:1").unwrap();
        assert_eq!(v.atoms(), &[(2.0, 1.0)]);
        assert!((v.mass() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear() {
        let v = parse("pl:-1,0,1:0,2,0").unwrap();
        assert!((v.mass() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects() {
        for s in ["", "a:0", "box:1:0:1", "a:x:1", "box:0:1:1+pl:0,1:1,1", "a:0:-1", "foo:1"] {
            assert!(parse(s).is_err(), "{s}");
        }
    }
}
