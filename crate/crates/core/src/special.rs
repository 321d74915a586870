//! Special functions and quadrature rules.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};
use num_traits::Float;

/// `1/√π`.
pub const FRAC_1_SQRT_PI: f64 = FRAC_2_SQRT_PI / 2.0;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Stable for large positive `x`, where `erfc` underflows.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 12.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // asymptotic series, terms (2k-1)!!/(2x²)^k
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
    }
    sum * FRAC_1_SQRT_PI / x
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Two-sided normal quantile: the `z` with `P(|N| ≤ z) = level`.
///
/// Solved by bisection on `erfc`, good to ~1e-14 in `z`.
pub fn two_sided_z(level: f64) -> f64 {
    let target = 1.0 - level;
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid / SQRT_2) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss–Legendre rule on `[-1, 1]` with `n` nodes.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre quadrature of `f` over `[a, b]`.
pub struct Legendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Legendre {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * s;
        }
        total
    }
}

/// Gauss–Hermite rule for the standard normal weight:
/// `E[g(N)] ≈ Σ wᵢ g(xᵢ)`.
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // physicists' rule → standard normal
    let mut nodes: Vec<f64> = x.iter().map(|v| v * SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|v| v * FRAC_1_SQRT_PI).collect();
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_continuous_across_branch() {
        let a = (12.0f64 * 12.0).exp() * libm::erfc(12.0);
        assert!((erfcx(12.0) - a).abs() / a < 1e-13);
        assert!((erfcx(0.0) - 1.0).abs() < 1e-15);
        // large-x limit 1/(x√π)
        let x = 1e6;
        assert!((erfcx(x) * x * PI.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erfcx_negative_argument() {
        let x = -1.3;
        let direct = (x * x).exp() * libm::erfc(x);
        assert!((erfcx(x) - direct).abs() < 1e-13);
    }

    #[test]
    fn z_of_default_level_is_four() {
        let level = 1.0 - libm::erfc(4.0 / SQRT_2);
        assert!((two_sided_z(level) - 4.0).abs() < 1e-9);
        assert!((two_sided_z(0.95) - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let q = Legendre::new(8);
        let v = q.integrate(0.0, 2.0, 1, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let v = q.integrate(0.0, PI, 4, |x| x.sin());
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite_normal(40);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0).abs() < 1e-11);
        let e: f64 = x.iter().zip(&w).map(|(x, w)| w * (0.7 * x).exp()).sum();
        assert!((e - (0.49f64 / 2.0).exp()).abs() < 1e-12);
    }
}
