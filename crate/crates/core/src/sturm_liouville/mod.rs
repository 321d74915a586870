//! The Sturm–Liouville problem `φ'' = 2φV` with `φ'(±∞) = ±1`, its scale
//! function, and the Bessel(3) continuation factors built from the same ODE.
//!
//! Between nodes the linear ODE `y'' = 2 v y` is stepped with RK4; atoms and
//! density knots are always nodes, so `v` is smooth inside every step and
//! each atom `λδ_z` acts as the exact jump `y'(z+) = y'(z−) + 2λ y(z)`.

mod tail;

pub use tail::{BesselTailFactor, TailCache, TailFactors};

use crate::error::{Error, Result};
use crate::functionals::fk_weight_t;
use crate::measure::MeasureSpec;
use crate::path::SamplePath;
use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

/// Grid values of a solution of `y'' = 2 v y` with atom jumps.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Right derivative (after any atom jump).
    pub p_right: Vec<f64>,
    /// Left derivative (before any atom jump).
    pub p_left: Vec<f64>,
}

/// Uniform nodes on `[lo, hi]` merged with the interior `extra` points.
pub(crate) fn build_nodes(lo: f64, hi: f64, step: f64, extra: &[f64]) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let mut pts: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * h }).collect();
    let mut ex: Vec<f64> = extra.iter().copied().filter(|&e| e > lo && e < hi).collect();
    ex.sort_by(f64::total_cmp);
    ex.dedup();
    let tol = 1e-9 * h;
    for e in ex {
        let i = pts.partition_point(|&t| t < e);
        if i < pts.len() && (pts[i] - e).abs() <= tol {
            if i != 0 && i != pts.len() - 1 {
                pts[i] = e;
            }
        } else if i > 0 && (pts[i - 1] - e).abs() <= tol {
            if i - 1 != 0 {
                pts[i - 1] = e;
            }
        } else {
            pts.insert(i, e);
        }
    }
    pts
}

/// Integrates `y'' = 2 v y` across `nodes` from `(y0, p0)` at `nodes[0]`.
pub(crate) fn shoot(v: &MeasureSpec, nodes: &[f64], y0: f64, p0: f64) -> Profile {
    let n = nodes.len();
    let mut out = Profile {
        x: nodes.to_vec(),
        y: Vec::with_capacity(n),
        p_right: Vec::with_capacity(n),
        p_left: Vec::with_capacity(n),
    };
    let dens = v.density();
    let vr = |x: f64| dens.map_or(0.0, |d| d.eval(x));
    let vl = |x: f64| dens.map_or(0.0, |d| d.eval_left(x));
    let atoms = v.atoms();
    let mut ai = atoms.partition_point(|a| a.0 <= nodes[0]);
    let (mut y, mut p) = (y0, p0);
    out.y.push(y);
    out.p_left.push(p);
    out.p_right.push(p);
    for i in 0..n - 1 {
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let h = x1 - x0;
        let (v0, vm, v1) = (vr(x0), vr(0.5 * (x0 + x1)), vl(x1));
        let k1y = p;
        let k1p = 2.0 * v0 * y;
        let k2y = p + 0.5 * h * k1p;
        let k2p = 2.0 * vm * (y + 0.5 * h * k1y);
        let k3y = p + 0.5 * h * k2p;
        let k3p = 2.0 * vm * (y + 0.5 * h * k2y);
        let k4y = p + h * k3p;
        let k4p = 2.0 * v1 * (y + h * k3y);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        out.p_left.push(p);
        while ai < atoms.len() && atoms[ai].0 <= x1 {
            if atoms[ai].0 == x1 {
                p += 2.0 * atoms[ai].1 * y;
            }
            ai += 1;
        }
        out.y.push(y);
        out.p_right.push(p);
    }
    out
}

/// Cubic Hermite value and derivative on the cell containing `x`.
pub(crate) fn hermite(pr: &Profile, x: f64) -> (f64, f64) {
    let n = pr.x.len();
    let i = pr.x.partition_point(|&t| t <= x).clamp(1, n - 1) - 1;
    let (x0, x1) = (pr.x[i], pr.x[i + 1]);
    let h = x1 - x0;
    let s = (x - x0) / h;
    let (y0, y1) = (pr.y[i], pr.y[i + 1]);
    let (m0, m1) = (pr.p_right[i] * h, pr.p_left[i + 1] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let val = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
    let der = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1) / h;
    (val, der)
}

/// Tabulated solution `φ_V` on `[−L, L]` with exact linear continuation
/// outside.
#[derive(Debug, Clone)]
pub struct PhiSolution {
    profile: Profile,
    half_width: f64,
    c_v: f64,
    argmin: f64,
    /// `∫_{x_0}^{x_i} φ^{-2}` at the nodes.
    gamma_cum: Vec<f64>,
    gamma_zero: f64,
}

pub fn solve_phi(v: &MeasureSpec, half_width: f64, dx: f64) -> Result<PhiSolution> {
    if v.is_zero() {
        return Err(Error::Solver("V = 0 has no solution with φ'(±∞) = ±1".into()));
    }
    if !(dx > 0.0 && half_width > 0.0) {
        return Err(Error::Solver(format!("need L > 0 and dx > 0, got L {half_width}, dx {dx}")));
    }
    let (lo, hi) = v.support().unwrap();
    if lo <= -half_width || hi >= half_width {
        return Err(Error::Solver(format!(
            "support [{lo}, {hi}] of V is not inside (-{half_width}, {half_width})"
        )));
    }
    let mut extra: Vec<f64> = v.atoms().iter().map(|a| a.0).collect();
    if let Some(d) = v.density() {
        extra.extend_from_slice(d.knots());
    }
    extra.push(0.0);
    let nodes = build_nodes(-half_width, half_width, dx, &extra);
    let y1 = shoot(v, &nodes, 1.0, 0.0);
    let y2 = shoot(v, &nodes, 0.0, 1.0);
    let last = nodes.len() - 1;
    let (d1, d2) = (y1.p_right[last], y2.p_right[last]);
    if !(d1 > 0.0) || !d1.is_finite() || !d2.is_finite() {
        return Err(Error::Solver(format!("singular boundary system (y1' = {d1})")));
    }
    // φ = α y1 + β y2, β = φ'(−L) = −1, φ'(L) = 1
    let beta = -1.0;
    let alpha = (1.0 - beta * d2) / d1;
    let comb = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| alpha * p + beta * q).collect() };
    let profile = Profile {
        x: nodes.clone(),
        y: comb(&y1.y, &y2.y),
        p_right: comb(&y1.p_right, &y2.p_right),
        p_left: comb(&y1.p_left, &y2.p_left),
    };
    if profile.y.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::Solver("φ_V not positive on the grid; refine dx or enlarge L".into()));
    }
    // minimum of the convex φ: node minimum, refined inside adjacent cells
    let (mut imin, mut c_v) = (0, f64::INFINITY);
    for (i, &f) in profile.y.iter().enumerate() {
        if f < c_v {
            c_v = f;
            imin = i;
        }
    }
    let mut argmin = nodes[imin];
    for cell in [imin.saturating_sub(1), imin] {
        if cell + 1 >= nodes.len() {
            continue;
        }
        let (a, b) = (nodes[cell], nodes[cell + 1]);
        for k in 1..64 {
            let x = a + (b - a) * k as f64 / 64.0;
            let f = hermite(&profile, x).0;
            if f < c_v {
                c_v = f;
                argmin = x;
            }
        }
    }
    let q = crate::special::Legendre::new(4);
    let mut gamma_cum = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    gamma_cum.push(0.0);
    for i in 0..last {
        acc += q.integrate(nodes[i], nodes[i + 1], 1, |x| {
            let f = hermite(&profile, x).0;
            1.0 / (f * f)
        });
        gamma_cum.push(acc);
    }
    let mut sol = PhiSolution { profile, half_width, c_v, argmin, gamma_cum, gamma_zero: 0.0 };
    sol.gamma_zero = sol.gamma_raw(0.0);
    Ok(sol)
}

impl PhiSolution {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `C_V = inf φ_V`.
    pub fn c_v(&self) -> f64 {
        self.c_v
    }

    pub fn argmin(&self) -> f64 {
        self.argmin
    }

    pub fn nodes(&self) -> &[f64] {
        &self.profile.x
    }

    pub fn node_values(&self) -> &[f64] {
        &self.profile.y
    }

    /// Right derivative at the nodes.
    pub fn node_derivatives(&self) -> &[f64] {
        &self.profile.p_right
    }

    pub fn phi(&self, x: f64) -> f64 {
        let l = self.half_width;
        let n = self.profile.y.len() - 1;
        if x >= l {
            self.profile.y[n] + (x - l)
        } else if x <= -l {
            self.profile.y[0] + (-l - x)
        } else {
            hermite(&self.profile, x).0
        }
    }

    /// `φ'` (right derivative at atoms).
    pub fn dphi(&self, x: f64) -> f64 {
        let l = self.half_width;
        if x >= l {
            return 1.0;
        }
        if x <= -l {
            return -1.0;
        }
        let i = self.profile.x.partition_point(|&t| t < x);
        if i < self.profile.x.len() && self.profile.x[i] == x {
            return self.profile.p_right[i];
        }
        hermite(&self.profile, x).1
    }

    /// Drift `φ'/φ` of `W^{(V)}`.
    pub fn drift(&self, x: f64) -> f64 {
        self.dphi(x) / self.phi(x)
    }

    fn gamma_raw(&self, x: f64) -> f64 {
        let l = self.half_width;
        let n = self.profile.x.len() - 1;
        if x >= l {
            let (a, b) = (self.profile.y[n], self.profile.y[n] + (x - l));
            return self.gamma_cum[n] + 1.0 / a - 1.0 / b;
        }
        if x <= -l {
            let (a, b) = (self.profile.y[0], self.profile.y[0] + (-l - x));
            return -(1.0 / a - 1.0 / b);
        }
        let i = self.profile.x.partition_point(|&t| t <= x).clamp(1, n) - 1;
        let q = crate::special::Legendre::new(4);
        self.gamma_cum[i]
            + q.integrate(self.profile.x[i], x, 1, |s| {
                let f = hermite(&self.profile, s).0;
                1.0 / (f * f)
            })
    }

    /// Scale function `γ(x) = ∫₀ˣ φ^{-2}`.
    pub fn scale(&self, x: f64) -> f64 {
        self.gamma_raw(x) - self.gamma_zero
    }

    /// `γ(±∞)`.
    pub fn scale_limit(&self, sign: f64) -> f64 {
        let n = self.profile.x.len() - 1;
        if sign > 0.0 {
            self.gamma_cum[n] + 1.0 / self.profile.y[n] - self.gamma_zero
        } else {
            -1.0 / self.profile.y[0] - self.gamma_zero
        }
    }

    /// `W^{(V)}_x(τ₀ = ∞)`.
    pub fn escape_probability(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let s = x.signum();
        self.scale(x) / self.scale_limit(s)
    }
}

/// `M_t = φ(X_t)/φ(X_0) · 𝒦_t(V; X)`.
pub fn martingale_density(phi: &PhiSolution, v: &MeasureSpec, path: &SamplePath, t: f64) -> Result<f64> {
    let xt = path.at(t)?;
    let k = fk_weight_t(v, path, t)?;
    Ok(phi.phi(xt) / phi.phi(path.values[0]) * k)
}
