//! Path samplers: Brownian motion, Brownian bridge, Bessel(3), the weighted
//! sampler for `W` / `W_x`, and the `W^{(V)}` diffusion.

use crate::error::{Error, Result};
use crate::path::{BesselTail, SamplePath, TimeGrid};
use crate::rng::{normal, open01, RngStream};
use crate::sturm_liouville::PhiSolution;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use num_traits::Float;

pub fn sample_bm_with<R: Rng + ?Sized>(x0: f64, grid: &TimeGrid, rng: &mut R) -> SamplePath {
    let sd = grid.dt.sqrt();
    let mut values = Vec::with_capacity(grid.n + 1);
    let mut x = x0;
    values.push(x);
    for _ in 0..grid.n {
        x += sd * normal(rng);
        values.push(x);
    }
    SamplePath::new(grid.dt, values)
}

pub fn sample_bm(x0: f64, grid: &TimeGrid, stream: RngStream) -> SamplePath {
    sample_bm_with(x0, grid, &mut stream.rng())
}

/// Brownian bridge from 0 to 0 over `steps` grid steps, `B_s − (s/u) B_u`.
/// Both endpoints are exactly 0.
pub fn sample_bridge_with<R: Rng + ?Sized>(dt: f64, steps: usize, rng: &mut R) -> SamplePath {
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut b = 0.0;
    values.push(0.0);
    for _ in 0..steps {
        b += sd * normal(rng);
        values.push(b);
    }
    let end = b;
    let k = steps as f64;
    for (i, v) in values.iter_mut().enumerate() {
        *v -= end * (i as f64 / k);
    }
    values[steps] = 0.0;
    SamplePath::new(dt, values)
}

pub fn sample_bridge(u: f64, dt: f64, stream: RngStream) -> Result<SamplePath> {
    let steps = TimeGrid::new(u, dt)?.n;
    if steps == 0 {
        return Err(Error::InvalidParameter("bridge length must be positive".into()));
    }
    Ok(sample_bridge_with(dt, steps, &mut stream.rng()))
}

/// Bessel(3) from `a ≥ 0`, as the norm of a 3-d Brownian motion.
pub fn sample_bessel3_with<R: Rng + ?Sized>(a: f64, dt: f64, steps: usize, rng: &mut R) -> SamplePath {
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let (mut x, mut y, mut z) = (a, 0.0, 0.0);
    values.push(a);
    for _ in 0..steps {
        x += sd * normal(rng);
        y += sd * normal(rng);
        z += sd * normal(rng);
        values.push((x * x + y * y + z * z).sqrt());
    }
    let tail = BesselTail { start: 0, sign: 1.0, floor: alloc::vec![0.0; steps + 1] };
    SamplePath::new(dt, values).with_tail(tail)
}

pub fn sample_bessel3(a: f64, grid: &TimeGrid, stream: RngStream) -> Result<SamplePath> {
    if !(a >= 0.0) {
        return Err(Error::InvalidParameter(format!("Bessel(3) start {a} must be >= 0")));
    }
    Ok(sample_bessel3_with(a, grid.dt, grid.n, &mut stream.rng()))
}

/// Symmetrized Bessel(3) from 0: `ε · R` with an independent fair sign.
pub fn sample_sym_bessel_with<R: Rng + ?Sized>(dt: f64, steps: usize, rng: &mut R) -> SamplePath {
    let sign = random_sign(rng);
    let r = sample_bessel3_with(0.0, dt, steps, rng);
    signed(r, sign)
}

pub fn sample_sym_bessel(grid: &TimeGrid, stream: RngStream) -> SamplePath {
    sample_sym_bessel_with(grid.dt, grid.n, &mut stream.rng())
}

/// `R_a` of the symmetric Bessel family: `R_a^+` for `a > 0`, `−R_{|a|}^+`
/// for `a < 0`, the symmetrized process for `a = 0`.
pub fn sample_bessel_family_with<R: Rng + ?Sized>(a: f64, dt: f64, steps: usize, rng: &mut R) -> SamplePath {
    if a == 0.0 {
        sample_sym_bessel_with(dt, steps, rng)
    } else {
        signed(sample_bessel3_with(a.abs(), dt, steps, rng), a.signum())
    }
}

fn signed(mut p: SamplePath, sign: f64) -> SamplePath {
    if sign < 0.0 {
        p.values.iter_mut().for_each(|v| *v = -*v);
    }
    if let Some(t) = p.tail.as_mut() {
        t.sign = sign;
    }
    p
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Proposal law for the bridge length `u` of a `W` draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalKind {
    /// `u ~ Gamma(1/2, θ)`, weight `√(θ/2)·e^{u/θ}`. Suited to functionals
    /// damped by `e^{−αg}` with `α > 1/(2θ)`.
    Gamma,
    /// `u = θ·tan²(πV/2)`, `V` uniform, restricted to `u ≤ u_cap`; weight
    /// `√(πθ/2)·(1 + u/θ)·P(u ≤ u_cap)`. Tail `∝ u^{-3/2}`, suited to
    /// functionals decaying only polynomially in `g`.
    HalfCauchy { u_cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WProposal {
    pub theta: f64,
    pub kind: ProposalKind,
}

impl WProposal {
    pub fn gamma(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidProposal(format!("theta {theta} must be positive")));
        }
        Ok(Self { theta, kind: ProposalKind::Gamma })
    }

    /// Gamma proposal matched to a declared decay rate: `θ = 1/α`.
    pub fn for_decay(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidProposal(format!("decay rate {alpha} must be positive")));
        }
        Self::gamma(1.0 / alpha)
    }

    pub fn half_cauchy(theta: f64, u_cap: f64) -> Result<Self> {
        if !(theta > 0.0 && u_cap > 0.0 && theta.is_finite() && u_cap.is_finite()) {
            return Err(Error::InvalidProposal(format!("theta {theta}, cap {u_cap}")));
        }
        Ok(Self { theta, kind: ProposalKind::HalfCauchy { u_cap } })
    }

    /// Errors unless the weighted estimator of an `e^{−αg}`-damped functional
    /// has finite variance under this proposal.
    pub fn check_decay(&self, alpha: f64) -> Result<()> {
        match self.kind {
            ProposalKind::Gamma if alpha <= 1.0 / (2.0 * self.theta) => Err(Error::InvalidProposal(format!(
                "decay rate {alpha} <= 1/(2 theta) = {}: weighted estimator has infinite variance",
                1.0 / (2.0 * self.theta)
            ))),
            _ => Ok(()),
        }
    }

    /// Proposal mass of `{u > t}`.
    pub fn mass_beyond(&self, t: f64) -> f64 {
        match self.kind {
            ProposalKind::Gamma => libm::erfc((t / self.theta).sqrt()),
            ProposalKind::HalfCauchy { u_cap } if t >= u_cap => 0.0,
            ProposalKind::HalfCauchy { u_cap } => {
                1.0 - (t / self.theta).sqrt().atan() / (u_cap / self.theta).sqrt().atan()
            }
        }
    }

    pub fn u_cap(&self) -> Option<f64> {
        match self.kind {
            ProposalKind::HalfCauchy { u_cap } => Some(u_cap),
            ProposalKind::Gamma => None,
        }
    }

    /// Draw `(u, ρ(u)/q(u))` with `ρ(u) = (2πu)^{-1/2}`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let th = self.theta;
        match self.kind {
            ProposalKind::Gamma => {
                let n = normal(rng);
                let u = th * n * n / 2.0;
                (u, (th / 2.0).sqrt() * (u / th).exp())
            }
            ProposalKind::HalfCauchy { u_cap } => {
                let vmax = 2.0 / PI * (u_cap / th).sqrt().atan();
                let v = open01(rng) * vmax;
                let t = (PI * v / 2.0).tan();
                let u = th * t * t;
                (u, (PI * th / 2.0).sqrt() * (1.0 + u / th) * vmax)
            }
        }
    }
}

/// How far past the bridge a `W` draw is simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WExtent {
    /// The path covers `[0, max(u, horizon)]`.
    pub horizon: f64,
    /// Bridges longer than `after` switch to the step `dt` from `after` on.
    pub coarse: Option<Coarsening>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coarsening {
    pub after: f64,
    pub dt: f64,
}

impl WExtent {
    pub fn fine(horizon: f64) -> Self {
        Self { horizon, coarse: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPath {
    pub path: SamplePath,
    /// Importance weight `ρ(u)/q(u)`.
    pub weight: f64,
    /// Drawn bridge length before rounding.
    pub u_raw: f64,
    /// Bridge length on the grid; the path is exactly 0 there.
    pub u: f64,
    pub sign: f64,
}

/// One weighted draw of `W`: bridge of length `u` (rounded to the nearest
/// positive grid point), then `ε·Bessel(3)` from 0.
pub fn sample_w_with<R: Rng + ?Sized>(
    proposal: &WProposal,
    dt: f64,
    extent: WExtent,
    rng: &mut R,
) -> WeightedPath {
    let (u_raw, weight) = proposal.draw(rng);
    let sign = random_sign(rng);
    let k = ((u_raw / dt).round() as usize).max(1);
    if let Some(c) = extent.coarse {
        let kc = (c.after / dt).round() as usize;
        if k > kc {
            debug_assert!(extent.horizon <= c.after);
            return two_scale_w(dt, kc, c.dt, u_raw, weight, sign, rng);
        }
    }
    let total = ((extent.horizon / dt).round() as usize).max(k);
    let bridge = sample_bridge_with(dt, k, rng);
    let bessel = signed(sample_bessel3_with(0.0, dt, total - k, rng), sign);
    let path = bridge.concat(&bessel).expect("bridge ends at exactly 0");
    WeightedPath { path, weight, u_raw, u: k as f64 * dt, sign }
}

/// Bridge of length `t_c + m·dc` from 0 to 0: step `dt` up to `t_c`, then
/// `dc`; ends where the Bessel tail starts.
fn two_scale_w<R: Rng + ?Sized>(
    dt: f64,
    kc: usize,
    dc: f64,
    u_raw: f64,
    weight: f64,
    sign: f64,
    rng: &mut R,
) -> WeightedPath {
    let tc = kc as f64 * dt;
    let m = (((u_raw - tc) / dc).round() as usize).max(1);
    let u = tc + m as f64 * dc;
    let xc = (tc * (u - tc) / u).sqrt() * normal(rng);
    let ramp = |mut p: SamplePath, from: f64, to: f64| {
        let n = p.steps() as f64;
        for (i, v) in p.values.iter_mut().enumerate() {
            *v += from + (to - from) * (i as f64 / n);
        }
        let last = p.values.len() - 1;
        p.values[0] = from;
        p.values[last] = to;
        p
    };
    let head = ramp(sample_bridge_with(dt, kc, rng), 0.0, xc);
    let rest = ramp(sample_bridge_with(dc, m, rng), xc, 0.0);
    let bessel = signed(sample_bessel3_with(0.0, dc, 0, rng), sign);
    let path = head
        .concat_coarse(&rest)
        .and_then(|p| p.concat_coarse(&bessel))
        .expect("pieces meet exactly");
    WeightedPath { path, weight, u_raw, u, sign }
}

pub fn sample_w(proposal: &WProposal, grid: &TimeGrid, stream: RngStream) -> Result<WeightedPath> {
    if let ProposalKind::Gamma = proposal.kind {
        let beyond = proposal.mass_beyond(grid.t_max);
        if beyond > 1e-6 {
            return Err(Error::InvalidProposal(format!(
                "proposal mass {beyond:.3e} beyond horizon {}; need < 1e-6",
                grid.t_max
            )));
        }
    }
    Ok(sample_w_with(proposal, grid.dt, WExtent::fine(grid.t_max), &mut stream.rng()))
}

/// Weighted draw of `W_x`: the `W` draw shifted by `x`.
pub fn sample_wx(x: f64, proposal: &WProposal, grid: &TimeGrid, stream: RngStream) -> Result<WeightedPath> {
    let mut w = sample_w(proposal, grid, stream)?;
    w.path = w.path.offset(x);
    Ok(w)
}

/// Euler–Maruyama for `dX = dB + (φ'/φ)(X) dt`, the law `W^{(V)}_x`.
pub fn sample_wv_with<R: Rng + ?Sized>(x: f64, phi: &PhiSolution, grid: &TimeGrid, rng: &mut R) -> Result<SamplePath> {
    let sd = grid.dt.sqrt();
    let bound = phi.half_width();
    let mut values = Vec::with_capacity(grid.n + 1);
    let mut y = x;
    values.push(y);
    for i in 0..grid.n {
        y += phi.drift(y) * grid.dt + sd * normal(rng);
        if y.abs() > bound {
            return Err(Error::DomainExit { t: grid.time(i + 1), bound });
        }
        values.push(y);
    }
    Ok(SamplePath::new(grid.dt, values))
}

pub fn sample_wv(x: f64, phi: &PhiSolution, grid: &TimeGrid, stream: RngStream) -> Result<SamplePath> {
    sample_wv_with(x, phi, grid, &mut stream.rng())
}
