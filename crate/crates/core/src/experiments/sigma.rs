//! Experiments driven by weighted draws of the σ-finite measure.

use super::bounds::{kill_tail_bound, tail_integral, tilted_kill_bound, TiltedKill};
use super::{sigmoid, tail_of, Check, Ctx, EstimatorResult, IdentityCheck, Sample, SampleSet, Settings};
use crate::error::Result;
use crate::functionals::{exp_density, fk_weight_total, kill_between, no_hit_probability};
use crate::integrand::Integrand;
use crate::measure::{MeasureSpec, PiecewiseLinear};
use crate::path::{SamplePath, TimeGrid};
use crate::rng::RngStream;
use crate::samplers::{sample_bm_with, sample_w_with, Coarsening, WExtent, WProposal, WeightedPath};
use crate::special::Legendre;
use crate::sturm_liouville::{solve_phi, TailCache};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use num_traits::Float;

/// Bridges switch to a coarser step past this time; all check horizons
/// end before it.
const COARSE_AFTER: f64 = 10.0;

pub(crate) fn w_draw(prop: &WProposal, dt: f64, horizon: f64, seed: u64, role: u32, i: usize) -> WeightedPath {
    let mut rng = RngStream::for_path(seed, role, i as u64).rng();
    let coarse = Coarsening { after: COARSE_AFTER, dt: (0.2 / dt).round().max(1.0) * dt };
    sample_w_with(prop, dt, WExtent { horizon, coarse: Some(coarse) }, &mut rng)
}

/// Proposal cap for functionals decaying only polynomially in `g`; grows
/// with the path count so the truncation bound shrinks with the
/// standard error.
pub(crate) fn u_cap(s: &Settings, per_path: f64) -> f64 {
    (per_path * s.n_paths as f64).max(1e3)
}

fn bm(x: f64, grid: &TimeGrid, seed: u64, role: u32, i: usize) -> SamplePath {
    sample_bm_with(x, grid, &mut RngStream::for_path(seed, role, i as u64).rng())
}

fn rho_integral<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    // du/√(2πu) = 2 dr/√(2π), u = r²
    Legendre::new(8).integrate(a.sqrt(), b.sqrt(), panels, |r| 2.0 * f(r * r)) / (2.0 * PI).sqrt()
}

pub(crate) fn w_sampler(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let alphas = [1.0, 2.0, 5.0];
    let gamma = WProposal::gamma(s.theta)?;
    for a in alphas {
        gamma.check_decay(a)?;
    }
    let hc = WProposal::half_cauchy(s.theta, 50.0)?;
    let job = |i: usize| {
        let wp = w_draw(&gamma, s.dt, s.dt, s.master_seed, ctx.role(0), i);
        let g = wp.path.last_exit_time(0.0);
        let gt = g.time.unwrap_or(f64::NAN);
        let mut vals: Vec<f64> = alphas.iter().map(|a| wp.weight * (-a * gt).exp()).collect();
        vals.push(if gt == wp.u { 0.0 } else { 1.0 });
        let wh = w_draw(&hc, s.dt, s.dt, s.master_seed, ctx.role(1), i);
        let gh = wh.path.last_exit_time(0.0).time.unwrap_or(f64::NAN);
        vals.push(wh.weight * (-gh).exp());
        Sample { values: vals, censored: g.censored }
    };
    let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
    let quad5 = rho_integral(0.0, 16.0, 64, |u| (-5.0 * u).exp());
    let targets = [FRAC_1_SQRT_2, 0.5, quad5];
    let mut out = Vec::new();
    for (j, (&a, &t)) in alphas.iter().zip(&targets).enumerate() {
        let l = set.estimate(j, s.dt, a * s.dt, s.ci_level);
        out.push(Check::two_sided(format!("w-sampler/gamma/alpha={a}"), l, EstimatorResult::exact(t)).evaluate(z));
    }
    out.push(Check::exact("w-sampler/alpha=5/quadrature-vs-closed-form", quad5, 1.0 / 10f64.sqrt(), 1e-12).evaluate(z));
    out.push(Check::exact("w-sampler/last-exit-is-bridge-length/mismatches", set.sum(3), 0.0, 0.0).evaluate(z));
    let cut = crate::special::erfc(50f64.sqrt()) * FRAC_1_SQRT_2;
    let l = set.estimate(4, s.dt, s.dt, s.ci_level).adjusted(cut / 2.0, cut / 2.0);
    out.push(Check::two_sided("w-sampler/half-cauchy/alpha=1", l, EstimatorResult::exact(FRAC_1_SQRT_2)).evaluate(z));
    out.push(Check::exact("w-sampler/infinite-variance-guard", gamma.check_decay(0.25 / s.theta).is_err() as u8 as f64, 1.0, 0.0).evaluate(z));
    let one = super::mc_estimate(ctx.exec, s.n_paths.min(1000), s.master_seed, ctx.role(2), s.dt, s.ci_level, &|_| (1.0, false))?;
    out.push(Check::exact("w-sampler/constant-one/mean", one.mean, 1.0, 0.0).evaluate(z));
    out.push(Check::exact("w-sampler/constant-one/se", one.std_error, 0.0, 0.0).evaluate(z));
    Ok(out)
}

fn nry_measures() -> Result<[(&'static str, MeasureSpec); 3]> {
    Ok([
        ("delta0", MeasureSpec::atom(0.0, 1.0)),
        ("2delta0", MeasureSpec::atom(0.0, 2.0)),
        ("box", MeasureSpec::boxcar(-1.0, 1.0, 0.5)?),
    ])
}

const NRY_Z: [&str; 3] = ["one", "sigmoid-Xt", "abs-Xhalf-below-1"];

fn nry_z(p: &SamplePath, kt: usize) -> [f64; 3] {
    let x = &p.values;
    [1.0, sigmoid(x[kt]), if x[kt / 2].abs() < 1.0 { 1.0 } else { 0.0 }]
}

pub(crate) fn nry1(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let cap = u_cap(s, 0.5);
    let hc = WProposal::half_cauchy(s.theta, cap)?;
    let mut out = Vec::new();
    let mut role = 0;
    for (vl, v) in nry_measures()? {
        let phi = solve_phi(&v, s.sl_half_width, s.sl_dx)?;
        for x in [0.0, 1.0] {
            let cache = TailCache::new(&v, &[x], s.sl_dx);
            let bound = kill_tail_bound(&v, x, 0.0, cap);
            for t in [1.0, 4.0] {
                let grid = TimeGrid::new(t, s.dt)?;
                let kt = grid.n;
                let (rl, rr) = (ctx.role(role), ctx.role(role + 1));
                let lhs_job = |i: usize| {
                    let wp = w_draw(&hc, s.dt, t, s.master_seed, rl, i);
                    let p = wp.path.offset(x);
                    let k = fk_weight_total(&v, &p, tail_of(&cache, &p));
                    let zs = nry_z(&p, kt);
                    Sample { values: zs.iter().map(|z| wp.weight * z * k.value).collect(), censored: k.censored }
                };
                let rhs_job = |i: usize| {
                    let p = bm(x, &grid, s.master_seed, rr, i);
                    let m = phi.phi(p.last()) * kill_between(&v, &p, 0, grid.n);
                    Sample::new(nry_z(&p, kt).iter().map(|z| z * m).collect())
                };
                let lhs = SampleSet::collect(ctx.exec, s.n_paths, &lhs_job);
                let rhs = SampleSet::collect(ctx.exec, s.n_paths, &rhs_job);
                role += 2;
                for (j, zn) in NRY_Z.iter().enumerate() {
                    let l = lhs.estimate(j, s.dt, 0.0, s.ci_level).adjusted(bound / 2.0, bound / 2.0);
                    let r = rhs.estimate(j, s.dt, 0.0, s.ci_level);
                    let nm = format!("nry1/V={vl}/x={x}/t={t}/Z={zn}");
                    out.push(Check::two_sided(&nm, l, r).evaluate(z));
                    if j == 0 {
                        let e = EstimatorResult::exact(phi.phi(x));
                        out.push(Check::two_sided(format!("{nm}/lhs-vs-phi"), l, e).evaluate(z));
                        out.push(Check::two_sided(format!("{nm}/rhs-vs-phi"), r, e).evaluate(z));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn markov(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let cap = u_cap(s, 0.5);
    let hc = WProposal::half_cauchy(s.theta, cap)?;
    let mut out = Vec::new();
    let mut role = 0;
    for (vl, v) in nry_measures()? {
        let phi = solve_phi(&v, s.sl_half_width, s.sl_dx)?;
        let cache = TailCache::new(&v, &[0.0], s.sl_dx);
        for (t, stopping) in [(1.0, false), (4.0, false), (4.0, true)] {
            let grid = TimeGrid::new(t, s.dt)?;
            let kt = grid.n;
            let stop = |p: &SamplePath| if stopping { p.hitting_index(1.0).map_or(kt, |k| k.min(kt)) } else { kt };
            let zs = |p: &SamplePath, k: usize| {
                let x = p.values[k];
                if stopping {
                    [1.0, sigmoid(x)]
                } else {
                    [1.0, if x.abs() < 1.0 { 1.0 } else { 0.0 }]
                }
            };
            let (rl, rr) = (ctx.role(role), ctx.role(role + 1));
            let lhs_job = |i: usize| {
                let wp = w_draw(&hc, s.dt, t, s.master_seed, rl, i);
                let p = &wp.path;
                let k = stop(p);
                let tail = tail_of(&cache, p);
                let kill = kill_between(&v, p, k, p.steps()) * tail.map_or(1.0, |tf| tf.kill(p.last()));
                Sample { values: zs(p, k).iter().map(|z| wp.weight * z * kill).collect(), censored: tail.is_none() }
            };
            let rhs_job = |i: usize| {
                let p = bm(0.0, &grid, s.master_seed, rr, i);
                let k = stop(&p);
                let m = phi.phi(p.values[k]);
                Sample::new(zs(&p, k).iter().map(|z| z * m).collect())
            };
            let lhs = SampleSet::collect(ctx.exec, s.n_paths, &lhs_job);
            let rhs = SampleSet::collect(ctx.exec, s.n_paths, &rhs_job);
            role += 2;
            let bound = kill_tail_bound(&v, 0.0, t, cap);
            let labels: [&str; 2] = if stopping { ["one", "sigmoid-Xtau"] } else { ["one", "abs-XT-below-1"] };
            let time = if stopping { format!("tau1^{t}") } else { format!("{t}") };
            for (j, zn) in labels.iter().enumerate() {
                let l = lhs.estimate(j, s.dt, 0.0, s.ci_level).adjusted(bound / 2.0, bound / 2.0);
                let r = rhs.estimate(j, s.dt, 0.0, s.ci_level);
                let nm = format!("markov/V={vl}/T={time}/Z={zn}");
                out.push(Check::two_sided(&nm, l, r).evaluate(z));
                if vl == "delta0" && t == 1.0 && j == 0 {
                    // W[1 + |X_1|]
                    let e = EstimatorResult::exact(1.0 + (2.0 / PI).sqrt());
                    out.push(Check::two_sided(format!("{nm}/lhs-closed-form"), l, e).evaluate(z));
                    out.push(Check::two_sided(format!("{nm}/rhs-closed-form"), r, e).evaluate(z));
                }
            }
        }
    }
    Ok(out)
}

/// Exact bias from rounding the bridge length to the grid, for a
/// conditional mean `f(u)`, over `u ≤ u_max`.
fn rounding_bias<F: Fn(f64) -> f64>(f: F, dt: f64, u_max: f64) -> f64 {
    let cells = (u_max / dt).ceil() as usize;
    let mut acc = crate::stats::KahanSum::new();
    for k in 1..=cells {
        let lo = if k == 1 { 0.0 } else { (k as f64 - 0.5) * dt };
        let hi = (k as f64 + 0.5) * dt;
        let fk = f(k as f64 * dt);
        acc.add(rho_integral(lo, hi, 1, |u| fk - f(u)));
    }
    acc.value()
}

pub(crate) fn tau0(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    // the conditional avoidance probabilities are exact on any grid
    let dt = s.dt.max(0.1);
    let cap = u_cap(s, 50.0);
    let hc = WProposal::half_cauchy(s.theta, cap)?;
    let mut out = Vec::new();
    for (j, x) in [0.0, -1.0, -0.5, 0.5, 1.0].into_iter().enumerate() {
        let job = |i: usize| {
            let wp = w_draw(&hc, dt, dt, s.master_seed, ctx.role(j as u32), i);
            let p = wp.path.offset(x);
            let nh = no_hit_probability(&p, 0.0);
            Sample { values: vec![wp.weight * nh.value], censored: nh.censored }
        };
        let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
        // conditional mean given u: (1 − e^{−2x²/u})/2, and its mass beyond the cap
        let fcond = |u: f64| 0.5 * (1.0 - (-2.0 * x * x / u).exp());
        let residual = 2.0 * x * x / (2.0 * PI * cap).sqrt();
        let bias = rounding_bias(fcond, dt, (400.0 * x * x).max(10.0));
        let l = set
            .estimate(0, dt, 2.0 * bias.abs(), s.ci_level)
            .adjusted(residual / 2.0, residual / 2.0);
        let nm = format!("tau0/x={x}");
        let c = Check::two_sided(&nm, l, EstimatorResult::exact(x.abs())).evaluate(z);
        let tol = c.tolerance;
        out.push(c);
        if x != 0.0 {
            out.push(Check::bounded_by(format!("{nm}/residual"), residual, tol / 10.0, 0.0).evaluate(z));
        } else {
            out.push(Check::exact(format!("{nm}/identically-zero"), set.max(0), 0.0, 0.0).evaluate(z));
        }
    }
    Ok(out)
}

pub(crate) fn nondeg_bound(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let cap = u_cap(s, 0.5);
    let hc = WProposal::half_cauchy(s.theta, cap)?;
    let ind = Integrand::indicator(0.0, 1.0, 1.0)?;
    let cases = [
        ("zero", Integrand::zero(), "delta0", MeasureSpec::atom(0.0, 1.0)),
        ("indicator", ind.clone(), "delta0", MeasureSpec::atom(0.0, 1.0)),
        ("indicator", ind, "2delta0", MeasureSpec::atom(0.0, 2.0)),
    ];
    let mut out = Vec::new();
    for (ci, (fl, f, vl, v)) in cases.iter().enumerate() {
        let phi = solve_phi(v, s.sl_half_width, s.sl_dx)?;
        let cache = TailCache::new(v, &[0.0], s.sl_dx);
        let sup = f.support_end();
        let job = |i: usize| {
            let wp = w_draw(&hc, s.dt, sup.max(s.dt), s.master_seed, ctx.role(ci as u32), i);
            let k = fk_weight_total(v, &wp.path, tail_of(&cache, &wp.path));
            let e = exp_density(f, &wp.path, None).unwrap_or(f64::NAN);
            Sample { values: vec![wp.weight * k.value * e], censored: k.censored }
        };
        let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
        let tilt = TiltedKill { s: sup, total: f.total() };
        let b = tail_integral(cap, |u| tilted_kill_bound(v, 0.0, tilt, u));
        let l = set.estimate(0, s.dt, 0.0, s.ci_level).adjusted(b / 2.0, b / 2.0);
        let bound = phi.phi(0.0) * (f.l1() / phi.c_v()).exp();
        let nm = format!("nondeg-bound/f={fl}/V={vl}");
        out.push(Check::at_most(&nm, l, EstimatorResult::exact(bound)).evaluate(z));
        if f.is_zero() {
            out.push(Check::two_sided(format!("{nm}/equality"), l, EstimatorResult::exact(phi.phi(0.0))).evaluate(z));
            out.push(Check::at_most(format!("{nm}/halved-bound"), l, EstimatorResult::exact(bound / 2.0)).control().evaluate(z));
        }
    }
    Ok(out)
}

pub(crate) fn step2_vanishing(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let gamma = WProposal::gamma(s.theta)?;
    gamma.check_decay(1.0)?;
    let f = Integrand::indicator(0.0, 1.0, 1.0)?;
    let ts = [0.0, 1.0, 2.0, 5.0];
    let job = |i: usize| {
        let wp = w_draw(&gamma, s.dt, 5.0, s.master_seed, ctx.role(0), i);
        let g = wp.path.last_exit_time(0.0);
        let gt = g.time.unwrap_or(f64::NAN);
        let base = wp.weight * (-gt).exp();
        let mut vals: Vec<f64> = ts
            .iter()
            .map(|&t| if gt > t { base * exp_density(&f, &wp.path, Some(t)).unwrap_or(f64::NAN) } else { 0.0 })
            .collect();
        vals.push(base);
        Sample { values: vals, censored: g.censored }
    };
    let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
    let mut out = Vec::new();
    for (j, t) in ts.iter().enumerate() {
        let l = set.estimate(j, s.dt, s.dt, s.ci_level);
        let bound = EstimatorResult::exact((-t).exp() * FRAC_1_SQRT_2);
        out.push(Check::at_most(format!("step2-vanishing/t={t}"), l, bound).evaluate(z));
        if j == 0 {
            out.push(Check::at_most("step2-vanishing/t=0/halved-bound", l, bound.scaled(0.5)).control().evaluate(z));
        }
    }
    let l = set.estimate(ts.len(), s.dt, s.dt, s.ci_level);
    out.push(Check::two_sided("step2-vanishing/f=zero/t=0/equality", l, EstimatorResult::exact(FRAC_1_SQRT_2)).evaluate(z));
    Ok(out)
}

pub(crate) fn domination(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let n = 10_000;
    let hc = WProposal::half_cauchy(s.theta, 1e3)?;
    let bump = |w: f64, e: f64| PiecewiseLinear::new(vec![-w - e, -w, w, w + e], vec![0.0, 1.0, 1.0, 0.0]);
    let v0 = MeasureSpec::zero().with_density(bump(2.0, 1.0)?);
    let shrunk = MeasureSpec::zero().with_density(bump(0.5, 0.1)?);
    let v1 = MeasureSpec::boxcar(-1.0, 1.0, 1.0)?;
    let f = Integrand::step(vec![0.0, 0.5, 1.5], vec![1.0, -0.6])?;
    let horizon = 3.0;
    let mut out = Vec::new();
    let cases: [(&str, Integrand, f64, &MeasureSpec); 4] = [
        ("zero", Integrand::zero(), 0.5, &v0),
        ("step", f.clone(), 0.5, &v0),
        ("step", f.clone(), 1.5, &v0),
        ("step", f.clone(), 0.5, &shrunk),
    ];
    for (ci, (fl, f, big_t, small)) in cases.iter().enumerate() {
        let tail_l1 = f.tail_l1(*big_t);
        out.push(Check::bounded_by(format!("domination/f={fl}/T={big_t}/tail-condition"), tail_l1, 1.0, 0.0).evaluate(z));
        let ts: Vec<f64> = [*big_t, big_t + 0.5, 2.0, 3.0].into_iter().filter(|&t| t >= *big_t).collect();
        let floors0: Vec<f64> = ts.iter().map(|&t| f.primitive(t)).collect();
        let cache0 = TailCache::new(small, &floors0, s.sl_dx);
        let cache1 = TailCache::new(&v1, &[f.primitive(*big_t)], s.sl_dx);
        let job = |i: usize| {
            let wp = w_draw(&hc, s.dt, horizon, s.master_seed, ctx.role(ci as u32), i);
            let pt = wp.path.translate_truncated(f, *big_t);
            let k1 = fk_weight_total(&v1, &pt, tail_of(&cache1, &pt));
            let mut bad = 0.0;
            let mut censored = k1.censored;
            for &t in &ts {
                let p = wp.path.translate_truncated(f, t);
                let k0 = fk_weight_total(small, &p, tail_of(&cache0, &p));
                censored |= k0.censored;
                if k0.value > k1.value * (1.0 + 1e-9) + 1e-12 {
                    bad += 1.0;
                }
            }
            Sample { values: vec![bad], censored }
        };
        let set = SampleSet::collect(ctx.exec, n, &job);
        let nm = format!("domination/f={fl}/T={big_t}/violations");
        let c = Check::exact(nm, set.sum(0), 0.0, 0.0);
        out.push(if ci == 3 { c.control() } else { c }.evaluate(z));
    }
    Ok(out)
}
