//! Translation of the σ-finite measure by a deterministic drift.

use super::bounds::last_zero_tail_bound;
use super::sigma::{u_cap, w_draw};
use super::{sigmoid, tail_of, Check, Ctx, EstimatorResult, IdentityCheck, Sample, SampleSet};
use crate::error::Result;
use crate::functionals::{exp_density, gamma_functional, last_zero_sweep};
use crate::integrand::Integrand;
use crate::measure::MeasureSpec;
use crate::path::SamplePath;
use crate::rng::{normal, RngStream};
use crate::samplers::WProposal;
use crate::special::{erf, erfc, gauss_legendre};
use crate::stats::{mean_se_of, KahanSum};
use crate::sturm_liouville::TailCache;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use num_traits::Float;

/// `G(X) Γ(V; X)` with `G ∈ {1, σ(X_1)}`.
fn g_gamma(v: &MeasureSpec, cache: &TailCache, p: &SamplePath, k1: usize, smooth: bool) -> (f64, bool) {
    let gm = gamma_functional(v, p, tail_of(cache, p));
    let g = if smooth { sigmoid(p.values[k1]) } else { 1.0 };
    (g * gm.value, gm.censored)
}

pub(crate) fn quasi_invariance(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let cap = u_cap(s, 0.5);
    let hc = WProposal::half_cauchy(s.theta, cap)?;
    let fs = [
        ("f1", Integrand::indicator(0.0, 1.0, 0.5)?),
        ("f2", Integrand::step(vec![0.0, 0.5, 1.0, 2.0], vec![0.4, 0.8, 0.3])?),
        ("f3", Integrand::step(vec![0.0, 1.0, 1.5, 2.5], vec![0.8, -1.0, 0.5])?),
    ];
    let vs = [("delta0", MeasureSpec::atom(0.0, 1.0)), ("box", MeasureSpec::boxcar(-0.5, 0.5, 1.0)?)];
    // (f, V, G smooth), then truncated rows (f, T) with V = δ₀, G ≡ 1
    let combos = [(0, 0, false), (0, 1, true), (1, 0, true), (1, 1, false), (2, 0, false), (2, 1, true)];
    let truncs = [(1usize, 1.0), (1, 3.0), (0, 1.0)];
    let mut floors = vec![0.0];
    floors.extend(fs.iter().map(|(_, f)| f.total()));
    floors.extend(truncs.iter().map(|&(fi, t)| fs[fi].1.primitive(t)));
    let caches: Vec<TailCache> = vs.iter().map(|(_, v)| TailCache::new(v, &floors, s.sl_dx)).collect();
    let horizon = 3.0;
    let k1 = (1.0 / s.dt).round() as usize;
    let job = |i: usize| {
        let wp = w_draw(&hc, s.dt, horizon, s.master_seed, ctx.role(0), i);
        let x = &wp.path;
        let w = wp.weight;
        let mut vals = Vec::with_capacity(2 * (combos.len() + truncs.len()) + 2);
        // the right-hand sides share Γ(V; X) across combinations
        let base: Vec<_> = vs.iter().zip(&caches).map(|((_, v), c)| g_gamma(v, c, x, k1, false)).collect();
        let sig = sigmoid(x.values[k1]);
        let mut censored = base.iter().any(|b| b.1);
        for &(fi, vi, smooth) in &combos {
            let f = &fs[fi].1;
            let (l, cl) = g_gamma(&vs[vi].1, &caches[vi], &x.translate(f), k1, smooth);
            let e = exp_density(f, x, None).unwrap_or(f64::NAN);
            censored |= cl;
            vals.push(w * l);
            vals.push(w * base[vi].0 * e * if smooth { sig } else { 1.0 });
        }
        for &(fi, t) in &truncs {
            let f = &fs[fi].1;
            let (l, cl) = g_gamma(&vs[0].1, &caches[0], &x.translate_truncated(f, t), k1, false);
            let e = exp_density(f, x, Some(t)).unwrap_or(f64::NAN);
            censored |= cl;
            vals.push(w * l);
            vals.push(w * base[0].0 * e);
        }
        // f ≡ 0
        let (l, _) = g_gamma(&vs[0].1, &caches[0], &x.translate(&Integrand::zero()), k1, false);
        vals.push(w * l);
        vals.push(w * base[0].0);
        Sample { values: vals, censored }
    };
    let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
    // beyond the cap: g(X) ≥ u on the right, so its mass is below ∫_U^∞ e^{−u}
    let right_cut = erfc(cap.sqrt()) * FRAC_1_SQRT_2;
    let side = |c: usize, h_inf: f64, sup: f64, left: bool| {
        let m = set.column(c).mean.abs();
        let cut = if left { last_zero_tail_bound(h_inf, sup, 0.0, f64::INFINITY, cap) } else { right_cut };
        // last-zero placement and bridge-length rounding
        set.estimate(c, s.dt, s.dt * m, s.ci_level).adjusted(cut / 2.0, cut / 2.0)
    };
    let mut out = Vec::new();
    let mut col = 0;
    for &(fi, vi, smooth) in &combos {
        let (fl, f) = &fs[fi];
        let l = side(col, f.total(), f.support_end(), true);
        let r = side(col + 1, 0.0, 0.0, false);
        let g = if smooth { "sigmoid-X1" } else { "one" };
        let nm = format!("quasi-invariance/f={fl}/V={}/G={g}", vs[vi].0);
        out.push(Check::paired(nm, l, r, set.paired_se(col, col + 1)).evaluate(z));
        col += 2;
    }
    let mut trunc_means = Vec::new();
    for &(fi, t) in &truncs {
        let (fl, f) = &fs[fi];
        let l = side(col, f.primitive(t), f.support_end().min(t), true);
        let r = side(col + 1, 0.0, 0.0, false);
        let nm = format!("quasi-invariance/truncated/f={fl}/T={t}/V=delta0/G=one");
        out.push(Check::paired(nm, l, r, set.paired_se(col, col + 1)).evaluate(z));
        trunc_means.push((set.column(col).mean, set.column(col + 1).mean));
        col += 2;
    }
    // f1 is supported in [0, 1): truncating at 1 changes nothing
    let full = (set.column(0).mean, set.column(1).mean);
    let t1 = trunc_means[2];
    out.push(Check::exact("quasi-invariance/truncated/f=f1/T=1/equals-full/lhs", t1.0, full.0, 1e-12 * full.0.abs()).evaluate(z));
    out.push(Check::exact("quasi-invariance/truncated/f=f1/T=1/equals-full/rhs", t1.1, full.1, 1e-12 * full.1.abs()).evaluate(z));
    let zl = set.column(col).mean;
    let zr = set.column(col + 1).mean;
    out.push(Check::exact("quasi-invariance/f=zero/difference", zl - zr, 0.0, 0.0).evaluate(z));
    Ok(out)
}

/// Values at `times` (increasing, in `(0, u]`) of a Brownian bridge from 0
/// to 0 over `[0, u]`.
fn bridge_at(times: &[f64], u: f64, rng: &mut impl rand::Rng) -> Vec<f64> {
    let (mut t0, mut x) = (0.0, 0.0);
    times
        .iter()
        .map(|&t| {
            if t >= u {
                x = 0.0;
            } else {
                let mean = x * (u - t) / (u - t0);
                let var = (t - t0) * (u - t) / (u - t0);
                x = mean + var.sqrt() * normal(rng);
            }
            t0 = t;
            x
        })
        .collect()
}

/// Values at `times` (increasing, positive) of `ε·R` with `R` a Bessel(3)
/// process from 0, as the norm of a 3-d Brownian motion.
fn sym_bessel_at(times: &[f64], rng: &mut impl rand::Rng) -> Vec<f64> {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut b = [0.0; 3];
    let mut t0 = 0.0;
    times
        .iter()
        .map(|&t| {
            let sd = (t - t0).sqrt();
            b.iter_mut().for_each(|c| *c += sd * normal(rng));
            t0 = t;
            sign * (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
        })
        .collect()
}

/// `∫ f dY − ½∫ f²` over the pieces of `f` inside `[lo, hi)`, where `y(t)`
/// returns `Y` at the piece ends.
fn log_density<Y: Fn(f64) -> f64>(f: &Integrand, lo: f64, hi: f64, y: Y) -> f64 {
    let mut acc = 0.0;
    for (a, b, c) in f.pieces() {
        let (a, b) = (a.max(lo), b.min(hi));
        if b > a {
            acc += c * (y(b) - y(a)) - 0.5 * c * c * (b - a);
        }
    }
    acc
}

/// Piece ends of `f` strictly inside `(lo, hi)`, plus `hi` when finite.
fn cut_times(f: &Integrand, lo: f64, hi: f64) -> Vec<f64> {
    let mut t: Vec<f64> = f.breaks().iter().copied().filter(|&b| b > lo && b < hi).collect();
    if hi.is_finite() {
        t.push(hi);
    }
    t
}

/// MC estimates of `Π^{(u)}[ℰ_u(f)]` and `R[ℰ(f(·+u))]`.
struct Factors {
    pi: (f64, f64),
    r: (f64, f64),
}

fn factors(f: &Integrand, u: f64, m: usize, seed: u64, role_pi: u32, role_r: u32, node: usize) -> Factors {
    let pi_times = cut_times(f, 0.0, u);
    let mut xs = Vec::with_capacity(m);
    for i in 0..m {
        let mut rng = RngStream::for_path(seed, role_pi, (node * m + i) as u64).rng();
        let vals = bridge_at(&pi_times, u, &mut rng);
        let y = |t: f64| if t <= 0.0 { 0.0 } else { vals[pi_times.iter().position(|&s| s == t).unwrap()] };
        xs.push(log_density(f, 0.0, u, y).exp());
    }
    let pi = mean_se_of(&xs);
    let shifted = f.shifted(u);
    let r_times = cut_times(&shifted, 0.0, f64::INFINITY);
    xs.clear();
    for i in 0..m {
        let mut rng = RngStream::for_path(seed, role_r, (node * m + i) as u64).rng();
        let vals = sym_bessel_at(&r_times, &mut rng);
        let y = |t: f64| if t <= 0.0 { 0.0 } else { vals[r_times.iter().position(|&s| s == t).unwrap()] };
        xs.push(log_density(&shifted, 0.0, f64::INFINITY, y).exp());
    }
    let r = mean_se_of(&xs);
    Factors { pi: (pi.mean, pi.se), r: (r.mean, r.se) }
}

pub(crate) fn rho_density(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let f = Integrand::indicator(0.0, 1.0, 1.0)?;
    let width = 0.5;
    let bins = 12;
    let horizon = width * bins as f64;
    let cap = u_cap(s, 0.5);
    let hc = WProposal::half_cauchy(s.theta, cap)?;
    let zero = MeasureSpec::zero();
    let cache = TailCache::new(&zero, &[0.0, f.total()], s.sl_dx);
    let job = |i: usize| {
        let wp = w_draw(&hc, s.dt, horizon, s.master_seed, ctx.role(0), i);
        let mut vals = vec![0.0; 2 * bins];
        let mut censored = false;
        for (side, p) in [wp.path.translate(&f), wp.path.clone()].iter().enumerate() {
            let mut acc = vec![KahanSum::new(); bins];
            let sw = last_zero_sweep(&zero, p, tail_of(&cache, p), |tau, m| {
                let b = ((tau / width).ceil() as usize).clamp(1, bins + 1) - 1;
                if b < bins {
                    acc[b].add((-tau).exp() * m);
                }
            });
            censored |= sw.censored;
            for (b, a) in acc.iter().enumerate() {
                vals[side * bins + b] = wp.weight * a.value();
            }
        }
        Sample { values: vals, censored }
    };
    let set = SampleSet::collect(ctx.exec, s.n_paths, &job);

    let m = s.n_paths.max(1000);
    let (nodes, weights) = gauss_legendre(6);
    let rho = |u: f64| (2.0 * PI * u).powf(-0.5) * (-u).exp();
    let mut out = Vec::new();
    for b in 0..bins {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        // ∫ e^{−u} ρ^f(u) du in s = √u
        let (sl, sh) = (lo.sqrt(), hi.sqrt());
        let mut val = 0.0;
        let mut var = 0.0;
        for (k, (x, w)) in nodes.iter().zip(&weights).enumerate() {
            let sn = 0.5 * (sl + sh) + 0.5 * (sh - sl) * x;
            let u = sn * sn;
            let c = 0.5 * (sh - sl) * w * (2.0 / PI).sqrt() * (-u).exp();
            let fa = factors(&f, u, m, s.master_seed, ctx.role(1), ctx.role(2), b * nodes.len() + k);
            val += c * fa.pi.0 * fa.r.0;
            var += c * c * ((fa.r.0 * fa.pi.1).powi(2) + (fa.pi.0 * fa.r.1).powi(2));
        }
        let r = EstimatorResult { std_error: var.sqrt(), n_paths: m, ..EstimatorResult::computed(val, 0.0) };
        let mean = set.column(b).mean.abs();
        let cut = last_zero_tail_bound(f.total(), f.support_end(), lo, hi, cap);
        let l = set.estimate(b, s.dt, s.dt * mean, s.ci_level).adjusted(cut / 2.0, cut / 2.0);
        out.push(Check::two_sided(format!("rho-density/bin={lo}-{hi}"), l, r).evaluate(z));

        // f ≡ 0: bridge-length rounding moves mass across the bin edges
        let edge = |e: f64| if e > 0.0 { s.dt * rho(e) } else { 0.0 };
        let mean0 = set.column(bins + b).mean.abs();
        let l0 = set.estimate(bins + b, s.dt, edge(lo) + edge(hi) + s.dt * mean0, s.ci_level);
        let exact = (erf(hi.sqrt()) - erf(lo.sqrt())) * FRAC_1_SQRT_2;
        out.push(Check::two_sided(format!("rho-density/f=zero/bin={lo}-{hi}"), l0, EstimatorResult::exact(exact)).evaluate(z));
    }
    // the bridge pins X_1 = 0, so ℰ_1 = e^{−1/2} on every path
    let fa = factors(&f, 1.0, m.min(1000), s.master_seed, ctx.role(3), ctx.role(4), 0);
    let pi1 = EstimatorResult { std_error: fa.pi.1, n_paths: m.min(1000), ..EstimatorResult::computed(fa.pi.0, 0.0) };
    out.push(Check::two_sided("rho-density/bridge-factor/u=1", pi1, EstimatorResult::exact((-0.5f64).exp())).evaluate(z));
    // beyond the support the Bessel factor is ℰ(0) = 1
    let fa = factors(&f, 2.0, 100, s.master_seed, ctx.role(5), ctx.role(6), 0);
    out.push(Check::exact("rho-density/bessel-factor/u=2", fa.r.0, 1.0, 0.0).evaluate(z));
    // bridge factor in closed form: e^{−u/2} for u ≤ 1, e^{−1/(2u)} beyond
    for u in [0.5, 3.0] {
        let fa = factors(&f, u, m, s.master_seed, ctx.role(7), ctx.role(8), if u < 1.0 { 1 } else { 2 });
        let exact = if u <= 1.0 { (-u / 2.0).exp() } else { (-0.5 / u).exp() };
        let est = EstimatorResult { std_error: fa.pi.1, n_paths: m, ..EstimatorResult::computed(fa.pi.0, 0.0) };
        out.push(Check::two_sided(format!("rho-density/bridge-factor/u={u}"), est, EstimatorResult::exact(exact)).evaluate(z));
    }
    Ok(out)
}
