//! Experiments on Brownian and Bessel paths of fixed length.

use super::{sigmoid, Check, Ctx, EstimatorResult, IdentityCheck, Sample, SampleSet};
use crate::error::Result;
use crate::functionals::{
    centered_wiener_integral, exp_density, gaussian_envelope, kill_between, last_zero_sweep, local_time_band,
    wiener_integral,
};
use crate::integrand::Integrand;
use crate::measure::MeasureSpec;
use crate::path::{SamplePath, TimeGrid};
use crate::rng::RngStream;
use crate::samplers::{sample_bessel_family_with, sample_bessel3_with, sample_bm_with};
use crate::special::{erf, gauss_hermite_normal, norm_cdf, Legendre};
use crate::sturm_liouville::solve_phi;
use crate::stats::KahanSum;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

/// Bias scale of the band local-time estimator, in units of `√dt`.
const C_LOC: f64 = 1.0;

fn bm(x: f64, grid: &TimeGrid, seed: u64, role: u32, i: usize) -> SamplePath {
    sample_bm_with(x, grid, &mut RngStream::for_path(seed, role, i as u64).rng())
}

/// `E_x[e^{−L⁰_t}]` in closed form: `erfcx(√(t/2))` from 0, otherwise
/// first passage to 0 followed by the `x = 0` law.
pub(crate) fn penalised_mass(x: f64, t: f64) -> f64 {
    let from_zero = |r: f64| crate::special::erfcx((r / 2.0).sqrt());
    if x == 0.0 {
        return from_zero(t);
    }
    let a = x.abs();
    let first_passage = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            a * (-a * a / (2.0 * s)).exp() / (2.0 * PI * s * s * s).sqrt()
        }
    };
    let hit = Legendre::new(20).integrate(0.0, t, 400, |s| first_passage(s) * from_zero(t - s));
    erf(a / (2.0 * t).sqrt()) + hit
}

pub(crate) fn penalisation(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let grid = TimeGrid::new(40.0, s.dt)?;
    let k25 = grid.index_of(25.0)?;
    let k1 = grid.index_of(1.0)?;
    let delta = MeasureSpec::atom(0.0, 1.0);
    let two = MeasureSpec::new(vec![(-0.5, 1.0), (1.0, 0.5)], None)?;
    let phi_two = solve_phi(&two, s.sl_half_width, s.sl_dx)?;
    let norm = |t: f64| (PI * t / 2.0).sqrt();
    let mut out = Vec::new();
    for (j, x) in [0.0, 1.0].into_iter().enumerate() {
        let eps = s.eps_localtime;
        let job = |i: usize| {
            let p = bm(x, &grid, s.master_seed, ctx.role(j as u32), i);
            let k = kill_between(&delta, &p, 0, k25);
            let band = local_time_band(&p, 0.0, 1.0, eps).unwrap_or(f64::NAN);
            Sample::new(vec![
                norm(25.0) * k,
                norm(40.0) * k * kill_between(&delta, &p, k25, grid.n),
                norm(40.0) * kill_between(&two, &p, 0, grid.n),
                band,
                kill_between(&MeasureSpec::atom(0.0, 1.0), &p, 0, k1),
            ])
        };
        let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
        let est = |c: usize| set.estimate(c, s.dt, 0.0, s.ci_level);
        let target = EstimatorResult::exact(1.0 + x);
        for (c, t) in [(0, 25), (1, 40)] {
            out.push(Check::relative(format!("penalisation/delta0/x={x}/t={t}"), est(c), target, 0.05).evaluate(z));
            // the estimator against its own finite-t value
            let exact = EstimatorResult::exact(norm(t as f64) * penalised_mass(x, t as f64));
            out.push(Check::two_sided(format!("penalisation/delta0/x={x}/t={t}/finite-t"), est(c), exact).evaluate(z));
        }
        let phi = EstimatorResult::exact(phi_two.phi(x));
        out.push(Check::relative(format!("penalisation/two-atoms/x={x}/t=40"), est(2), phi, 0.05).evaluate(z));
        if x == 0.0 {
            // band estimator against E L⁰_1 = √(2/π)
            let band = est(3).adjusted(0.0, C_LOC * s.dt.sqrt());
            let exact = EstimatorResult::exact((2.0 / PI).sqrt());
            out.push(Check::two_sided("penalisation/band-local-time/t=1", band, exact).evaluate(z));
            // E[e^{−L⁰_1}] = erfcx(1/√2)
            let lt = EstimatorResult::exact(crate::special::erfcx(0.5f64.sqrt()));
            out.push(Check::two_sided("penalisation/bridge-kill/t=1", est(4), lt).evaluate(z));
        }
    }
    Ok(out)
}

/// The bounded functionals of the Cameron–Martin battery.
const CM_F: [&str; 4] = ["exp-g", "sigmoid-X1", "exp-L1", "one"];

fn cm_values(p: &SamplePath, k1: usize, out: &mut Vec<f64>) {
    let mut acc = KahanSum::new();
    let sw = last_zero_sweep(&MeasureSpec::zero(), p, None, |tau, m| acc.add((-tau).exp() * m));
    acc.add(sw.never);
    out.push(acc.value());
    out.push(sigmoid(p.values[k1]));
    out.push(kill_between(&MeasureSpec::atom(0.0, 1.0), p, 0, k1));
    out.push(1.0);
}

pub(crate) fn cm_brownian(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let grid = TimeGrid::new(s.t_max, s.dt)?;
    let k1 = grid.index_of(1.0)?;
    let fs = [
        ("zero", Integrand::zero()),
        ("indicator", Integrand::indicator(0.0, 1.0, 1.0)?),
        ("signed-step", Integrand::step(vec![0.0, 0.5, 1.5, 2.0], vec![1.0, -1.5, 0.8])?),
    ];
    let nf = CM_F.len();
    let job = |i: usize| {
        let p = bm(0.0, &grid, s.master_seed, ctx.role(0), i);
        let mut base = Vec::with_capacity(nf);
        cm_values(&p, k1, &mut base);
        let mut vals = Vec::with_capacity(2 * nf * fs.len());
        for (_, f) in &fs {
            let e = exp_density(f, &p, None).unwrap_or(f64::NAN);
            cm_values(&p.translate(f), k1, &mut vals);
            vals.extend(base.iter().map(|b| b * e));
        }
        Sample::new(vals)
    };
    let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
    let mut out = Vec::new();
    for (fi, (label, f)) in fs.iter().enumerate() {
        for (j, name) in CM_F.iter().enumerate() {
            let (cl, cr) = (fi * 2 * nf + j, fi * 2 * nf + nf + j);
            // last-zero placement within a grid interval
            let budget = if j == 0 { s.dt / 2.0 } else { 0.0 };
            let l = set.estimate(cl, s.dt, budget, s.ci_level);
            let r = set.estimate(cr, s.dt, budget, s.ci_level);
            let nm = format!("cm-brownian/f={label}/F={name}");
            if f.is_zero() {
                out.push(Check::exact(format!("{nm}/identical"), l.mean, r.mean, 0.0).evaluate(z));
            } else {
                out.push(Check::paired(nm, l, r, set.paired_se(cl, cr)).evaluate(z));
            }
        }
        if *label == "indicator" {
            // W[σ(X_1 + 1)] by Gauss–Hermite
            let (x, w) = gauss_hermite_normal(60);
            let oracle: f64 = x.iter().zip(&w).map(|(x, w)| w * sigmoid(x + 1.0)).sum();
            let o = EstimatorResult::exact(oracle);
            let base = fi * 2 * nf;
            out.push(Check::two_sided("cm-brownian/f=indicator/F=sigmoid-X1/lhs-quadrature", set.estimate(base + 1, s.dt, 0.0, s.ci_level), o).evaluate(z));
            out.push(Check::two_sided("cm-brownian/f=indicator/F=sigmoid-X1/rhs-quadrature", set.estimate(base + nf + 1, s.dt, 0.0, s.ci_level), o).evaluate(z));
            let one = EstimatorResult::exact(1.0);
            out.push(Check::two_sided("cm-brownian/f=indicator/F=one/unit-mean", set.estimate(base + nf + 3, s.dt, 0.0, s.ci_level), one).evaluate(z));
        }
    }
    Ok(out)
}

type Psi = fn(f64) -> f64;

const PSI: [(&str, Psi); 3] = [
    ("square", |x| x * x),
    ("exp-abs", |x| {
        let e = x.abs().exp() - 1.0;
        e * e
    }),
    ("abs", f64::abs),
];

/// `W[ψ(σN)]` in closed form.
fn gaussian_psi(name: &str, sigma: f64) -> f64 {
    // E[e^{c|N|}] = 2 e^{c²/2} Φ(c)
    let m = |c: f64| 2.0 * (c * c / 2.0).exp() * norm_cdf(c);
    match name {
        "square" => sigma * sigma,
        "abs" => sigma * (2.0 / PI).sqrt(),
        _ => m(2.0 * sigma) - 2.0 * m(sigma) + 1.0,
    }
}

pub(crate) fn fhy(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let f = Integrand::step(vec![0.0, 0.5, 1.5, 2.0], vec![1.0, -0.5, 0.8])?;
    let grid = TimeGrid::new(f.support_end(), s.dt)?;
    let rhs_job = |i: usize| {
        let p = bm(0.0, &grid, s.master_seed, ctx.role(0), i);
        let w = wiener_integral(&f, &p, None).unwrap_or(f64::NAN);
        Sample::new(PSI.iter().map(|(_, psi)| psi(w)).collect())
    };
    let rhs = SampleSet::collect(ctx.exec, s.n_paths, &rhs_job);
    let mut out = Vec::new();
    for (j, (name, _)) in PSI.iter().enumerate() {
        let exact = EstimatorResult::exact(gaussian_psi(name, f.l2()));
        out.push(Check::two_sided(format!("fhy/rhs-closed-form/psi={name}"), rhs.estimate(j, s.dt, 0.0, s.ci_level), exact).evaluate(z));
    }
    for (ai, a) in [0.0, 1.0, 3.0].into_iter().enumerate() {
        let job = |i: usize| {
            let mut rng = RngStream::for_path(s.master_seed, ctx.role(1 + ai as u32), i as u64).rng();
            let p = sample_bessel3_with(a, s.dt, grid.n, &mut rng);
            let w = centered_wiener_integral(&f, &p, a).unwrap_or(f64::NAN);
            Sample::new(PSI.iter().map(|(_, psi)| psi(w)).collect())
        };
        let lhs = SampleSet::collect(ctx.exec, s.n_paths, &job);
        for (j, (name, _)) in PSI.iter().enumerate() {
            let l = lhs.estimate(j, s.dt, 0.0, s.ci_level);
            let r = rhs.estimate(j, s.dt, 0.0, s.ci_level);
            out.push(Check::at_most(format!("fhy/a={a}/psi={name}"), l, r).evaluate(z));
            if a == 3.0 && *name == "square" {
                out.push(Check::at_most(format!("fhy/a={a}/psi={name}/halved-rhs"), l, r.scaled(0.5)).control().evaluate(z));
            }
        }
    }
    // f ≡ 0: both sides are ψ(0) = 0 exactly
    let p = sample_bessel3_with(1.0, s.dt, grid.n, &mut RngStream::for_path(s.master_seed, ctx.role(9), 0).rng());
    let w0 = centered_wiener_integral(&Integrand::zero(), &p, 1.0)?;
    out.push(Check::exact("fhy/f=zero", w0, 0.0, 0.0).evaluate(z));
    Ok(out)
}

pub(crate) fn envelope(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let f = Integrand::step(vec![0.0, 2.0, 4.0, 8.0], vec![0.6, -0.4, 0.3])?;
    let mut out = Vec::new();
    let mut k = 0;
    for t in [0.0, 1.0, 5.0] {
        let ft = f.shifted(t);
        let steps = TimeGrid::new(ft.support_end(), s.dt)?.n;
        let bound = gaussian_envelope(&f, t);
        for a in [1.0, -1.0, 0.0] {
            let role = ctx.role(k);
            let job = |i: usize| {
                let mut rng = RngStream::for_path(s.master_seed, role, i as u64).rng();
                let p = sample_bessel_family_with(a, s.dt, steps, &mut rng);
                let e = exp_density(&ft, &p, None).unwrap_or(f64::NAN) - 1.0;
                Sample::new(vec![e * e])
            };
            k += 1;
            let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
            let l = set.estimate(0, s.dt, 0.0, s.ci_level);
            let r = EstimatorResult::exact(bound);
            out.push(Check::at_most(format!("envelope/t={t}/a={a}"), l, r).evaluate(z));
            if t == 1.0 && a == 1.0 {
                // without the Gaussian fluctuation and the drift term
                let sig = f.tail_l2(t);
                let naive = ((sig * sig / 2.0).exp() - 1.0).powi(2);
                let r = EstimatorResult::exact(naive);
                out.push(Check::at_most(format!("envelope/t={t}/a={a}/no-fluctuation"), l, r).control().evaluate(z));
            }
        }
    }
    Ok(out)
}

pub(crate) fn nry2(ctx: &Ctx) -> Result<Vec<IdentityCheck>> {
    let s = ctx.s;
    let z = s.z();
    let t = 1.0;
    let grid = TimeGrid::new(t, s.dt)?;
    let lambdas = [1.0, 0.1, 0.01, 0.001];
    let events: [(&str, fn(f64) -> bool, f64); 3] = [
        ("abs-below-1", |x| x.abs() < 1.0, erf(1.0 / (2.0 * t).sqrt())),
        ("whole", |_| true, 1.0),
        ("empty", |_| false, 0.0),
    ];
    let job = |i: usize| {
        let p = bm(0.0, &grid, s.master_seed, ctx.role(0), i);
        let xt = p.last();
        let mut vals = Vec::new();
        for (_, a, _) in &events {
            for &lam in &lambdas {
                let k = kill_between(&MeasureSpec::atom(0.0, lam), &p, 0, grid.n);
                vals.push(if a(xt) { k } else { 0.0 });
            }
        }
        Sample::new(vals)
    };
    let set = SampleSet::collect(ctx.exec, s.n_paths, &job);
    let mut out = Vec::new();
    for (ei, (name, _, prob)) in events.iter().enumerate() {
        let mut prev = 0.0;
        for (li, &lam) in lambdas.iter().enumerate() {
            let c = ei * lambdas.len() + li;
            // (1/λ) W[1_A e^{−λ L⁰_t}]
            let lb = set.estimate(c, s.dt, 0.0, s.ci_level).scaled(1.0 / lam);
            if *name == "empty" {
                out.push(Check::exact(format!("nry2/A={name}/lambda={lam}"), lb.mean, 0.0, 0.0).evaluate(z));
                continue;
            }
            if li > 0 {
                let grows = Check::at_least(
                    format!("nry2/A={name}/lambda={lam}/grows"),
                    EstimatorResult::exact(lb.mean),
                    EstimatorResult::exact(prev),
                    0.0,
                );
                out.push(grows.evaluate(z));
            }
            prev = lb.mean;
            if lam <= 0.01 {
                let scaled = lb.scaled(lam);
                let floor = EstimatorResult::exact(0.9 * prob);
                let tol = z * scaled.std_error;
                out.push(Check::at_least(format!("nry2/A={name}/lambda={lam}/lower-bound"), scaled, floor, tol).evaluate(z));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalised_mass_matches_reference() {
        // reference values from an independent adaptive quadrature
        assert!((penalised_mass(0.0, 25.0) * (PI * 12.5).sqrt() - 0.9640405235765788).abs() < 1e-10);
        assert!((penalised_mass(1.0, 25.0) * (PI * 12.5).sqrt() - 1.9043088890369666).abs() < 1e-8);
        assert!((penalised_mass(1.0, 40.0) * (PI * 20.0).sqrt() - 1.9378816513572947).abs() < 1e-8);
        // t → 0 keeps the full mass
        assert!((penalised_mass(1.0, 1e-4) - 1.0).abs() < 1e-9);
    }
}
