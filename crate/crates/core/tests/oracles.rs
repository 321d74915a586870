//! Sampler moments against closed forms, through the public API only.

use penalab_core::functionals::{exp_last_exit, local_time_zero};
use penalab_core::rng::RngStream;
use penalab_core::samplers::{sample_bessel3, sample_bm, sample_bridge, sample_w, WProposal};
use penalab_core::stats::mean_se;
use penalab_core::TimeGrid;
use std::f64::consts::PI;

const N: usize = 20_000;

#[test]
fn bridge_midpoint_variance() {
    // Var Π^(u)_{u/2} = u/4
    let m = mean_se(N, |i| {
        let p = sample_bridge(2.0, 0.01, RngStream::new(11, i as u64)).unwrap();
        p.at(1.0).unwrap().powi(2)
    });
    assert!((m.mean - 0.5).abs() < 4.0 * m.se, "{m:?}");
}

#[test]
fn bessel3_mean_from_zero() {
    // |N(0, I_3)| has mean 2√(2/π)
    let g = TimeGrid::new(1.0, 0.05).unwrap();
    let m = mean_se(N, |i| sample_bessel3(0.0, &g, RngStream::new(12, i as u64)).unwrap().last());
    assert!((m.mean - 2.0 * (2.0 / PI).sqrt()).abs() < 4.0 * m.se, "{m:?}");
}

#[test]
fn band_local_time_mean() {
    // E L⁰_1 = E|B_1| = √(2/π); the band estimator is biased by O(√dt)
    let dt = 1e-3;
    let g = TimeGrid::new(1.0, dt).unwrap();
    let m = mean_se(N / 4, |i| local_time_zero(&sample_bm(0.0, &g, RngStream::new(13, i as u64)), 1.0, None).unwrap());
    assert!((m.mean - (2.0 / PI).sqrt()).abs() < 4.0 * m.se + dt.sqrt(), "{m:?}");
}

#[test]
fn w_mass_of_exp_minus_g() {
    // W[e^{−g}] = ∫ e^{−u} (2πu)^{−1/2} du = 1/√2
    let g = TimeGrid::new(40.0, 0.01).unwrap();
    let p = WProposal::gamma(1.0).unwrap();
    let m = mean_se(N, |i| {
        let w = sample_w(&p, &g, RngStream::new(14, i as u64)).unwrap();
        w.weight * exp_last_exit(&w.path, 1.0).value
    });
    assert!((m.mean - 0.5f64.sqrt()).abs() < 4.0 * m.se + 0.01, "{m:?}");
}
