use penalab_core::experiments::{run_experiment, Executor, Sample, Sequential, Settings};
use penalab_core::functionals::{bridge_hit_probability, bridge_kill, f_tilde, f_tilde_integral, phi_a};
use penalab_core::rng::RngStream;
use penalab_core::samplers::{sample_bessel3, sample_bm, sample_bridge, sample_w, WProposal};
use penalab_core::sturm_liouville::solve_phi;
use penalab_core::{Integrand, MeasureSpec, SamplePath, TimeGrid};
use proptest::prelude::*;

fn step_integrand() -> impl Strategy<Value = Integrand> {
    prop::collection::vec((0.05f64..1.5, -2.0f64..2.0), 1..5).prop_map(|pieces| {
        let mut breaks = vec![0.0];
        let mut levels = Vec::new();
        for (w, c) in pieces {
            breaks.push(breaks.last().unwrap() + w);
            levels.push(c);
        }
        Integrand::step(breaks, levels).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_index_round_trip(n in 1usize..5000, k in 0usize..5000) {
        let dt = 1e-3;
        let g = TimeGrid::new(n as f64 * dt, dt).unwrap();
        let k = k % (n + 1);
        prop_assert_eq!(g.index_of(g.time(k)).unwrap(), k);
    }

    #[test]
    fn concat_then_shift_recovers_tail(seed in any::<u64>(), a in 1usize..200, b in 1usize..200) {
        let dt = 0.01;
        let x = sample_bridge(a as f64 * dt, dt, RngStream::new(seed, 0)).unwrap();
        let y = sample_bm(0.0, &TimeGrid::new(b as f64 * dt, dt).unwrap(), RngStream::new(seed, 1));
        let z = x.concat(&y).unwrap();
        prop_assert_eq!(z.steps(), a + b);
        let back = z.shift_index(a).unwrap();
        prop_assert_eq!(&back.values, &y.values);
    }

    #[test]
    fn bridge_pinned_bessel_positive(seed in any::<u64>(), a in 0.0f64..2.0) {
        let dt = 0.01;
        let br = sample_bridge(1.0, dt, RngStream::new(seed, 2)).unwrap();
        prop_assert_eq!(br.values[0], 0.0);
        prop_assert_eq!(br.last(), 0.0);
        let be = sample_bessel3(a, &TimeGrid::new(1.0, dt).unwrap(), RngStream::new(seed, 3)).unwrap();
        prop_assert_eq!(be.values[0], a);
        prop_assert!(be.values[1..].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn w_draws_end_their_bridge_at_zero(seed in any::<u64>(), theta in 0.3f64..2.0) {
        let p = WProposal::gamma(theta).unwrap();
        let g = TimeGrid::new(40.0, 0.01).unwrap();
        let w = sample_w(&p, &g, RngStream::new(seed, 4)).unwrap();
        prop_assert!(w.weight > 0.0 && w.weight.is_finite());
        prop_assert_eq!(w.path.at(w.u).unwrap(), 0.0);
        let after = g.index_of(w.u).unwrap();
        prop_assert!(w.path.values[after + 1..].iter().all(|&v| v != 0.0 && v.signum() == w.sign));
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), idx in any::<u64>()) {
        let g = TimeGrid::new(0.5, 0.01).unwrap();
        let a = sample_bm(0.0, &g, RngStream::new(seed, idx));
        let b = sample_bm(0.0, &g, RngStream::new(seed, idx));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn l1_bound_on_f_tilde(f in step_integrand(), a in 0.01f64..10.0) {
        prop_assert!(f_tilde_integral(&f, a) <= 2.0 * a.sqrt() * f.l1() * (1.0 + 1e-12));
        // beyond the support f̃ vanishes
        prop_assert_eq!(f_tilde(&f, f.support_end() + a), 0.0);
    }

    #[test]
    fn phi_a_below_phi_0(a in 0.0f64..10.0, t in 1e-4f64..100.0) {
        prop_assert!(phi_a(a, t) <= phi_a(0.0, t) * (1.0 + 1e-12));
    }

    #[test]
    fn bridge_kill_is_a_probability(a in -3.0f64..3.0, b in -3.0f64..3.0, h in 1e-3f64..2.0, lam in 0.0f64..5.0) {
        let k = bridge_kill(a, b, h, lam);
        let p = bridge_hit_probability(a, b, h);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&k));
        // killing only happens after a hit
        prop_assert!(k >= 1.0 - p - 1e-12);
    }

    #[test]
    fn phi_convex_with_unit_slopes(atoms in prop::collection::vec((-2.0f64..2.0, 0.1f64..2.0), 1..4)) {
        let v = MeasureSpec::new(atoms, None).unwrap();
        let sol = solve_phi(&v, 20.0, 1e-2).unwrap();
        let xs: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.1).collect();
        for w in xs.windows(2) {
            prop_assert!(sol.dphi(w[1]) >= sol.dphi(w[0]) - 1e-9);
        }
        prop_assert!((sol.dphi(-10.0) + 1.0).abs() < 1e-9);
        prop_assert!((sol.dphi(10.0) - 1.0).abs() < 1e-9);
        prop_assert!(xs.iter().all(|&x| sol.phi(x) >= sol.c_v() - 1e-12));
    }

    #[test]
    fn translation_adds_the_primitive(seed in any::<u64>(), f in step_integrand()) {
        let g = TimeGrid::new(4.0, 0.01).unwrap();
        let x = sample_bm(0.0, &g, RngStream::new(seed, 5));
        let y: SamplePath = x.translate(&f);
        for i in (0..=g.n).step_by(37) {
            let t = g.time(i);
            prop_assert!((y.values[i] - x.values[i] - f.primitive(t)).abs() < 1e-12);
        }
    }
}

struct Shuffled;

impl Executor for Shuffled {
    // reverse order: results must still be indexed by path
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> Sample + Sync)) -> Vec<Sample> {
        let mut v: Vec<(usize, Sample)> = (0..n).rev().map(|i| (i, job(i))).collect();
        v.sort_by_key(|p| p.0);
        v.into_iter().map(|p| p.1).collect()
    }
}

#[test]
fn verdicts_ignore_execution_order() {
    let s = Settings { dt: 0.01, n_paths: 300, eps_localtime: 0.1, ..Settings::default() };
    for name in ["markov", "quasi-invariance"] {
        let a = run_experiment(name, &s, &Sequential).unwrap();
        let b = run_experiment(name, &s, &Shuffled).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
