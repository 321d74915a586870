//! Path functionals: local times, Feynman–Kac weights, Wiener integrals,
//! Bessel means and the envelope quantities.

mod bessel;
mod envelope;
mod feynman_kac;
mod local_time;
mod wiener;

pub use bessel::{bessel_mean, centered_wiener_integral, phi_a};
pub use envelope::{f_tilde, f_tilde_integral, gaussian_envelope};
pub use feynman_kac::{
    fk_weight_t, fk_weight_t_with, fk_weight_total, gamma_functional, kill_between, last_zero_sweep,
    no_hit_probability, LastZeroSummary, LocalTimeMethod,
};
pub use local_time::{bridge_hit_probability, bridge_kill, bridge_kill_on_hit, local_time_band, local_time_zero};
pub use wiener::{energy, exp_density, wiener_integral};

use crate::path::SamplePath;
use num_traits::Float;

/// A functional value with censoring and discretization information.
///
/// The true conditional value lies within `value ± bias_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValue {
    pub value: f64,
    pub censored: bool,
    pub bias_bound: f64,
}

impl FunctionalValue {
    pub fn exact(value: f64) -> Self {
        Self { value, censored: false, bias_bound: 0.0 }
    }
}

/// `e^{−α g}` with `g` the last grid zero; `g = 0` when the path never
/// touches 0.
pub fn exp_last_exit(path: &SamplePath, alpha: f64) -> FunctionalValue {
    let g = path.last_exit_time(0.0);
    FunctionalValue { value: (-alpha * g.time.unwrap_or(0.0)).exp(), censored: g.censored, bias_bound: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::BesselTail;

    #[test]
    fn exp_last_exit_on_annotated_path() {
        let tail = BesselTail { start: 2, sign: 1.0, floor: vec![0.0; 2] };
        let p = SamplePath::new(0.5, vec![0.0, -0.2, 0.0, 0.3]).with_tail(tail);
        let v = exp_last_exit(&p, 2.0);
        assert_eq!(v.value, (-2.0f64).exp());
        assert!(!v.censored);
    }
}
