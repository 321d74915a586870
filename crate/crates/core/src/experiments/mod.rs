//! Monte-Carlo estimator harness and the battery of verification experiments.
//!
//! Every experiment is a list of [`IdentityCheck`]s. Per-path work goes
//! through an [`Executor`], which only maps path indices to sample rows;
//! all reductions happen here in path order, so results do not depend on
//! how the host schedules the work.

mod bounds;
mod brownian;
mod deterministic;
mod girsanov;
mod harness;
mod sigma;

pub use bounds::{
    kill_tail_bound, last_zero_tail_bound, normal_average, tail_integral, tilted_kill_bound, TiltedKill,
};
pub use harness::{
    mc_estimate, Check, CheckKind, EstimatorResult, Executor, IdentityCheck, Sample, SampleSet, Sequential, Verdict,
};

use crate::error::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

/// Numerical settings shared by all experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Scale of the bridge-length proposal.
    pub theta: f64,
    /// Half-width of the band local-time estimator.
    pub eps_localtime: f64,
    /// Half-width of the Sturm–Liouville domain.
    pub sl_half_width: f64,
    pub sl_dx: f64,
    pub ci_level: f64,
}

/// Confidence level whose two-sided normal quantile is 4.
pub const FOUR_SIGMA_LEVEL: f64 = 0.999936657516334;

impl Default for Settings {
    /// Desk scale.
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 40.0,
            n_paths: 100_000,
            master_seed: 1,
            theta: 1.0,
            eps_localtime: 1e-3f64.sqrt(),
            sl_half_width: 50.0,
            sl_dx: 1e-3,
            ci_level: FOUR_SIGMA_LEVEL,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("theta", self.theta),
            ("eps_localtime", self.eps_localtime),
            ("L", self.sl_half_width),
            ("dx", self.sl_dx),
        ];
        for (k, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{k} = {v} must be positive")));
            }
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be positive".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidParameter(format!("ci_level = {} must lie in (0, 1)", self.ci_level)));
        }
        if self.t_max < 6.0 {
            return Err(Error::InvalidParameter(format!("t_max = {} is shorter than the longest check horizon 6", self.t_max)));
        }
        let steps = self.t_max / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidParameter(format!("t_max {} is not a multiple of dt {}", self.t_max, self.dt)));
        }
        for t in [0.5, 1.0] {
            let k = t / self.dt;
            if (k - k.round()).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("dt {} must divide {t}", self.dt)));
            }
        }
        Ok(())
    }

    pub fn z(&self) -> f64 {
        crate::special::two_sided_z(self.ci_level)
    }
}

/// Names of all experiments, in battery order.
pub const EXPERIMENTS: &[&str] = &[
    "phi-atom",
    "w-sampler",
    "penalisation",
    "nry1",
    "markov",
    "tau0",
    "cm-brownian",
    "quasi-invariance",
    "rho-density",
    "fhy",
    "nondeg-bound",
    "step2-vanishing",
    "envelope",
    "domination",
    "l1-bound",
    "nry2",
];

/// The checks of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub checks: Vec<IdentityCheck>,
}

impl ExperimentReport {
    /// FAIL dominates INCONCLUSIVE, which dominates PASS.
    pub fn verdict(&self) -> Verdict {
        self.checks.iter().map(|c| c.verdict).fold(Verdict::Pass, Verdict::worst)
    }

    /// The check closest to (or furthest past) its tolerance.
    pub fn representative(&self) -> Option<&IdentityCheck> {
        let v = self.verdict();
        self.checks
            .iter()
            .filter(|c| c.verdict == v)
            .max_by(|a, b| a.severity().total_cmp(&b.severity()))
    }
}

pub(crate) struct Ctx<'a> {
    pub s: &'a Settings,
    pub exec: &'a dyn Executor,
    /// Experiment index, used to derive stream roles.
    pub id: u32,
}

impl Ctx<'_> {
    /// Stream role for sub-estimator `k` of this experiment.
    pub fn role(&self, k: u32) -> u32 {
        debug_assert!(k < 1 << 16);
        (self.id << 16) | k
    }
}

pub fn run_experiment(name: &str, s: &Settings, exec: &dyn Executor) -> Result<ExperimentReport> {
    s.validate()?;
    let id = EXPERIMENTS
        .iter()
        .position(|&e| e == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment {name}")))? as u32;
    let ctx = Ctx { s, exec, id: id + 1 };
    let checks = match name {
        "phi-atom" => deterministic::phi_atom(&ctx)?,
        "w-sampler" => sigma::w_sampler(&ctx)?,
        "penalisation" => brownian::penalisation(&ctx)?,
        "nry1" => sigma::nry1(&ctx)?,
        "markov" => sigma::markov(&ctx)?,
        "tau0" => sigma::tau0(&ctx)?,
        "cm-brownian" => brownian::cm_brownian(&ctx)?,
        "quasi-invariance" => girsanov::quasi_invariance(&ctx)?,
        "rho-density" => girsanov::rho_density(&ctx)?,
        "fhy" => brownian::fhy(&ctx)?,
        "nondeg-bound" => sigma::nondeg_bound(&ctx)?,
        "step2-vanishing" => sigma::step2_vanishing(&ctx)?,
        "envelope" => brownian::envelope(&ctx)?,
        "domination" => sigma::domination(&ctx)?,
        "l1-bound" => deterministic::l1_bound(&ctx)?,
        "nry2" => brownian::nry2(&ctx)?,
        _ => unreachable!(),
    };
    Ok(ExperimentReport { name: name.into(), checks })
}

pub fn run_all(s: &Settings, exec: &dyn Executor) -> Result<Vec<ExperimentReport>> {
    EXPERIMENTS.iter().map(|n| run_experiment(n, s, exec)).collect()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Tail continuation matching the path's final frame.
pub(crate) fn tail_of<'a>(
    cache: &'a crate::sturm_liouville::TailCache,
    p: &crate::path::SamplePath,
) -> Option<&'a crate::sturm_liouville::TailFactors> {
    p.tail.as_ref().and_then(|t| cache.get(t.final_floor(), t.sign))
}

