use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::{mean_se, KahanSum, MeanSe};
use alloc::string::String;
use alloc::vec::Vec;

/// Censored-path rate above which no check may pass.
pub const MAX_CENSOR_RATE: f64 = 0.05;

/// Per-path output: one value per estimator column.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    pub censored: bool,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, censored: false }
    }
}

/// Maps path indices `0..n` to samples. Implementations may run jobs in any
/// order or in parallel but must return them indexed by path.
pub trait Executor: Sync {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> Sample + Sync)) -> Vec<Sample>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> Sample + Sync)) -> Vec<Sample> {
        (0..n).map(job).collect()
    }
}

/// Samples of all paths, reduced in path order.
#[derive(Debug, Clone)]
pub struct SampleSet {
    rows: Vec<Sample>,
}

impl SampleSet {
    pub fn collect(exec: &dyn Executor, n: usize, job: &(dyn Fn(usize) -> Sample + Sync)) -> Self {
        let rows = exec.map(n, job);
        assert_eq!(rows.len(), n, "executor returned {} of {n} samples", rows.len());
        Self { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.rows[i].values[j]
    }

    pub fn column(&self, j: usize) -> MeanSe {
        mean_se(self.n(), |i| self.rows[i].values[j])
    }

    /// Standard error of the mean of `col a − col b` (common random numbers).
    pub fn paired_se(&self, a: usize, b: usize) -> f64 {
        mean_se(self.n(), |i| self.rows[i].values[a] - self.rows[i].values[b]).se
    }

    pub fn censor_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.censored).count() as f64 / self.n() as f64
    }

    pub fn max(&self, j: usize) -> f64 {
        self.rows.iter().map(|r| r.values[j]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self, j: usize) -> f64 {
        let mut acc = KahanSum::new();
        self.rows.iter().for_each(|r| acc.add(r.values[j]));
        acc.value()
    }

    pub fn estimate(&self, j: usize, dt: f64, budget: f64, ci_level: f64) -> EstimatorResult {
        let m = self.column(j);
        EstimatorResult {
            mean: m.mean,
            std_error: m.se,
            n_paths: m.n,
            censor_rate: self.censor_rate(),
            dt,
            discretization_budget: budget,
            ci_level,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub censor_rate: f64,
    pub dt: f64,
    /// Bound on systematic error: discretization plus truncation.
    pub discretization_budget: f64,
    pub ci_level: f64,
}

impl EstimatorResult {
    /// A known value (closed form or quadrature).
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            n_paths: 0,
            censor_rate: 0.0,
            dt: 0.0,
            discretization_budget: 0.0,
            ci_level: 0.0,
        }
    }

    /// A deterministic numerical value with an error bound.
    pub fn computed(value: f64, budget: f64) -> Self {
        Self { discretization_budget: budget, ..Self::exact(value) }
    }

    pub fn tolerance(&self, z: f64) -> f64 {
        z * self.std_error + self.discretization_budget
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.mean *= k;
        self.std_error *= k.abs();
        self.discretization_budget *= k.abs();
        self
    }

    /// Adds `shift` to the mean and `slack` to the budget.
    pub fn adjusted(mut self, shift: f64, slack: f64) -> Self {
        self.mean += shift;
        self.discretization_budget += slack;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn worst(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckKind {
    /// `|lhs − rhs| ≤ z·se + budgets`; `se` is the paired standard error
    /// when the sides share random numbers, `se_l + se_r` otherwise.
    TwoSided { paired_se: Option<f64> },
    /// `lhs ≤ rhs + k·se + budgets`.
    OneSided { sigmas: f64 },
    /// `|lhs − rhs| ≤ rel·|rhs|`.
    Relative { rel: f64 },
    /// `|lhs − rhs| ≤ tol`.
    Deterministic { tol: f64 },
    /// `lhs ≤ rhs + tol`.
    AtMost { tol: f64 },
    /// `lhs ≥ rhs − tol`.
    AtLeast { tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: EstimatorResult,
    pub rhs: EstimatorResult,
    pub kind: CheckKind,
    pub tolerance: f64,
    /// Outcome of the comparison itself.
    pub raw: Verdict,
    /// Injected-violation control: the comparison is expected to fail.
    pub control: bool,
    /// Reported verdict; for controls, PASS means the violation was caught.
    pub verdict: Verdict,
}

impl IdentityCheck {
    pub fn diff(&self) -> f64 {
        self.lhs.mean - self.rhs.mean
    }

    /// Excess over the tolerance, in tolerance units.
    pub fn severity(&self) -> f64 {
        let d = match self.kind {
            CheckKind::OneSided { .. } | CheckKind::AtMost { .. } => self.diff(),
            CheckKind::AtLeast { .. } => -self.diff(),
            _ => self.diff().abs(),
        };
        if self.tolerance > 0.0 {
            d / self.tolerance
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    pub fn censor_rate(&self) -> f64 {
        self.lhs.censor_rate.max(self.rhs.censor_rate)
    }

    pub fn n_paths(&self) -> usize {
        self.lhs.n_paths.max(self.rhs.n_paths)
    }

    pub fn dt(&self) -> f64 {
        self.lhs.dt.max(self.rhs.dt)
    }
}

/// Builder for [`IdentityCheck`].
#[derive(Debug, Clone)]
pub struct Check {
    name: String,
    lhs: EstimatorResult,
    rhs: EstimatorResult,
    kind: CheckKind,
    control: bool,
}

impl Check {
    pub fn two_sided(name: impl Into<String>, lhs: EstimatorResult, rhs: EstimatorResult) -> Self {
        Self { name: name.into(), lhs, rhs, kind: CheckKind::TwoSided { paired_se: None }, control: false }
    }

    pub fn paired(name: impl Into<String>, lhs: EstimatorResult, rhs: EstimatorResult, se: f64) -> Self {
        Self { kind: CheckKind::TwoSided { paired_se: Some(se) }, ..Self::two_sided(name, lhs, rhs) }
    }

    pub fn at_most(name: impl Into<String>, lhs: EstimatorResult, rhs: EstimatorResult) -> Self {
        Self { kind: CheckKind::OneSided { sigmas: 3.0 }, ..Self::two_sided(name, lhs, rhs) }
    }

    pub fn relative(name: impl Into<String>, lhs: EstimatorResult, rhs: EstimatorResult, rel: f64) -> Self {
        Self { kind: CheckKind::Relative { rel }, ..Self::two_sided(name, lhs, rhs) }
    }

    pub fn exact(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            kind: CheckKind::Deterministic { tol },
            ..Self::two_sided(name, EstimatorResult::exact(lhs), EstimatorResult::exact(rhs))
        }
    }

    pub fn bounded_by(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            kind: CheckKind::AtMost { tol },
            ..Self::two_sided(name, EstimatorResult::exact(lhs), EstimatorResult::exact(rhs))
        }
    }

    pub fn at_least(name: impl Into<String>, lhs: EstimatorResult, rhs: EstimatorResult, tol: f64) -> Self {
        Self { kind: CheckKind::AtLeast { tol }, ..Self::two_sided(name, lhs, rhs) }
    }

    /// Marks the check as an injected-violation control.
    pub fn control(mut self) -> Self {
        self.control = true;
        self.name.push_str("/control");
        self
    }

    pub fn evaluate(self, z: f64) -> IdentityCheck {
        let (l, r) = (&self.lhs, &self.rhs);
        let budgets = l.discretization_budget + r.discretization_budget;
        let d = l.mean - r.mean;
        let (tolerance, ok) = match self.kind {
            CheckKind::TwoSided { paired_se } => {
                let se = paired_se.unwrap_or(l.std_error + r.std_error);
                let tol = z * se + budgets;
                (tol, d.abs() <= tol)
            }
            CheckKind::OneSided { sigmas } => {
                let tol = sigmas * (l.std_error + r.std_error) + budgets;
                (tol, d <= tol)
            }
            CheckKind::Relative { rel } => {
                let tol = rel * r.mean.abs();
                (tol, d.abs() <= tol)
            }
            CheckKind::Deterministic { tol } => (tol, d.abs() <= tol),
            CheckKind::AtMost { tol } => (tol, d <= tol),
            CheckKind::AtLeast { tol } => (tol, -d <= tol),
        };
        let raw = if !d.is_finite() {
            Verdict::Fail
        } else if l.censor_rate > MAX_CENSOR_RATE || r.censor_rate > MAX_CENSOR_RATE {
            Verdict::Inconclusive
        } else if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let verdict = match (self.control, raw) {
            (false, v) => v,
            (true, Verdict::Fail) => Verdict::Pass,
            (true, Verdict::Pass) => Verdict::Fail,
            (true, v) => v,
        };
        IdentityCheck {
            name: self.name,
            lhs: self.lhs,
            rhs: self.rhs,
            kind: self.kind,
            tolerance,
            raw,
            control: self.control,
            verdict,
        }
    }
}

/// Mean and standard error of `value(stream)` over `n` substreams of `role`.
/// The closure returns the value and whether it is censored.
pub fn mc_estimate(
    exec: &dyn Executor,
    n: usize,
    master_seed: u64,
    role: u32,
    dt: f64,
    ci_level: f64,
    value: &(dyn Fn(RngStream) -> (f64, bool) + Sync),
) -> Result<EstimatorResult> {
    if n == 0 {
        return Err(Error::InvalidParameter("an estimate needs at least one path".into()));
    }
    let job = |i: usize| {
        let (v, censored) = value(RngStream::for_path(master_seed, role, i as u64));
        Sample { values: alloc::vec![v], censored }
    };
    Ok(SampleSet::collect(exec, n, &job).estimate(0, dt, 0.0, ci_level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::normal;

    #[test]
    fn constant_has_zero_error() {
        let e = mc_estimate(&Sequential, 100, 1, 0, 0.1, 0.99, &|_| (1.0, false)).unwrap();
        assert_eq!((e.mean, e.std_error), (1.0, 0.0));
        assert!(mc_estimate(&Sequential, 0, 1, 0, 0.1, 0.99, &|_| (1.0, false)).is_err());
    }

    #[test]
    fn censoring_blocks_pass() {
        let mut l = EstimatorResult::exact(1.0);
        l.censor_rate = 0.06;
        let c = Check::two_sided("x", l, EstimatorResult::exact(1.0)).evaluate(4.0);
        assert_eq!(c.verdict, Verdict::Inconclusive);
        l.censor_rate = 0.05;
        let c = Check::two_sided("x", l, EstimatorResult::exact(1.0)).evaluate(4.0);
        assert_eq!(c.verdict, Verdict::Pass);
    }

    #[test]
    fn controls_invert() {
        let c = Check::bounded_by("b", 2.0, 1.0, 0.0).control().evaluate(4.0);
        assert_eq!((c.raw, c.verdict), (Verdict::Fail, Verdict::Pass));
        let c = Check::bounded_by("b", 0.5, 1.0, 0.0).control().evaluate(4.0);
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(c.name.ends_with("/control"));
    }

    #[test]
    fn normal_mean_within_tolerance() {
        let e = mc_estimate(&Sequential, 4000, 7, 3, 0.0, 0.999, &|s| (normal(&mut s.rng()), false)).unwrap();
        assert!(e.mean.abs() < 4.0 * e.std_error);
        assert!((e.std_error * (4000f64).sqrt() - 1.0).abs() < 0.05);
    }

    #[test]
    fn worst_verdict_order() {
        use Verdict::*;
        assert_eq!(Pass.worst(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.worst(Fail), Fail);
        assert_eq!(Pass.worst(Pass), Pass);
    }
}
