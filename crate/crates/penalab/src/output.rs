//! Result files: CSV rows, the JSON summary and fresh run directories.

use crate::config::RunConfig;
use penalab_core::experiments::{ExperimentReport, IdentityCheck, Verdict};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str =
    "experiment,lhs_mean,lhs_se,rhs_mean,rhs_se,tolerance,censor_rate,n_paths,dt,seed,verdict";

/// C's `%.12g`.
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // exponent after rounding to P significant digits
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= P {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_mean: f64,
    pub rhs_se: f64,
    pub tolerance: f64,
    pub censor_rate: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub verdict: String,
}

impl Row {
    pub fn new(experiment: &str, c: &IdentityCheck, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            lhs_mean: c.lhs.mean,
            lhs_se: c.lhs.std_error,
            rhs_mean: c.rhs.mean,
            rhs_se: c.rhs.std_error,
            tolerance: c.tolerance,
            censor_rate: c.censor_rate(),
            n_paths: c.n_paths(),
            dt: c.dt(),
            seed,
            verdict: c.verdict.as_str().into(),
        }
    }

    pub fn csv_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&self.experiment),
            fmt_g(self.lhs_mean),
            fmt_g(self.lhs_se),
            fmt_g(self.rhs_mean),
            fmt_g(self.rhs_se),
            fmt_g(self.tolerance),
            fmt_g(self.censor_rate),
            self.n_paths,
            fmt_g(self.dt),
            self.seed,
            self.verdict
        );
        s
    }
}

/// Quotes a field holding a comma, quote or line break.
fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

pub fn csv(rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub verdict: String,
    /// The check closest to its tolerance, as in `results.csv`.
    pub result: Row,
    pub checks: Vec<Row>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub config: &'a RunConfig,
    pub workers: usize,
    pub verdict: &'static str,
    pub experiments: Vec<ExperimentSummary>,
}

/// The subset of a summary that `report` reads back.
#[derive(Debug, Clone, Deserialize)]
pub struct StoredSummary {
    pub verdict: String,
    pub experiments: Vec<ExperimentSummary>,
}

pub fn summarize(reports: &[ExperimentReport], seed: u64) -> Vec<ExperimentSummary> {
    reports
        .iter()
        .map(|r| {
            let checks: Vec<Row> = r.checks.iter().map(|c| Row::new(&c.name, c, seed)).collect();
            let result = match r.representative() {
                Some(c) => Row::new(&r.name, c, seed),
                None => Row::new(&r.name, &empty_check(), seed),
            };
            ExperimentSummary { experiment: r.name.clone(), verdict: r.verdict().as_str().into(), result, checks }
        })
        .collect()
}

fn empty_check() -> IdentityCheck {
    use penalab_core::experiments::{Check, EstimatorResult};
    Check::two_sided("", EstimatorResult::exact(0.0), EstimatorResult::exact(0.0)).evaluate(4.0)
}

pub fn overall(reports: &[ExperimentReport]) -> Verdict {
    reports.iter().map(|r| r.verdict()).fold(Verdict::Pass, Verdict::worst)
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
    }
}

pub fn verdict_from_str(s: &str) -> Option<Verdict> {
    match s {
        "PASS" => Some(Verdict::Pass),
        "FAIL" => Some(Verdict::Fail),
        "INCONCLUSIVE" => Some(Verdict::Inconclusive),
        _ => None,
    }
}

/// Creates `<out>/<UTC timestamp>-seed<seed>`, with a numeric suffix if a
/// run already took that name.
pub fn fresh_run_dir(out: &Path, seed: u64) -> io::Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{stamp}-seed{seed}");
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = out.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_g() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0f64.sqrt() * 1e6, "1414213.56237"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (-0.00012345, "-0.00012345"),
            (0.0, "0"),
            (1e100, "1e+100"),
            (999999999999.5, "1e+12"),
            (100.0, "100"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
        assert_eq!(fmt_g(f64::NAN), "nan");
        assert_eq!(fmt_g(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_layout() {
        let r = Row {
            experiment: "x".into(),
            lhs_mean: 0.5,
            lhs_se: 0.01,
            rhs_mean: 0.5,
            rhs_se: 0.0,
            tolerance: 0.04,
            censor_rate: 0.0,
            n_paths: 10,
            dt: 0.001,
            seed: 7,
            verdict: "PASS".into(),
        };
        assert_eq!(csv(&[r]), format!("{CSV_HEADER}\nx,0.5,0.01,0.5,0,0.04,0,10,0.001,7,PASS\n"));
    }

    proptest::proptest! {
        #[test]
        fn percent_g_round_trips(m in -1.0f64..1.0, e in -300i32..300) {
            let x = m * 10f64.powi(e);
            let back: f64 = fmt_g(x).parse().unwrap();
            proptest::prop_assert!((back - x).abs() <= 5e-12 * x.abs());
        }
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("a/b=1"), "a/b=1");
        assert_eq!(csv_field("bin=(0,1]"), "\"bin=(0,1]\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    }

    #[test]
    fn run_dirs_are_fresh() {
        let tmp = tempfile::tempdir().unwrap();
        let a = fresh_run_dir(tmp.path(), 3).unwrap();
        let b = fresh_run_dir(tmp.path(), 3).unwrap();
        assert_ne!(a, b);
        assert!(a.file_name().unwrap().to_str().unwrap().contains("-seed3"));
    }
}
