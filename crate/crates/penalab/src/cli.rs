//! Command-line front end.

use crate::config::{ConfigError, Overrides, RunConfig, SEED_ENV};
use crate::exec::Pool;
use crate::output::{self, ExperimentSummary, Row, StoredSummary, Summary};
use clap::{Parser, Subcommand, ValueEnum};
use penalab_core::experiments::{run_experiment, ExperimentReport, Verdict, EXPERIMENTS};
use penalab_core::path::TimeGrid;
use penalab_core::rng::RngStream;
use penalab_core::samplers::{sample_bessel3, sample_bm, sample_bridge, sample_wv, sample_wx, WProposal};
use penalab_core::sturm_liouville::solve_phi;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Exit code for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "penalab", version, about = "Simulate the Brownian sigma-finite measure W and verify its identities")]
struct Cli {
    /// key=value config file; every key is required
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Paths per estimator
    #[arg(long = "n", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Directory that receives run directories
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means one per core
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Print φ_V and C_V for a killing measure such as `a:0:1+box:-1:1:0.5`
    Phi {
        spec: String,
        #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Write sample paths to a fresh run directory
    Sample {
        #[arg(value_enum)]
        kind: SampleKind,
        #[arg(long, default_value_t = 10)]
        paths: usize,
        /// Path length; bridges use it as their length
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Starting point
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x0: f64,
        /// Killing measure, required for `wv`
        #[arg(long)]
        v: Option<String>,
    },
    /// Run one experiment
    Verify { name: String },
    /// Run every experiment
    VerifyAll,
    /// Tabulate summaries from run directories (or directories of runs)
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SampleKind {
    Bm,
    Bridge,
    Bessel3,
    /// Weighted draws of W_x with the Gamma proposal
    W,
    /// The penalised process, started at x0
    Wv,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] penalab_core::Error),
    #[error(transparent)]
    VSpec(#[from] crate::vspec::VSpecError),
    #[error("unknown experiment `{0}`; known: {known}", known = EXPERIMENTS.join(", "))]
    UnknownExperiment(String),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad summary {path}: {msg}")]
    Summary { path: PathBuf, msg: String },
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Io(_) => 4,
            _ => EXIT_CONFIG,
        }
    }
}

/// Runs the program; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let overrides = Overrides { dt: cli.dt, n_paths: cli.n, seed: cli.seed, theta: cli.theta, out: cli.out.clone() };
    let env_seed = std::env::var(SEED_ENV).ok();
    let resolve = || RunConfig::resolve(cli.config.as_deref(), env_seed.as_deref(), &overrides);
    match &cli.cmd {
        Cmd::Phi { spec, from, to, step } => phi(&resolve()?, spec, *from, *to, *step),
        Cmd::Sample { kind, paths, horizon, x0, v } => sample(&resolve()?, *kind, *paths, *horizon, *x0, v.as_deref()),
        Cmd::Verify { name } => {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(CliError::UnknownExperiment(name.clone()));
            }
            verify(&resolve()?, &[name.as_str()], cli.workers)
        }
        Cmd::VerifyAll => verify(&resolve()?, EXPERIMENTS, cli.workers),
        Cmd::Report { dirs } => report(dirs),
    }
}

fn phi(cfg: &RunConfig, spec: &str, from: f64, to: f64, step: f64) -> Result<i32, CliError> {
    if !(step > 0.0 && to >= from && from.is_finite() && to.is_finite()) {
        return Err(CliError::Usage("need finite --from <= --to and --step > 0".into()));
    }
    let v = crate::vspec::parse(spec)?;
    let sol = solve_phi(&v, cfg.l, cfg.dx)?;
    let mut s = format!("# C_V = {}\n# argmin = {}\nx,phi,dphi\n", output::fmt_g(sol.c_v()), output::fmt_g(sol.argmin()));
    let n = ((to - from) / step + 1e-9).floor() as usize;
    for i in 0..=n {
        let x = from + i as f64 * step;
        let _ = writeln!(s, "{},{},{}", output::fmt_g(x), output::fmt_g(sol.phi(x)), output::fmt_g(sol.dphi(x)));
    }
    print!("{s}");
    Ok(0)
}

fn config_text(cfg: &RunConfig) -> String {
    let g = output::fmt_g;
    format!(
        "dt={}\nt_max={}\nn_paths={}\nmaster_seed={}\ntheta={}\neps_localtime={}\nL={}\ndx={}\nci_level={}\nout={}\n",
        g(cfg.dt),
        g(cfg.t_max),
        cfg.n_paths,
        cfg.master_seed,
        g(cfg.theta),
        g(cfg.eps_localtime),
        g(cfg.l),
        g(cfg.dx),
        cfg.ci_level,
        cfg.out.display()
    )
}

fn sample(cfg: &RunConfig, kind: SampleKind, paths: usize, horizon: f64, x0: f64, v: Option<&str>) -> Result<i32, CliError> {
    if paths == 0 {
        return Err(CliError::Usage("--paths must be positive".into()));
    }
    let grid = TimeGrid::new(horizon, cfg.dt)?;
    let phi = match (kind, v) {
        (SampleKind::Wv, Some(v)) => Some(solve_phi(&crate::vspec::parse(v)?, cfg.l, cfg.dx)?),
        (SampleKind::Wv, None) => return Err(CliError::Usage("`sample wv` needs --v".into())),
        _ => None,
    };
    let w_grid = TimeGrid::new(cfg.t_max, cfg.dt)?;
    let proposal = WProposal::gamma(cfg.theta)?;
    let mut body = String::from("path,t,value\n");
    let mut draws = String::from("path,u,weight,sign\n");
    for p in 0..paths {
        let stream = RngStream::new(cfg.master_seed, p as u64);
        let path = match kind {
            SampleKind::Bm => sample_bm(x0, &grid, stream),
            SampleKind::Bridge => sample_bridge(horizon, cfg.dt, stream)?.offset(x0),
            SampleKind::Bessel3 => sample_bessel3(x0, &grid, stream)?,
            SampleKind::Wv => sample_wv(x0, phi.as_ref().unwrap(), &grid, stream)?,
            SampleKind::W => {
                let w = sample_wx(x0, &proposal, &w_grid, stream)?;
                let g = output::fmt_g;
                let _ = writeln!(draws, "{p},{},{},{}", g(w.u), g(w.weight), g(w.sign));
                w.path
            }
        };
        for (i, x) in path.values.iter().enumerate() {
            let _ = writeln!(body, "{p},{},{}", output::fmt_g(path.time(i)), output::fmt_g(*x));
        }
    }
    let dir = output::fresh_run_dir(&cfg.out, cfg.master_seed)?;
    std::fs::write(dir.join("config.txt"), config_text(cfg))?;
    std::fs::write(dir.join("paths.csv"), body)?;
    if let SampleKind::W = kind {
        std::fs::write(dir.join("draws.csv"), draws)?;
    }
    println!("{}", dir.display());
    Ok(0)
}

fn verify(cfg: &RunConfig, names: &[&str], workers: usize) -> Result<i32, CliError> {
    let pool = Pool::new(workers)?;
    let settings = cfg.settings();
    let mut reports: Vec<ExperimentReport> = Vec::with_capacity(names.len());
    for name in names {
        let t = std::time::Instant::now();
        let r = run_experiment(name, &settings, &pool)?;
        eprintln!("{:<16} {:<12} {:.1}s", name, r.verdict().as_str(), t.elapsed().as_secs_f64());
        reports.push(r);
    }
    let experiments = output::summarize(&reports, cfg.master_seed);
    let verdict = output::overall(&reports);
    // all sampling is done; only now touch the file system
    let dir = output::fresh_run_dir(&cfg.out, cfg.master_seed)?;
    write_run(&dir, cfg, pool.workers(), verdict, &experiments)?;
    print!("{}", table(&experiments));
    println!("{} -> {}", verdict.as_str(), dir.display());
    Ok(output::exit_code(verdict))
}

fn write_run(dir: &Path, cfg: &RunConfig, workers: usize, verdict: Verdict, exps: &[ExperimentSummary]) -> Result<(), CliError> {
    let results: Vec<Row> = exps.iter().map(|e| e.result.clone()).collect();
    let details: Vec<Row> = exps.iter().flat_map(|e| e.checks.iter().cloned()).collect();
    std::fs::write(dir.join("results.csv"), output::csv(&results))?;
    std::fs::write(dir.join("details.csv"), output::csv(&details))?;
    std::fs::write(dir.join("config.txt"), config_text(cfg))?;
    let summary = Summary { config: cfg, workers, verdict: verdict.as_str(), experiments: exps.to_vec() };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}

fn table(exps: &[ExperimentSummary]) -> String {
    let mut s = String::new();
    for e in exps {
        for c in &e.checks {
            let _ = writeln!(
                s,
                "{:<12} {:<64} lhs={:<14.6e} rhs={:<14.6e} tol={:.3e}",
                c.verdict, c.experiment, c.lhs_mean, c.rhs_mean, c.tolerance
            );
        }
    }
    s
}

fn summaries_in(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let own = dir.join("summary.json");
    if own.is_file() {
        return Ok(vec![own]);
    }
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("summary.json"))
        .filter(|p| p.is_file())
        .collect();
    found.sort();
    Ok(found)
}

fn report(dirs: &[PathBuf]) -> Result<i32, CliError> {
    let mut files = Vec::new();
    for d in dirs {
        files.extend(summaries_in(d)?);
    }
    if files.is_empty() {
        return Err(CliError::Usage("no summary.json found".into()));
    }
    let mut s = format!("run,{}\n", output::CSV_HEADER);
    let mut worst = Verdict::Pass;
    for f in &files {
        let text = std::fs::read_to_string(f)?;
        let sum: StoredSummary =
            serde_json::from_str(&text).map_err(|e| CliError::Summary { path: f.clone(), msg: e.to_string() })?;
        let v = output::verdict_from_str(&sum.verdict)
            .ok_or_else(|| CliError::Summary { path: f.clone(), msg: format!("verdict `{}`", sum.verdict) })?;
        worst = worst.worst(v);
        let run = f.parent().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        for e in &sum.experiments {
            let _ = writeln!(s, "{run},{}", e.result.csv_line());
        }
    }
    print!("{s}");
    Ok(output::exit_code(worst))
}
