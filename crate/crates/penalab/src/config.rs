//! Run configuration: a flat `key=value` file, the `PENALAB_SEED`
//! environment variable and command-line flags, in increasing precedence.

use penalab_core::experiments::Settings;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SEED_ENV: &str = "PENALAB_SEED";

pub const KEYS: &[&str] = &[
    "dt",
    "t_max",
    "n_paths",
    "master_seed",
    "theta",
    "eps_localtime",
    "L",
    "dx",
    "ci_level",
    "out",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing config key `{0}`")]
    MissingKey(&'static str),
    #[error("bad value for `{key}`: `{value}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] penalab_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    pub theta: f64,
    pub eps_localtime: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub dx: f64,
    pub ci_level: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = Settings::default();
        Self {
            dt: s.dt,
            t_max: s.t_max,
            n_paths: s.n_paths,
            master_seed: s.master_seed,
            theta: s.theta,
            eps_localtime: s.eps_localtime,
            l: s.sl_half_width,
            dx: s.sl_dx,
            ci_level: s.ci_level,
            out: PathBuf::from("runs"),
        }
    }
}

/// Values that replace whatever the file or environment gave.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub theta: Option<f64>,
    pub out: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: value.into() })
}

impl RunConfig {
    /// Parses a config file body. Every key is required.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey { line, key: k.into() });
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::DuplicateKey { line, key: k.into() });
            }
        }
        let get = |k: &'static str| map.get(k).map(String::as_str).ok_or(ConfigError::MissingKey(k));
        Ok(Self {
            dt: parse_value("dt", get("dt")?)?,
            t_max: parse_value("t_max", get("t_max")?)?,
            n_paths: parse_value("n_paths", get("n_paths")?)?,
            master_seed: parse_value("master_seed", get("master_seed")?)?,
            theta: parse_value("theta", get("theta")?)?,
            eps_localtime: parse_value("eps_localtime", get("eps_localtime")?)?,
            l: parse_value("L", get("L")?)?,
            dx: parse_value("dx", get("dx")?)?,
            ci_level: parse_value("ci_level", get("ci_level")?)?,
            out: PathBuf::from(get("out")?),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// File (or built-in defaults), then `env_seed`, then flags. Without a
    /// file the local-time band follows `√dt`.
    pub fn resolve(file: Option<&Path>, env_seed: Option<&str>, o: &Overrides) -> Result<Self, ConfigError> {
        let mut c = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = env_seed {
            c.master_seed = parse_value(SEED_ENV, s.trim())?;
        }
        if let Some(dt) = o.dt {
            c.dt = dt;
        }
        if file.is_none() {
            c.eps_localtime = c.dt.sqrt();
        }
        if let Some(n) = o.n_paths {
            c.n_paths = n;
        }
        if let Some(s) = o.seed {
            c.master_seed = s;
        }
        if let Some(t) = o.theta {
            c.theta = t;
        }
        if let Some(out) = &o.out {
            c.out = out.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn settings(&self) -> Settings {
        Settings {
            dt: self.dt,
            t_max: self.t_max,
            n_paths: self.n_paths,
            master_seed: self.master_seed,
            theta: self.theta,
            eps_localtime: self.eps_localtime,
            sl_half_width: self.l,
            sl_dx: self.dx,
            ci_level: self.ci_level,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.out.as_os_str().is_empty() {
            return Err(ConfigError::BadValue { key: "out".into(), value: String::new() });
        }
        self.settings().validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "# desk\ndt = 0.01\nt_max=40\nn_paths=1000 # small\nmaster_seed=3\ntheta=1\n\
                        eps_localtime=0.1\nL=50\ndx=0.001\nci_level=0.99\nout=runs\n";

    #[test]
    fn parses_full_file() {
        let c = RunConfig::parse(FULL).unwrap();
        assert_eq!(c.dt, 0.01);
        assert_eq!(c.n_paths, 1000);
        assert_eq!(c.master_seed, 3);
        assert_eq!(c.l, 50.0);
        assert_eq!(c.out, PathBuf::from("runs"));
        c.validate().unwrap();
    }

    #[test]
    fn missing_key() {
        let text = FULL.replace("dt = 0.01\n", "");
        assert!(matches!(RunConfig::parse(&text), Err(ConfigError::MissingKey("dt"))));
    }

    #[test]
    fn unknown_duplicate_and_syntax() {
        assert!(matches!(RunConfig::parse(&format!("{FULL}foo=1\n")), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(RunConfig::parse(&format!("{FULL}dt=1\n")), Err(ConfigError::DuplicateKey { .. })));
        assert!(matches!(RunConfig::parse(&format!("{FULL}dt\n")), Err(ConfigError::Syntax { line: 12 })));
        let bad = FULL.replace("n_paths=1000", "n_paths=-4");
        assert!(matches!(RunConfig::parse(&bad), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn precedence() {
        let o = Overrides { seed: Some(9), ..Default::default() };
        let c = RunConfig::resolve(None, Some("5"), &o).unwrap();
        assert_eq!(c.master_seed, 9);
        let c = RunConfig::resolve(None, Some("5"), &Overrides::default()).unwrap();
        assert_eq!(c.master_seed, 5);
        assert!(RunConfig::resolve(None, Some("x"), &Overrides::default()).is_err());
    }

    #[test]
    fn defaults_track_dt() {
        let o = Overrides { dt: Some(0.01), ..Default::default() };
        let c = RunConfig::resolve(None, None, &o).unwrap();
        assert!((c.eps_localtime - 0.1).abs() < 1e-15);
        assert_eq!(RunConfig::default().settings(), Settings::default());
    }

    #[test]
    fn rejects_invalid_values() {
        let o = Overrides { dt: Some(-1.0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(None, None, &o), Err(ConfigError::Invalid(_))));
        let o = Overrides { n_paths: Some(0), ..Default::default() };
        assert!(RunConfig::resolve(None, None, &o).is_err());
    }
}
