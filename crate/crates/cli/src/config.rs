//! Flat `key = value` experiment configuration.
//!
//! A config file holds one assignment per line; `#` starts a comment. The
//! same keys are accepted by `--set key=value` on the command line, applied
//! after the file.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::presets::PresetKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {0:?} given twice")]
    Duplicate(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e.to_string()))
}

fn parse_finite(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_num(key, value)?;
    if !v.is_finite() {
        return Err(bad(key, value, "must be finite"));
    }
    Ok(v)
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| parse_finite(key, s.trim()))
        .collect()
}

/// `1,0;0,1` style list of vectors.
fn parse_vectors(key: &str, value: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    let out: Vec<Vec<f64>> = value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_list(key, s))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(bad(key, value, "no vectors"));
    }
    Ok(out)
}

/// Which identification objective a custom preset uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveChoice {
    BestArm,
    LevelSet,
}

/// Tunable preset parameters. `None` means "preset default".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PresetParams {
    pub d: Option<usize>,
    pub omega: Option<f64>,
    pub q: Option<f64>,
    pub alpha_sq: Option<f64>,
    pub beta_sq: Option<f64>,
    pub kappa: Option<f64>,
    pub gammas: Option<Vec<usize>>,
    pub c_prime: Option<f64>,
    pub n_unit: Option<usize>,
    pub n_small: Option<usize>,
    pub fw_tol: Option<f64>,
    pub max_rounds: Option<usize>,
    pub max_total_pulls: Option<u64>,
    pub algorithms: Option<Vec<String>>,
    pub arms: Option<Vec<Vec<f64>>>,
    pub targets: Option<Vec<Vec<f64>>>,
    pub theta: Option<Vec<f64>>,
    pub sigma_diag: Option<Vec<f64>>,
    pub objective: Option<ObjectiveChoice>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: PresetKind,
    pub replications: usize,
    pub base_seed: u64,
    pub delta: f64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub output: Option<PathBuf>,
    pub params: PresetParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: PresetKind::Example1,
            replications: 32,
            base_seed: 0,
            delta: 0.05,
            jobs: 0,
            output: None,
            params: PresetParams::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "preset", "reps", "seed", "delta", "jobs", "out", "d", "omega", "q", "alpha_sq", "beta_sq", "kappa",
    "gammas", "c_prime", "n_unit", "n_small", "fw_tol", "max_rounds", "max_total_pulls", "algorithms",
    "arms", "targets", "theta", "sigma_diag", "objective", "alpha",
];

impl ExperimentConfig {
    /// Applies one assignment, validating the value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let p = &mut self.params;
        match key {
            "preset" => self.preset = v.parse()?,
            "reps" => {
                let n: usize = parse_num(key, v)?;
                if n == 0 {
                    return Err(bad(key, v, "need at least one replication"));
                }
                self.replications = n;
            }
            "seed" => self.base_seed = parse_num(key, v)?,
            "delta" => {
                let x = parse_finite(key, v)?;
                if !(x > 0.0 && x < 1.0) {
                    return Err(bad(key, v, "must lie in (0, 1)"));
                }
                self.delta = x;
            }
            "jobs" => self.jobs = parse_num(key, v)?,
            "out" => {
                if v.is_empty() {
                    return Err(bad(key, v, "empty path"));
                }
                self.output = Some(PathBuf::from(v));
            }
            "d" => {
                let d: usize = parse_num(key, v)?;
                if !(1..=50).contains(&d) {
                    return Err(bad(key, v, "must lie in 1..=50"));
                }
                p.d = Some(d);
            }
            "omega" => {
                let x = parse_finite(key, v)?;
                if !(x > 0.0 && x < std::f64::consts::FRAC_PI_2) {
                    return Err(bad(key, v, "must lie in (0, pi/2)"));
                }
                p.omega = Some(x);
            }
            "q" => {
                let x = parse_finite(key, v)?;
                if !(x > 0.0 && x < 1.0) {
                    return Err(bad(key, v, "must lie in (0, 1)"));
                }
                p.q = Some(x);
            }
            "alpha_sq" | "beta_sq" | "c_prime" | "fw_tol" => {
                let x = parse_finite(key, v)?;
                if !(x > 0.0) {
                    return Err(bad(key, v, "must be positive"));
                }
                match key {
                    "alpha_sq" => p.alpha_sq = Some(x),
                    "beta_sq" => p.beta_sq = Some(x),
                    "c_prime" => p.c_prime = Some(x),
                    _ => {
                        if x >= 1.0 {
                            return Err(bad(key, v, "must be below 1"));
                        }
                        p.fw_tol = Some(x)
                    }
                }
            }
            "kappa" => {
                let x = parse_finite(key, v)?;
                if !(x >= 1.0) {
                    return Err(bad(key, v, "must be at least 1"));
                }
                p.kappa = Some(x);
            }
            "gammas" => {
                let g: Vec<usize> = v
                    .split(',')
                    .map(|s| parse_num::<usize>(key, s.trim()))
                    .collect::<Result<_, _>>()?;
                if g.is_empty() || g.iter().any(|&x| x == 0) {
                    return Err(bad(key, v, "budgets must be positive"));
                }
                p.gammas = Some(g);
            }
            "n_unit" | "n_small" => {
                let n: usize = parse_num(key, v)?;
                if n > 100_000 {
                    return Err(bad(key, v, "at most 100000 arms"));
                }
                if key == "n_unit" {
                    p.n_unit = Some(n)
                } else {
                    p.n_small = Some(n)
                }
            }
            "max_rounds" => {
                let n: usize = parse_num(key, v)?;
                if n == 0 || n > 60 {
                    return Err(bad(key, v, "must lie in 1..=60"));
                }
                p.max_rounds = Some(n);
            }
            "max_total_pulls" => p.max_total_pulls = Some(parse_num(key, v)?),
            "algorithms" => {
                let names: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
                if names.iter().any(|n| n.is_empty()) {
                    return Err(bad(key, v, "empty algorithm name"));
                }
                p.algorithms = Some(names);
            }
            "arms" => p.arms = Some(parse_vectors(key, v)?),
            "targets" => p.targets = Some(parse_vectors(key, v)?),
            "theta" => p.theta = Some(parse_list(key, v)?),
            "sigma_diag" => {
                let s = parse_list(key, v)?;
                if s.iter().any(|x| *x < 0.0) {
                    return Err(bad(key, v, "variances must be nonnegative"));
                }
                p.sigma_diag = Some(s);
            }
            "objective" => {
                p.objective = Some(match v.to_ascii_lowercase().as_str() {
                    "bai" => ObjectiveChoice::BestArm,
                    "ls" => ObjectiveChoice::LevelSet,
                    _ => return Err(bad(key, v, "expected bai or ls")),
                })
            }
            "alpha" => p.alpha = Some(parse_finite(key, v)?),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses a whole config file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen = BTreeSet::new();
        for (key, value) in parse_assignments(text)? {
            if !seen.insert(key.clone()) {
                return Err(ConfigError::Duplicate(key));
            }
            self.set(&key, &value)?;
        }
        Ok(())
    }
}

/// Splits config text into `(key, value)` pairs without interpreting them.
pub fn parse_assignments(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_override(line).map_err(|_| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        out.push((k, v));
    }
    Ok(out)
}

/// Parses one `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    let Some((k, v)) = s.split_once('=') else {
        return Err(ConfigError::Syntax {
            line: 0,
            text: s.to_string(),
        });
    };
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(ConfigError::Syntax {
            line: 0,
            text: s.to_string(),
        });
    }
    Ok((k.to_string(), v.trim().to_string()))
}
