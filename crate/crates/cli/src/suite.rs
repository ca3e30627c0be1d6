//! Replication fan-out and per-run records.

use std::time::Instant;

use hetbandit_core::env::replication_seed;
use hetbandit_core::ident::{hrage_run, oracle_run, rage_run, RunConfig, RunTrace, SigmaSource};
use hetbandit_core::varest::{head_estimate, separate_arm_estimate, uniform_estimate};
use hetbandit_core::{mae, Environment, NoiseMode};
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig};
use crate::presets::{build_preset, Built, IdentPreset, VarEstPreset};

/// Burn-in constant used by the CLI unless `c_prime` is set.
pub const CLI_C_PRIME: f64 = 1.0;

pub const IDENT_ALGORITHMS: [&str; 4] = ["hrage", "rage", "oracle-het", "oracle-hom"];
pub const VAREST_ALGORITHMS: [&str; 3] = ["head", "uniform", "separate"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub preset: String,
    pub algorithm: String,
    pub seed: u64,
    pub metric_name: String,
    pub metric_value: Option<f64>,
    pub correct: Option<bool>,
    pub rounds: Option<usize>,
    pub burn_in: Option<usize>,
    pub wall_ms: f64,
    /// `ok`, `non_terminated`, or `error: <message>`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub rows: Vec<Row>,
}

fn algorithms(cfg: &ExperimentConfig, defaults: &[&str]) -> Result<Vec<String>, ConfigError> {
    match &cfg.params.algorithms {
        None => Ok(defaults.iter().map(|s| s.to_string()).collect()),
        Some(list) => {
            for a in list {
                if !defaults.contains(&a.as_str()) {
                    return Err(ConfigError::Invalid(format!(
                        "algorithm {a:?} not available here (choose from {})",
                        defaults.join(", ")
                    )));
                }
            }
            Ok(list.clone())
        }
    }
}

pub fn run_config(cfg: &ExperimentConfig) -> RunConfig {
    let p = &cfg.params;
    let mut rc = RunConfig {
        c_prime: p.c_prime.unwrap_or(CLI_C_PRIME),
        ..RunConfig::default()
    };
    if let Some(t) = p.fw_tol {
        rc.fw_tol = t;
    }
    if let Some(m) = p.max_rounds {
        rc.max_rounds = m;
    }
    if let Some(m) = p.max_total_pulls {
        rc.max_total_pulls = m;
    }
    rc
}

fn ident_row(preset: &str, algorithm: &str, seed: u64, result: hetbandit_core::Result<RunTrace>, wall_ms: f64) -> Row {
    let mut row = Row {
        preset: preset.to_string(),
        algorithm: algorithm.to_string(),
        seed,
        metric_name: "total_pulls".into(),
        metric_value: None,
        correct: None,
        rounds: None,
        burn_in: None,
        wall_ms,
        status: "ok".into(),
    };
    match result {
        Ok(t) => {
            row.metric_value = Some(t.total_pulls as f64);
            row.correct = Some(t.correct);
            row.rounds = Some(t.num_rounds());
            row.burn_in = Some(t.burn_in_pulls);
            if t.non_terminated {
                row.status = "non_terminated".into();
            }
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

fn ident_replication(name: &str, p: &IdentPreset, algs: &[String], rc: &RunConfig, seed: u64) -> Vec<Row> {
    let inst = p.task.instance();
    algs.iter()
        .map(|alg| {
            let mut env = Environment::new(inst, seed, NoiseMode::Gaussian);
            let start = Instant::now();
            let result = match alg.as_str() {
                "hrage" => hrage_run(&p.task, &mut env, rc),
                "rage" => rage_run(&p.task, &mut env, rc),
                "oracle-het" => oracle_run(&p.task, &mut env, SigmaSource::TrueVariances),
                _ => oracle_run(&p.task, &mut env, SigmaSource::MaxVariance),
            };
            ident_row(name, alg, seed, result, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect()
}

fn varest_replication(name: &str, p: &VarEstPreset, algs: &[String], seed: u64) -> Vec<Row> {
    let inst = match p.instance(seed) {
        Ok(i) => i,
        Err(e) => {
            return vec![Row {
                preset: name.into(),
                algorithm: "instance".into(),
                seed,
                metric_name: "mae".into(),
                metric_value: None,
                correct: None,
                rounds: None,
                burn_in: None,
                wall_ms: 0.0,
                status: format!("error: {e}"),
            }]
        }
    };
    let mut rows = Vec::new();
    for alg in algs {
        for &gamma in &p.gammas {
            let mut env = Environment::new(&inst, seed, NoiseMode::Gaussian);
            let start = Instant::now();
            let est = match alg.as_str() {
                "head" => head_estimate(&inst, &mut env, gamma),
                "uniform" => uniform_estimate(&inst, &mut env, gamma, seed),
                _ => separate_arm_estimate(&inst, &mut env, gamma),
            };
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let (metric_value, status) = match est {
                Ok(e) => (Some(mae(&e, &inst)), "ok".to_string()),
                Err(e) => (None, format!("error: {e}")),
            };
            rows.push(Row {
                preset: name.into(),
                algorithm: alg.clone(),
                seed,
                metric_name: format!("mae@{gamma}"),
                metric_value,
                correct: None,
                rounds: None,
                burn_in: None,
                wall_ms,
                status,
            });
        }
    }
    rows
}

/// Runs every configured algorithm on every replication. Rows come back in
/// replication order whatever order the workers finish in. Failed runs are
/// recorded as rows, never propagated.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteResult, ConfigError> {
    let built = build_preset(cfg)?;
    let name = cfg.preset.name();
    let seeds: Vec<u64> = (0..cfg.replications as u64)
        .map(|r| replication_seed(cfg.base_seed, r))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("worker pool: {e}")))?;
    let per_seed: Vec<Vec<Row>> = match &built {
        Built::Ident(p) => {
            let algs = algorithms(cfg, &IDENT_ALGORITHMS)?;
            let rc = run_config(cfg);
            pool.install(|| {
                seeds
                    .par_iter()
                    .map(|&s| ident_replication(name, p, &algs, &rc, s))
                    .collect()
            })
        }
        Built::VarEst(p) => {
            let algs = algorithms(cfg, &VAREST_ALGORITHMS)?;
            pool.install(|| seeds.par_iter().map(|&s| varest_replication(name, p, &algs, s)).collect())
        }
    };
    Ok(SuiteResult {
        rows: per_seed.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub algorithm: String,
    pub metric_name: String,
    /// Rows with status `ok` and a metric value.
    pub n: usize,
    pub failed: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero when `n < 2`.
    pub sem: f64,
    pub correct: Option<usize>,
}

/// Mean and standard error per (algorithm, metric) in first-seen order.
pub fn summarize(rows: &[Row]) -> Vec<SummaryLine> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let k = (r.algorithm.clone(), r.metric_name.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(algorithm, metric_name)| {
            let group: Vec<&Row> = rows
                .iter()
                .filter(|r| r.algorithm == algorithm && r.metric_name == metric_name)
                .collect();
            let vals: Vec<f64> = group
                .iter()
                .filter(|r| r.status == "ok")
                .filter_map(|r| r.metric_value)
                .collect();
            let n = vals.len();
            let mean = if n > 0 { vals.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let sem = if n > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            let has_correct = group.iter().any(|r| r.correct.is_some());
            SummaryLine {
                failed: group.len() - n,
                correct: has_correct.then(|| group.iter().filter(|r| r.correct == Some(true)).count()),
                algorithm,
                metric_name,
                n,
                mean,
                sem,
            }
        })
        .collect()
}
