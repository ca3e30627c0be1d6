//! Round-based gap elimination with (H-RAGE) and without (RAGE) a
//! variance-estimation burn-in.

use super::{argmax, pair_differences, Answer, IdentTask, Objective, RoundRecord, RunTrace};
use crate::design::{round_weights, solve_design, DesignProblem, DEFAULT_TOLERANCE};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::lift::lifted_dim;
use crate::regress::fit_tallies;
use crate::varest::{head_budget_for_half, head_estimate, DEFAULT_C_PRIME};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Burn-in constant passed to the HEAD budget formula.
    pub c_prime: f64,
    pub fw_tol: f64,
    pub max_rounds: usize,
    /// Stop (flagged non-terminated) before a round that would push the
    /// total past this many pulls.
    pub max_total_pulls: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            c_prime: DEFAULT_C_PRIME,
            fw_tol: DEFAULT_TOLERANCE,
            max_rounds: 40,
            max_total_pulls: 10_000_000_000,
        }
    }
}

fn log_term(round: usize, n_targets: usize, delta: f64) -> f64 {
    let l = round as f64;
    (8.0 * l * l * n_targets as f64 / delta).ln()
}

/// `3 eps^-2 q log(8 l^2 |Z| / delta)`.
pub fn hrage_tau(epsilon: f64, q: f64, round: usize, n_targets: usize, delta: f64) -> f64 {
    3.0 * q * log_term(round, n_targets, delta) / (epsilon * epsilon)
}

/// `2 eps^-2 sigma_max^2 q log(8 l^2 |Z| / delta)`.
pub fn rage_tau(epsilon: f64, q: f64, sigma_max_sq: f64, round: usize, n_targets: usize, delta: f64) -> f64 {
    2.0 * sigma_max_sq * q * log_term(round, n_targets, delta) / (epsilon * epsilon)
}

fn check_env(task: &IdentTask, env: &Environment) -> Result<()> {
    let n = task.instance().arms().len();
    if env.num_arms() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: env.num_arms(),
            context: "environment arms vs instance arms",
        });
    }
    Ok(())
}

/// H-RAGE: HEAD burn-in sized by [`head_budget_for_half`], then elimination
/// rounds with weighted designs and WLS.
pub fn hrage_run(task: &IdentTask, env: &mut Environment, cfg: &RunConfig) -> Result<RunTrace> {
    check_env(task, env)?;
    let inst = task.instance();
    if resolved_without_sampling(task) {
        return Ok(trivial_trace(task));
    }
    let floor = 2 * (lifted_dim(inst.dimension()) + 1);
    let gamma = head_budget_for_half(inst, task.delta(), cfg.c_prime).max(floor);
    let est = head_estimate(inst, env, gamma)?;
    log::debug!("burn-in used {} pulls", est.budget_used);
    eliminate(task, env, cfg, Some(&est.per_arm), est.budget_used)
}

/// RAGE: unweighted designs sized for the worst-case variance, OLS.
pub fn rage_run(task: &IdentTask, env: &mut Environment, cfg: &RunConfig) -> Result<RunTrace> {
    check_env(task, env)?;
    if resolved_without_sampling(task) {
        return Ok(trivial_trace(task));
    }
    eliminate(task, env, cfg, None, 0)
}

fn resolved_without_sampling(task: &IdentTask) -> bool {
    task.objective() == Objective::BestArm && task.instance().targets().len() <= 1
}

fn trivial_trace(task: &IdentTask) -> RunTrace {
    let answer = Answer::Best(0);
    RunTrace {
        rounds: Vec::new(),
        burn_in_pulls: 0,
        total_pulls: 0,
        correct: task.is_correct(&answer),
        answer,
        non_terminated: false,
    }
}

fn eliminate(
    task: &IdentTask,
    env: &mut Environment,
    cfg: &RunConfig,
    variances: Option<&[f64]>,
    burn_in: usize,
) -> Result<RunTrace> {
    let inst = task.instance();
    let arms = inst.arms();
    let targets = inst.targets();
    let n_targets = targets.len();
    let weights: Vec<f64> = match variances {
        Some(v) => v.to_vec(),
        None => vec![1.0; arms.len()],
    };

    let mut active: Vec<usize> = (0..n_targets).collect();
    let mut good: Vec<usize> = Vec::new();
    let mut last_scores: Vec<f64> = vec![0.0; n_targets];
    let mut rounds = Vec::new();
    let mut total = burn_in;
    let done = |active: &Vec<usize>| match task.objective() {
        Objective::BestArm => active.len() <= 1,
        Objective::LevelSet => active.is_empty(),
    };

    let mut round = 0;
    while !done(&active) && round < cfg.max_rounds {
        round += 1;
        let eps = 0.5f64.powi(round as i32);
        let dirs = match task.objective() {
            Objective::BestArm => {
                let zs: Vec<_> = active.iter().map(|&i| &targets[i]).collect();
                pair_differences(&zs)
            }
            Objective::LevelSet => active.iter().map(|&i| targets[i].clone()).collect(),
        };
        let problem = DesignProblem::weighted(arms.to_vec(), dirs, weights.clone())?.with_tolerance(cfg.fw_tol);
        let design = solve_design(&problem)?;
        let q = design.value;
        let tau = match variances {
            Some(_) => hrage_tau(eps, q, round, n_targets, task.delta()),
            None => rage_tau(eps, q, inst.sigma_max_sq(), round, n_targets, task.delta()),
        };
        let schedule = round_weights(&design.weights, tau);
        if (total + schedule.total) as u64 > cfg.max_total_pulls {
            log::warn!("round {round} needs {} pulls; sample cap reached", schedule.total);
            break;
        }
        let tallies = env.pull_tallies(&schedule)?;
        total += schedule.total;
        let theta = fit_tallies(arms, &tallies, variances)?.theta;
        for &i in &active {
            last_scores[i] = targets[i].dot(&theta);
        }

        let before = active.len();
        match task.objective() {
            Objective::BestArm => {
                let top = active.iter().map(|&i| last_scores[i]).fold(f64::NEG_INFINITY, f64::max);
                active.retain(|&i| top - last_scores[i] <= eps);
            }
            Objective::LevelSet => {
                let alpha = task.alpha();
                active.retain(|&i| {
                    let s = last_scores[i];
                    if s - eps > alpha {
                        good.push(i);
                        false
                    } else {
                        s + eps >= alpha
                    }
                });
            }
        }
        rounds.push(RoundRecord {
            round,
            epsilon: Some(eps),
            tau,
            active: before,
            pulls: schedule.total,
            design_value: q,
            survivors: active.clone(),
        });
    }

    let non_terminated = !done(&active);
    let answer = match task.objective() {
        Objective::BestArm => {
            let scores: Vec<f64> = active.iter().map(|&i| last_scores[i]).collect();
            Answer::Best(active[argmax(&scores)])
        }
        Objective::LevelSet => {
            good.extend(active.iter().filter(|&&i| last_scores[i] > task.alpha()));
            good.sort_unstable();
            Answer::Set(good)
        }
    };
    Ok(RunTrace {
        rounds,
        burn_in_pulls: burn_in,
        total_pulls: total,
        correct: task.is_correct(&answer),
        answer,
        non_terminated,
    })
}
