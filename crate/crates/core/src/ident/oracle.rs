//! Fixed-design oracles that know the variances (or only their upper bound)
//! and sample until the verification condition holds.

use super::complexity::psi_star;
use super::{argmax, Answer, IdentTask, Objective, RoundRecord, RunTrace};
use crate::design::round_weights;
use crate::env::{Environment, Tally};
use crate::error::{Error, Result};
use crate::linalg::{self, PdFactor};
use crate::regress::fit_tallies;

/// Doubling batches stop at `2^MAX_DOUBLINGS * T` cumulative samples.
const MAX_DOUBLINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigmaSource {
    /// The design attaining `psi*` under the true per-arm variances.
    TrueVariances,
    /// The homoskedastic design attaining `rho*`.
    MaxVariance,
}

/// Samples the oracle design in cumulative batches `T, 2T, 4T, ...` with
/// `T = ceil(2 psi log(2|Z| / delta))` until every comparison verifies.
pub fn oracle_run(task: &IdentTask, env: &mut Environment, source: SigmaSource) -> Result<RunTrace> {
    let inst = task.instance();
    let arms = inst.arms();
    if env.num_arms() != arms.len() {
        return Err(Error::DimensionMismatch {
            expected: arms.len(),
            found: env.num_arms(),
            context: "environment arms vs instance arms",
        });
    }
    let true_vars = inst.arm_variances();
    let report = psi_star(task, &true_vars)?;
    let (design, value, variances) = match source {
        SigmaSource::TrueVariances => (&report.psi_design, report.psi_star, true_vars),
        SigmaSource::MaxVariance => (&report.rho_design, report.rho_star, vec![inst.sigma_max_sq(); arms.len()]),
    };
    let targets = inst.targets();
    let log_term = (2.0 * targets.len() as f64 / task.delta()).ln();
    let t = (2.0 * value * log_term).ceil().max(1.0) as usize;

    let mut cum = vec![Tally::default(); arms.len()];
    let mut counts = vec![0usize; arms.len()];
    let mut rounds = Vec::new();
    let mut total = 0;
    let mut sampled_target = 0;
    let mut outcome = None;
    for k in 0..=MAX_DOUBLINGS {
        let target = t << k;
        let schedule = round_weights(&design.weights, (target - sampled_target) as f64);
        sampled_target = target;
        let batch = env.pull_tallies(&schedule)?;
        for (c, b) in cum.iter_mut().zip(&batch) {
            c.merge(b);
        }
        for (c, n) in counts.iter_mut().zip(&schedule.counts) {
            *c += n;
        }
        total += schedule.total;

        let theta = fit_tallies(arms, &cum, Some(&variances))?.theta;
        let masses: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let info = PdFactor::new(&linalg::info_matrix(arms, &masses, &variances)?)?;
        let scores: Vec<f64> = targets.iter().map(|z| z.dot(&theta)).collect();
        let (answer, unverified) = verify(task, &scores, |v| info.quad_form(v), log_term);
        rounds.push(RoundRecord {
            round: k as usize + 1,
            epsilon: None,
            tau: target as f64,
            active: targets.len(),
            pulls: schedule.total,
            design_value: value,
            survivors: unverified.clone(),
        });
        if unverified.is_empty() {
            return Ok(RunTrace {
                rounds,
                burn_in_pulls: 0,
                total_pulls: total,
                correct: task.is_correct(&answer),
                answer,
                non_terminated: false,
            });
        }
        outcome = Some(answer);
    }
    let answer = outcome.expect("at least one batch");
    Ok(RunTrace {
        rounds,
        burn_in_pulls: 0,
        total_pulls: total,
        correct: task.is_correct(&answer),
        answer,
        non_terminated: true,
    })
}

/// Empirical answer and the targets whose margin is below
/// `sqrt(2 ||y||^2_{A^-1} log(2|Z|/delta))`.
fn verify(
    task: &IdentTask,
    scores: &[f64],
    norm_sq: impl Fn(&nalgebra::DVector<f64>) -> f64,
    log_term: f64,
) -> (Answer, Vec<usize>) {
    let targets = task.instance().targets();
    match task.objective() {
        Objective::BestArm => {
            let b = argmax(scores);
            let bad = (0..targets.len())
                .filter(|&i| i != b)
                .filter(|&i| {
                    let y = &targets[b] - &targets[i];
                    scores[b] - scores[i] < (2.0 * norm_sq(&y) * log_term).sqrt()
                })
                .collect();
            (Answer::Best(b), bad)
        }
        Objective::LevelSet => {
            let alpha = task.alpha();
            let set = (0..targets.len()).filter(|&i| scores[i] > alpha).collect();
            let bad = (0..targets.len())
                .filter(|&i| (scores[i] - alpha).abs() < (2.0 * norm_sq(&targets[i]) * log_term).sqrt())
                .collect();
            (Answer::Set(set), bad)
        }
    }
}
