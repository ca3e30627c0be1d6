//! Estimators of the noise matrix `Sigma*`: HEAD (two adaptive designs),
//! uniform sampling and the separate-arm estimator.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design::{round_design, solve_design, DesignProblem, RoundMode};
use crate::env::{Environment, Tally};
use crate::error::{Error, Result};
use crate::instance::HeteroInstance;
use crate::lift::{lift_phi, lifted_dim, unvech};
use crate::linalg;
use crate::regress::fit_tallies;
use crate::variance::{EstimatorKind, VarianceEstimate};

/// Burn-in constant `C' = 2e3 * (1 + 6 eps)` at `eps = 1/3`.
pub const DEFAULT_C_PRIME: f64 = 2e3 * (1.0 + 6.0 / 3.0);

/// Smallest even budget with multiplicative estimation error at most 1/2:
/// `2 * ceil(2 C' log(|X| / delta) kappa^2 d^2)`.
pub fn head_budget_for_half(inst: &HeteroInstance, delta: f64, c_prime: f64) -> usize {
    let n = inst.arms().len() as f64;
    let d = inst.dimension() as f64;
    let k = inst.kappa();
    2 * (2.0 * c_prime * (n / delta).ln() * k * k * d * d).ceil().max(0.0) as usize
}

fn check_env(inst: &HeteroInstance, env: &Environment) -> Result<()> {
    if env.num_arms() != inst.arms().len() {
        return Err(Error::DimensionMismatch {
            expected: inst.arms().len(),
            found: env.num_arms(),
            context: "environment arms vs instance arms",
        });
    }
    Ok(())
}

/// Solves `vech(Sigma)` from per-arm mean squared residuals, each arm row
/// weighted by its pull count. Returns the estimate and whether the lifted
/// rows were rank deficient.
fn lifted_regression(
    phis: &[DVector<f64>],
    counts: &[usize],
    mean_sq: &[f64],
    ridge_on_deficiency: bool,
) -> Result<(DVector<f64>, bool)> {
    let m = phis[0].len();
    let rows: Vec<usize> = (0..phis.len()).filter(|&i| counts[i] > 0).collect();
    let mut design = DMatrix::zeros(rows.len(), m);
    let mut rhs = DVector::zeros(rows.len());
    for (r, &i) in rows.iter().enumerate() {
        let s = (counts[i] as f64).sqrt();
        design.row_mut(r).copy_from(&(phis[i].transpose() * s));
        rhs[r] = mean_sq[i] * s;
    }
    if let Some(sol) = linalg::lstsq_qr(&design, &rhs) {
        return Ok((sol, false));
    }
    let sol = if ridge_on_deficiency {
        linalg::lstsq_ridge(&design, &rhs)?
    } else {
        linalg::lstsq_min_norm(&design, &rhs)
    };
    Ok((sol, true))
}

/// HEAD: a G-optimal design on the arms fixes `theta_hat` from the first
/// `Gamma/2` pulls; a G-optimal design on the lifted arms spends the second
/// half, and squared residuals against that `theta_hat` are regressed on the
/// lifted arms. The two halves use separate environment streams.
pub fn head_estimate(inst: &HeteroInstance, env: &mut Environment, gamma: usize) -> Result<VarianceEstimate> {
    check_env(inst, env)?;
    let mut gamma = gamma;
    if gamma % 2 == 1 {
        log::warn!("HEAD budget {gamma} is odd; using {}", gamma - 1);
        gamma -= 1;
    }
    let half = gamma / 2;
    let arms = inst.arms();

    let stage1 = solve_design(&DesignProblem::self_evaluating(arms.to_vec())?)?;
    if half < stage1.support_size || half == 0 {
        return Err(Error::InsufficientBudget {
            needed: 2 * stage1.support_size,
            available: gamma,
            context: "HEAD stage 1 design support",
        });
    }
    let phis: Vec<DVector<f64>> = arms.iter().map(lift_phi).collect();
    let stage2 = solve_design(&DesignProblem::self_evaluating(phis.clone())?)?;
    if half < stage2.support_size {
        return Err(Error::InsufficientBudget {
            needed: 2 * stage2.support_size,
            available: gamma,
            context: "HEAD stage 2 design support",
        });
    }

    env.begin_stream();
    let sched1 = round_design(&stage1, half, RoundMode::Ceiling)?;
    let tallies = env.pull_tallies(&sched1)?;
    let theta_hat = fit_tallies(arms, &tallies, None)?.theta;

    env.begin_stream();
    let sched2 = round_design(&stage2, half, RoundMode::Ceiling)?;
    let obs = env.sample_schedule(&sched2)?;
    let mut sum_sq = vec![0.0; arms.len()];
    for o in &obs {
        let r = o.y - arms[o.arm].dot(&theta_hat);
        sum_sq[o.arm] += r * r;
    }
    let mean_sq: Vec<f64> = sum_sq
        .iter()
        .zip(&sched2.counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let (s, deficient) = lifted_regression(&phis, &sched2.counts, &mean_sq, false)?;
    let sigma_hat = unvech(&s, inst.dimension());
    Ok(VarianceEstimate::from_matrix(
        sigma_hat,
        inst,
        sched1.total + sched2.total,
        EstimatorKind::Head,
        deficient,
    ))
}

/// Uniform estimator: `Gamma` arms drawn uniformly with replacement; the same
/// samples fit `theta_hat` and the lifted regression.
pub fn uniform_estimate(
    inst: &HeteroInstance,
    env: &mut Environment,
    gamma: usize,
    seed: u64,
) -> Result<VarianceEstimate> {
    check_env(inst, env)?;
    if gamma == 0 {
        return Err(Error::InsufficientBudget {
            needed: 1,
            available: 0,
            context: "uniform estimator",
        });
    }
    let arms = inst.arms();
    let n = arms.len();
    let mut picker = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; n];
    for _ in 0..gamma {
        counts[picker.random_range(0..n)] += 1;
    }
    env.begin_stream();
    let sched = crate::design::RoundSchedule::from_counts(counts, gamma, RoundMode::Ceiling);
    let obs = env.sample_schedule(&sched)?;
    let mut tallies = vec![Tally::default(); n];
    for o in &obs {
        tallies[o.arm].push(o.y);
    }
    let fit = fit_tallies(arms, &tallies, None)?;
    let mut sum_sq = vec![0.0; n];
    for o in &obs {
        let r = o.y - arms[o.arm].dot(&fit.theta);
        sum_sq[o.arm] += r * r;
    }
    let mean_sq: Vec<f64> = sum_sq
        .iter()
        .zip(&sched.counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let phis: Vec<DVector<f64>> = arms.iter().map(lift_phi).collect();
    let (s, deficient) = lifted_regression(&phis, &sched.counts, &mean_sq, true)?;
    Ok(VarianceEstimate::from_matrix(
        unvech(&s, inst.dimension()),
        inst,
        gamma,
        EstimatorKind::Uniform,
        deficient || fit.ridged,
    ))
}

/// Indices of the `M = d(d+1)/2` arms picked for the separate-arm estimator:
/// greedily the lifted arm with the largest residual after projecting out
/// the ones already chosen.
pub fn separate_arm_subset(arms: &[DVector<f64>]) -> Result<Vec<usize>> {
    let d = arms.first().map_or(0, |x| x.len());
    let m = lifted_dim(d);
    let phis: Vec<DVector<f64>> = arms.iter().map(lift_phi).collect();
    let chosen = linalg::greedy_spanning_subset(&phis, m);
    if chosen.len() < m {
        return Err(Error::RankDeficientLift {
            rank: chosen.len(),
            needed: m,
        });
    }
    Ok(chosen)
}

/// Separate-arm estimator: `floor(Gamma / M)` pulls of each of `M` arms with
/// independent lifts, per-arm sample variances, then `Phi_U vech = s`.
pub fn separate_arm_estimate(inst: &HeteroInstance, env: &mut Environment, gamma: usize) -> Result<VarianceEstimate> {
    check_env(inst, env)?;
    let arms = inst.arms();
    let subset = separate_arm_subset(arms)?;
    let m = subset.len();
    let per = gamma / m;
    if per == 0 {
        return Err(Error::InsufficientBudget {
            needed: m,
            available: gamma,
            context: "separate-arm estimator",
        });
    }
    let mut counts = vec![0usize; arms.len()];
    for &i in &subset {
        counts[i] = per;
    }
    env.begin_stream();
    let sched = crate::design::RoundSchedule::from_counts(counts, per * m, RoundMode::Ceiling);
    let tallies = env.pull_tallies(&sched)?;
    let phi_u = DMatrix::from_fn(m, m, |r, c| lift_phi(&arms[subset[r]])[c]);
    let s_bar = DVector::from_iterator(m, subset.iter().map(|&i| tallies[i].variance()));
    let s = phi_u
        .lu()
        .solve(&s_bar)
        .ok_or(Error::RankDeficientLift { rank: m - 1, needed: m })?;
    Ok(VarianceEstimate::from_matrix(
        unvech(&s, inst.dimension()),
        inst,
        per * m,
        EstimatorKind::SeparateArm,
        false,
    ))
}

#[cfg(test)]
mod tests;
