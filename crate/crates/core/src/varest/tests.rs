use super::*;
use crate::env::NoiseMode;
use crate::variance::mae;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

fn basis(d: usize) -> Vec<DVector<f64>> {
    (0..d).map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 })).collect()
}

fn small_instance() -> HeteroInstance {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let arms = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[s, s])];
    HeteroInstance::with_tight_bounds(
        arms.clone(),
        arms,
        v(&[1.0, -0.5]),
        DMatrix::from_diagonal(&v(&[1.0, 0.25])),
    )
    .unwrap()
}

fn isotropic(d: usize, c: f64) -> HeteroInstance {
    let mut arms = basis(d);
    arms.push(DVector::from_element(d, 1.0 / (d as f64).sqrt()));
    HeteroInstance::new(
        arms.clone(),
        arms,
        DVector::from_fn(d, |i, _| if i == 0 { 1.0 } else { 0.0 }),
        DMatrix::identity(d, d) * c,
        0.5 * c,
        2.0 * c,
    )
    .unwrap()
}

#[test]
fn budget_formula_examples() {
    let inst = HeteroInstance::with_tight_bounds(
        vec![v(&[1.0]), v(&[-1.0])],
        vec![v(&[1.0])],
        v(&[0.3]),
        DMatrix::identity(1, 1),
    )
    .unwrap();
    assert_eq!(head_budget_for_half(&inst, 0.5, 1.0), 6);
    let one = head_budget_for_half(&inst, 0.5, 10.0);
    let two = head_budget_for_half(&inst, 0.5, 20.0);
    assert!(two.abs_diff(2 * one) <= 2);
    assert_eq!(DEFAULT_C_PRIME, 6000.0);
}

#[test]
fn head_zero_noise_gives_zero_matrix() {
    let inst = isotropic(3, 0.7);
    let mut env = Environment::new(&inst, 1, NoiseMode::Silent);
    let est = head_estimate(&inst, &mut env, 2000).unwrap();
    assert!(est.sigma_hat.iter().all(|s| s.abs() <= 1e-24), "{}", est.sigma_hat);
    assert!(est.per_arm.iter().all(|s| *s == inst.sigma_min_sq()));
}

#[test]
fn uniform_and_separate_zero_noise() {
    let inst = small_instance();
    let mut env = Environment::new(&inst, 2, NoiseMode::Silent);
    let u = uniform_estimate(&inst, &mut env, 3000, 5).unwrap();
    assert!(u.sigma_hat.iter().all(|s| s.abs() <= 1e-24));
    let s = separate_arm_estimate(&inst, &mut env, 3000).unwrap();
    assert!(s.sigma_hat.iter().all(|x| *x == 0.0));
}

#[test]
fn uniform_rejects_empty_budget() {
    let inst = small_instance();
    let mut env = Environment::new(&inst, 2, NoiseMode::Gaussian);
    assert!(matches!(
        uniform_estimate(&inst, &mut env, 0, 1),
        Err(Error::InsufficientBudget { .. })
    ));
}

#[test]
fn head_rejects_budget_below_support() {
    let inst = small_instance();
    let mut env = Environment::new(&inst, 2, NoiseMode::Gaussian);
    assert!(matches!(head_estimate(&inst, &mut env, 4), Err(Error::InsufficientBudget { .. })));
}

#[test]
fn separate_arm_uses_full_set_in_two_dimensions() {
    let inst = small_instance();
    let mut subset = separate_arm_subset(inst.arms()).unwrap();
    subset.sort();
    assert_eq!(subset, vec![0, 1, 2]);
}

#[test]
fn separate_arm_needs_independent_lifts() {
    // +-x share a lift.
    let arms = vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0]), v(&[0.0, 1.0])];
    assert!(matches!(
        separate_arm_subset(&arms),
        Err(Error::RankDeficientLift { rank: 2, needed: 3 })
    ));
}

#[test]
fn estimates_stay_in_bounds() {
    let inst = small_instance();
    for seed in 0..4 {
        let mut env = Environment::new(&inst, seed, NoiseMode::Gaussian);
        for est in [
            head_estimate(&inst, &mut env, 600).unwrap(),
            uniform_estimate(&inst, &mut env, 600, seed).unwrap(),
            separate_arm_estimate(&inst, &mut env, 600).unwrap(),
        ] {
            for s in &est.per_arm {
                assert!(*s >= inst.sigma_min_sq() && *s <= inst.sigma_max_sq());
            }
        }
    }
}

#[test]
fn odd_budget_is_decremented() {
    let inst = small_instance();
    let mut a = Environment::new(&inst, 3, NoiseMode::Gaussian);
    let mut b = Environment::new(&inst, 3, NoiseMode::Gaussian);
    let odd = head_estimate(&inst, &mut a, 1001).unwrap();
    let even = head_estimate(&inst, &mut b, 1000).unwrap();
    assert_eq!(odd, even);
}

/// Rebuilds the HEAD estimate from the environment's call log: stage-1 draws
/// only determine `theta_hat`, stage-2 draws only feed the regression.
#[test]
fn head_stages_use_disjoint_samples() {
    let inst = small_instance();
    let mut env = Environment::new(&inst, 17, NoiseMode::Gaussian).with_call_log();
    let est = head_estimate(&inst, &mut env, 4000).unwrap();
    let log = env.call_log().unwrap().to_vec();
    let streams: std::collections::BTreeSet<u64> = log.iter().map(|c| c.0).collect();
    assert_eq!(streams.into_iter().collect::<Vec<_>>(), vec![1, 2]);

    let arms = inst.arms();
    let mut tallies = vec![Tally::default(); arms.len()];
    for &(_, a, y) in log.iter().filter(|c| c.0 == 1) {
        tallies[a].push(y);
    }
    let theta = fit_tallies(arms, &tallies, None).unwrap().theta;
    // Oracle: one row per stage-2 pull, plain normal equations.
    let stage2: Vec<_> = log.iter().filter(|c| c.0 == 2).collect();
    let m = 3;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for &&(_, a, y) in &stage2 {
        let phi = lift_phi(&arms[a]);
        let r = (y - arms[a].dot(&theta)).powi(2);
        gram += &phi * phi.transpose();
        rhs += &phi * r;
    }
    let s = gram.try_inverse().unwrap() * rhs;
    let oracle = unvech(&s, 2);
    assert!((oracle - &est.sigma_hat).abs().max() < 1e-9);
    assert_eq!(est.budget_used, log.len());
}

/// With `M = 3` lifted arms the separate-arm estimator samples the same three
/// points as HEAD's second stage, but with twice the budget; HEAD pays for
/// its pilot stage with a factor of about `sqrt(2)`.
#[test]
fn budget_split_cost_in_two_dimensions() {
    let inst = small_instance();
    let (mut head, mut sep) = (0.0, 0.0);
    for seed in 0..32 {
        let mut env = Environment::new(&inst, seed, NoiseMode::Gaussian);
        head += mae(&head_estimate(&inst, &mut env, 200_000).unwrap(), &inst);
        let mut env = Environment::new(&inst, seed, NoiseMode::Gaussian);
        sep += mae(&separate_arm_estimate(&inst, &mut env, 200_000).unwrap(), &inst);
    }
    let ratio = head / sep;
    assert!(ratio > 1.0 && ratio < 2.0, "head/separate = {ratio}");
}

#[test]
fn rank_deficient_lift_is_flagged() {
    // Arms +-e1, +-e2 and one diagonal: only three distinct lifts in d = 3,
    // so W spans fewer than M = 6 directions.
    let arms = vec![
        v(&[1.0, 0.0, 0.0]),
        v(&[0.0, 1.0, 0.0]),
        v(&[0.0, 0.0, 1.0]),
        v(&[0.6, 0.8, 0.0]),
    ];
    let inst = HeteroInstance::with_tight_bounds(arms.clone(), arms, v(&[1.0, 0.0, 0.0]), DMatrix::identity(3, 3))
        .unwrap();
    let mut env = Environment::new(&inst, 4, NoiseMode::Gaussian);
    let est = head_estimate(&inst, &mut env, 20_000).unwrap();
    assert!(est.rank_deficient);
    assert!(mae(&est, &inst) < 0.2);
}

