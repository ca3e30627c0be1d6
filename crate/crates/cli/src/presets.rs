//! Instance builders for the experiment presets.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use hetbandit_core::{HeteroInstance, IdentTask};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ConfigError, ExperimentConfig, ObjectiveChoice, PresetParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetKind {
    IntroKappa,
    VarEstCompare,
    Example1,
    Example2,
    MultivariateTest,
    Custom,
}

impl PresetKind {
    pub const ALL: [PresetKind; 6] = [
        PresetKind::IntroKappa,
        PresetKind::VarEstCompare,
        PresetKind::Example1,
        PresetKind::Example2,
        PresetKind::MultivariateTest,
        PresetKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::IntroKappa => "intro",
            PresetKind::VarEstCompare => "varest",
            PresetKind::Example1 => "example1",
            PresetKind::Example2 => "example2",
            PresetKind::MultivariateTest => "example3",
            PresetKind::Custom => "custom",
        }
    }

    /// Parameters the preset reads; anything else set in the config is an error.
    fn accepted(self) -> &'static [&'static str] {
        const RUN: [&str; 5] = ["c_prime", "fw_tol", "max_rounds", "max_total_pulls", "algorithms"];
        match self {
            PresetKind::IntroKappa => &["kappa", RUN[0], RUN[1], RUN[2], RUN[3], RUN[4]],
            PresetKind::VarEstCompare => &["d", "n_unit", "n_small", "gammas", "algorithms"],
            PresetKind::Example1 => &["d", "omega", "q", RUN[0], RUN[1], RUN[2], RUN[3], RUN[4]],
            PresetKind::Example2 => &["d", "omega", "alpha_sq", "beta_sq", RUN[0], RUN[1], RUN[2], RUN[3], RUN[4]],
            PresetKind::MultivariateTest => &RUN,
            PresetKind::Custom => &[
                "arms", "targets", "theta", "sigma_diag", "objective", "alpha", RUN[0], RUN[1], RUN[2], RUN[3], RUN[4],
            ],
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "intro" | "intro_kappa" | "introkappa" => PresetKind::IntroKappa,
            "varest" | "varest_compare" | "varestcompare" => PresetKind::VarEstCompare,
            "example1" => PresetKind::Example1,
            "example2" => PresetKind::Example2,
            "example3" | "multivariate" | "multivariate_test" => PresetKind::MultivariateTest,
            "custom" => PresetKind::Custom,
            _ => return Err(ConfigError::UnknownPreset(s.to_string())),
        })
    }
}

/// An identification preset: the simulated task plus the per-arm variances
/// its oracle designs are drawn from.
#[derive(Debug, Clone)]
pub struct IdentPreset {
    pub task: IdentTask,
    pub design_variances: Vec<f64>,
}

/// Variance-estimation comparison; arms are redrawn for every replication.
#[derive(Debug, Clone, PartialEq)]
pub struct VarEstPreset {
    pub d: usize,
    pub n_unit: usize,
    pub n_small: usize,
    pub gammas: Vec<usize>,
}

impl VarEstPreset {
    pub fn instance(&self, seed: u64) -> Result<HeteroInstance, ConfigError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sphere = |r: f64| {
            let v = DVector::from_fn(self.d, |_, _| StandardNormal.sample(&mut rng));
            v.normalize() * r
        };
        let mut arms: Vec<DVector<f64>> = (0..self.n_unit).map(|_| sphere(1.0)).collect();
        arms.extend((0..self.n_small).map(|_| sphere(0.1)));
        let sigma = DVector::from_fn(self.d, |i, _| if i % 2 == 0 { 1.0 } else { 0.1 });
        instance(arms.clone(), arms, DVector::from_element(self.d, 1.0), &sigma)
    }
}

#[derive(Debug, Clone)]
pub enum Built {
    Ident(IdentPreset),
    VarEst(VarEstPreset),
}

fn e(d: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[i] = 1.0;
    v
}

fn instance(
    arms: Vec<DVector<f64>>,
    targets: Vec<DVector<f64>>,
    theta: DVector<f64>,
    sigma_diag: &DVector<f64>,
) -> Result<HeteroInstance, ConfigError> {
    HeteroInstance::with_tight_bounds(arms, targets, theta, DMatrix::from_diagonal(sigma_diag))
        .map_err(|e| ConfigError::Invalid(e.to_string()))
}

fn best_arm(delta: f64, inst: HeteroInstance) -> Result<IdentPreset, ConfigError> {
    let design_variances = inst.arm_variances();
    let task = IdentTask::best_arm(delta, inst).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(IdentPreset { task, design_variances })
}

fn out_of_range(key: &str, value: impl fmt::Display, reason: &str) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

/// Intro triple `{e1, e2, (cos 0.5, sin 0.5)}` with `Sigma* = diag(1, kappa)`.
pub fn intro_instance(kappa: f64) -> Result<HeteroInstance, ConfigError> {
    let arms = vec![
        DVector::from_vec(vec![1.0, 0.0]),
        DVector::from_vec(vec![0.0, 1.0]),
        DVector::from_vec(vec![0.5f64.cos(), 0.5f64.sin()]),
    ];
    instance(arms.clone(), arms, e(2, 0), &DVector::from_vec(vec![1.0, kappa]))
}

/// Per-arm variances `(1, kappa, 1)` used for the intro designs.
pub fn intro_variances(kappa: f64) -> Vec<f64> {
    vec![1.0, kappa, 1.0]
}

pub fn example1_arms(d: usize, omega: f64, q: f64) -> Vec<DVector<f64>> {
    let mut arms = vec![e(d, 0), e(d, 1)];
    arms.extend((2..d).map(|i| e(d, i) * q));
    arms.extend((1..d).map(|i| e(d, 0) * omega.cos() + e(d, i) * omega.sin()));
    let base = (e(d, 0) + e(d, 1)) * 0.5;
    arms.push(&base + e(d, 2) * 0.1);
    arms.push(&base + (e(d, 2) + e(d, 3)) * 0.1);
    arms
}

pub fn example2_arms(d: usize, omega: f64) -> Vec<DVector<f64>> {
    let mut arms = vec![e(d, 0), e(d, 0) * omega.cos() + e(d, 1) * omega.sin()];
    arms.extend((2..d).map(|i| e(d, i)));
    for i in 0..d {
        for j in i + 1..d {
            arms.push((e(d, i) + e(d, j)) * FRAC_1_SQRT_2);
        }
    }
    arms
}

/// Layouts of 3 dimensions with 2 variations: bias, one indicator per
/// dimension for its second variation, and the three pairwise products.
/// Layouts using the second variation in dimension 1 come first.
pub fn multivariate_arms() -> Vec<DVector<f64>> {
    let mut arms = Vec::with_capacity(8);
    for code in (0..8u32).rev() {
        let b = [(code >> 2) & 1, (code >> 1) & 1, code & 1].map(f64::from);
        arms.push(DVector::from_vec(vec![
            1.0,
            b[0],
            b[1],
            b[2],
            b[0] * b[1],
            b[0] * b[2],
            b[1] * b[2],
        ]));
    }
    arms
}

fn to_vectors(key: &str, rows: &[Vec<f64>]) -> Result<Vec<DVector<f64>>, ConfigError> {
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(out_of_range(key, rows.len(), "vectors differ in length"));
    }
    Ok(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
}

fn custom(delta: f64, p: &PresetParams) -> Result<IdentPreset, ConfigError> {
    let missing = |k: &str| ConfigError::Invalid(format!("custom preset needs `{k}`"));
    let arms = to_vectors("arms", p.arms.as_ref().ok_or_else(|| missing("arms"))?)?;
    let targets = match &p.targets {
        Some(t) => to_vectors("targets", t)?,
        None => arms.clone(),
    };
    let theta = DVector::from_column_slice(p.theta.as_ref().ok_or_else(|| missing("theta"))?);
    let sigma = DVector::from_column_slice(p.sigma_diag.as_ref().ok_or_else(|| missing("sigma_diag"))?);
    let inst = instance(arms, targets, theta, &sigma)?;
    let design_variances = inst.arm_variances();
    let task = match p.objective.unwrap_or(ObjectiveChoice::BestArm) {
        ObjectiveChoice::BestArm => {
            if p.alpha.is_some() {
                return Err(ConfigError::Invalid("`alpha` only applies to objective = ls".into()));
            }
            IdentTask::best_arm(delta, inst)
        }
        ObjectiveChoice::LevelSet => IdentTask::level_set(p.alpha.ok_or_else(|| missing("alpha"))?, delta, inst),
    }
    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(IdentPreset { task, design_variances })
}

fn set_keys(p: &PresetParams) -> Vec<&'static str> {
    let mut out = Vec::new();
    macro_rules! check {
        ($($f:ident),*) => { $( if p.$f.is_some() { out.push(stringify!($f)); } )* };
    }
    check!(
        d, omega, q, alpha_sq, beta_sq, kappa, gammas, c_prime, n_unit, n_small, fw_tol, max_rounds,
        max_total_pulls, algorithms, arms, targets, theta, sigma_diag, objective, alpha
    );
    out
}

/// Builds the instance described by `cfg`, rejecting parameters the preset
/// does not read and values outside their ranges.
pub fn build_preset(cfg: &ExperimentConfig) -> Result<Built, ConfigError> {
    let p = &cfg.params;
    let kind = cfg.preset;
    if let Some(k) = set_keys(p).into_iter().find(|k| !kind.accepted().contains(k)) {
        return Err(ConfigError::Invalid(format!("`{k}` does not apply to preset {kind}")));
    }
    let omega = p.omega.unwrap_or(0.02);
    match kind {
        PresetKind::IntroKappa => {
            let kappa = p.kappa.unwrap_or(20.0);
            let inst = intro_instance(kappa)?;
            let task = IdentTask::best_arm(cfg.delta, inst).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            Ok(Built::Ident(IdentPreset {
                task,
                design_variances: intro_variances(kappa),
            }))
        }
        PresetKind::Example1 => {
            let d = p.d.unwrap_or(4);
            if d < 4 {
                return Err(out_of_range("d", d, "example1 needs d >= 4"));
            }
            let arms = example1_arms(d, omega, p.q.unwrap_or(0.4));
            let inst = instance(arms.clone(), arms, e(d, 0), &DVector::from_element(d, 1.0))?;
            best_arm(cfg.delta, inst).map(Built::Ident)
        }
        PresetKind::Example2 => {
            let d = p.d.unwrap_or(3);
            if d < 3 {
                return Err(out_of_range("d", d, "example2 needs d >= 3"));
            }
            let (a, b) = (p.alpha_sq.unwrap_or(1.0), p.beta_sq.unwrap_or(0.2));
            let sigma = DVector::from_fn(d, |i, _| if i == 1 || i == 2 { b } else { a });
            let arms = example2_arms(d, omega);
            let inst = instance(arms.clone(), arms, e(d, 0), &sigma)?;
            best_arm(cfg.delta, inst).map(Built::Ident)
        }
        PresetKind::MultivariateTest => {
            let arms = multivariate_arms();
            let mut sigma = DVector::from_element(7, 1e-3);
            sigma[0] = 0.3;
            sigma[1] = 0.7;
            let theta = DVector::from_vec(vec![0.0, 0.01, 0.015, 0.02, -0.1, -0.1, -0.1]);
            let inst = instance(arms.clone(), arms, theta, &sigma)?;
            best_arm(cfg.delta, inst).map(Built::Ident)
        }
        PresetKind::VarEstCompare => {
            let d = p.d.unwrap_or(6);
            if d < 2 {
                return Err(out_of_range("d", d, "varest needs d >= 2"));
            }
            let n_unit = p.n_unit.unwrap_or(100);
            let n_small = p.n_small.unwrap_or(400);
            if n_unit + n_small < d * (d + 1) / 2 {
                return Err(out_of_range("n_unit", n_unit, "too few arms to span the lifted space"));
            }
            Ok(Built::VarEst(VarEstPreset {
                d,
                n_unit,
                n_small,
                gammas: p.gammas.clone().unwrap_or_else(|| vec![10_000, 20_000, 40_000, 80_000]),
            }))
        }
        PresetKind::Custom => custom(cfg.delta, p).map(Built::Ident),
    }
}
