use nalgebra::DMatrix;

use crate::instance::{quad, HeteroInstance};

/// Projects a raw variance estimate onto `[sigma_min_sq, sigma_max_sq]`.
pub fn clamp_variance(raw: f64, inst: &HeteroInstance) -> f64 {
    clamp_to(raw, inst.sigma_min_sq(), inst.sigma_max_sq())
}

pub fn clamp_to(raw: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if raw.is_nan() {
        return hi;
    }
    raw.max(lo).min(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Head,
    Uniform,
    SeparateArm,
    OracleTruth,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Head => "head",
            EstimatorKind::Uniform => "uniform",
            EstimatorKind::SeparateArm => "separate",
            EstimatorKind::OracleTruth => "oracle-truth",
        }
    }
}

/// An estimate of the noise matrix plus the clamped per-arm variances that
/// downstream consumers actually use.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    /// Not required to be PSD.
    pub sigma_hat: DMatrix<f64>,
    /// Indexed by arm.
    pub per_arm: Vec<f64>,
    pub budget_used: usize,
    pub kind: EstimatorKind,
    /// Set when the regression had to fall back to a minimum-norm or ridge
    /// solution.
    pub rank_deficient: bool,
}

impl VarianceEstimate {
    pub fn from_matrix(
        sigma_hat: DMatrix<f64>,
        inst: &HeteroInstance,
        budget_used: usize,
        kind: EstimatorKind,
        rank_deficient: bool,
    ) -> Self {
        let per_arm = inst
            .arms()
            .iter()
            .map(|x| clamp_variance(quad(x, &sigma_hat), inst))
            .collect();
        Self {
            sigma_hat,
            per_arm,
            budget_used,
            kind,
            rank_deficient,
        }
    }

    /// The truth, clamped like any other estimate.
    pub fn oracle(inst: &HeteroInstance) -> Self {
        Self::from_matrix(inst.sigma_star().clone(), inst, 0, EstimatorKind::OracleTruth, false)
    }
}

/// Maximum absolute error of the clamped per-arm variances.
pub fn mae(est: &VarianceEstimate, inst: &HeteroInstance) -> f64 {
    est.per_arm
        .iter()
        .enumerate()
        .map(|(i, s)| (s - inst.arm_variance(i)).abs())
        .fold(0.0, f64::max)
}
