use nalgebra::DVector;

use super::{argmax, IdentTask, Objective};
use crate::design::{solve_design, Design, DesignProblem, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};

/// Instance complexity under given per-arm variances and under the
/// homoskedastic worst case `sigma_max^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    /// `min_lambda max_(h,q) ||h - q||^2_{A(lambda)^-1} / gap^2` with
    /// `A(lambda) = sum lambda_x x x' / sigma_x^2`.
    pub psi_star: f64,
    /// Same functional with every variance set to `sigma_max^2`.
    pub rho_star: f64,
    pub ratio: f64,
    pub psi_design: Design,
    pub rho_design: Design,
}

impl ComplexityReport {
    /// Samples any delta-PAC algorithm needs: `2 psi* log(1 / (2.4 delta))`.
    pub fn lower_bound_samples(&self, delta: f64) -> f64 {
        2.0 * self.psi_star * (1.0 / (2.4 * delta)).ln()
    }
}

/// Gap-normalized directions whose worst case defines the complexity.
fn normalized_directions(task: &IdentTask) -> Result<Vec<DVector<f64>>> {
    let inst = task.instance();
    let theta = inst.theta_star();
    let z = inst.targets();
    let r = task.rewards();
    let mut out = Vec::new();
    match task.objective() {
        Objective::BestArm => {
            let b = argmax(&r);
            for (i, zi) in z.iter().enumerate() {
                if i == b {
                    continue;
                }
                let y = &z[b] - zi;
                let gap = y.dot(theta);
                if !(gap > 0.0) {
                    return Err(Error::DegenerateGap(format!("target {i} ties the best target")));
                }
                out.push(y / gap);
            }
        }
        Objective::LevelSet => {
            for (i, zi) in z.iter().enumerate() {
                let gap = (zi.dot(theta) - task.alpha()).abs();
                if !(gap > 0.0) {
                    return Err(Error::DegenerateGap(format!("target {i} sits on the threshold")));
                }
                out.push(zi / gap);
            }
        }
    }
    Ok(out)
}

fn degenerate_design(n: usize) -> Design {
    Design {
        weights: vec![1.0 / n as f64; n],
        value: 0.0,
        support_size: n,
        lower_bound: 0.0,
        certified: true,
        iterations: 0,
    }
}

/// Computes `psi*` for the given per-arm variances along with `rho*`.
pub fn psi_star(task: &IdentTask, variances: &[f64]) -> Result<ComplexityReport> {
    psi_star_with_tolerance(task, variances, DEFAULT_TOLERANCE)
}

pub fn psi_star_with_tolerance(task: &IdentTask, variances: &[f64], tolerance: f64) -> Result<ComplexityReport> {
    let inst = task.instance();
    let arms = inst.arms();
    if variances.len() != arms.len() {
        return Err(Error::DimensionMismatch {
            expected: arms.len(),
            found: variances.len(),
            context: "variances vs arms",
        });
    }
    let dirs = normalized_directions(task)?;
    if dirs.is_empty() {
        let d = degenerate_design(arms.len());
        return Ok(ComplexityReport {
            psi_star: 0.0,
            rho_star: 0.0,
            ratio: 1.0,
            psi_design: d.clone(),
            rho_design: d,
        });
    }
    let psi = solve_design(
        &DesignProblem::weighted(arms.to_vec(), dirs.clone(), variances.to_vec())?.with_tolerance(tolerance),
    )?;
    let smax = inst.sigma_max_sq();
    let rho = solve_design(
        &DesignProblem::weighted(arms.to_vec(), dirs, vec![smax; arms.len()])?.with_tolerance(tolerance),
    )?;
    Ok(ComplexityReport {
        psi_star: psi.value,
        rho_star: rho.value,
        ratio: psi.value / rho.value,
        psi_design: psi,
        rho_design: rho,
    })
}
