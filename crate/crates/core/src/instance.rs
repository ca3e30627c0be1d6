use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
/// Slack on the per-arm variance bound check, relative to the bound.
const BOUND_TOL: f64 = 1e-12;

/// Ground truth of a heteroskedastic linear bandit: arms `X`, targets `Z`,
/// mean parameter `theta*`, noise matrix `Sigma*` and known variance bounds.
///
/// The response to arm `x` is `x' theta* + eta` with `eta ~ N(0, x' Sigma* x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroInstance {
    arms: Vec<DVector<f64>>,
    targets: Vec<DVector<f64>>,
    theta_star: DVector<f64>,
    sigma_star: DMatrix<f64>,
    sigma_min_sq: f64,
    sigma_max_sq: f64,
}

impl HeteroInstance {
    /// Validates and builds an instance with explicit variance bounds.
    pub fn new(
        arms: Vec<DVector<f64>>,
        targets: Vec<DVector<f64>>,
        theta_star: DVector<f64>,
        sigma_star: DMatrix<f64>,
        sigma_min_sq: f64,
        sigma_max_sq: f64,
    ) -> Result<Self> {
        let d = theta_star.len();
        if d == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        if arms.is_empty() || targets.is_empty() {
            return Err(Error::InvalidInstance("arm and target sets must be non-empty".into()));
        }
        for v in arms.iter().chain(&targets) {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                    context: "arm or target vector",
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInstance("non-finite vector entry".into()));
            }
        }
        if sigma_star.nrows() != d || sigma_star.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: sigma_star.nrows(),
                context: "noise matrix",
            });
        }
        validate_noise_matrix(&sigma_star)?;
        if !(sigma_min_sq > 0.0) || !(sigma_max_sq >= sigma_min_sq) || !sigma_max_sq.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "variance bounds must satisfy 0 < min <= max, got [{sigma_min_sq}, {sigma_max_sq}]"
            )));
        }
        if linalg::rank(&arms) < d {
            return Err(Error::InvalidInstance("arms do not span the parameter space".into()));
        }
        for (i, x) in arms.iter().enumerate() {
            let s = quad(x, &sigma_star);
            if s < sigma_min_sq * (1.0 - BOUND_TOL) || s > sigma_max_sq * (1.0 + BOUND_TOL) {
                return Err(Error::InvalidInstance(format!(
                    "arm {i} has variance {s} outside [{sigma_min_sq}, {sigma_max_sq}]"
                )));
            }
        }
        Ok(Self {
            arms,
            targets,
            theta_star,
            sigma_star,
            sigma_min_sq,
            sigma_max_sq,
        })
    }

    /// Builds an instance whose variance bounds are the smallest and largest
    /// arm variance, so that `kappa` measures the realized heteroskedasticity.
    pub fn with_tight_bounds(
        arms: Vec<DVector<f64>>,
        targets: Vec<DVector<f64>>,
        theta_star: DVector<f64>,
        sigma_star: DMatrix<f64>,
    ) -> Result<Self> {
        if sigma_star.nrows() != theta_star.len() || sigma_star.ncols() != theta_star.len() {
            return Err(Error::DimensionMismatch {
                expected: theta_star.len(),
                found: sigma_star.nrows(),
                context: "noise matrix",
            });
        }
        let vars: Vec<f64> = arms
            .iter()
            .filter(|x| x.len() == theta_star.len())
            .map(|x| quad(x, &sigma_star))
            .collect();
        let lo = vars.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::new(arms, targets, theta_star, sigma_star, lo, hi)
    }

    pub fn dimension(&self) -> usize {
        self.theta_star.len()
    }

    pub fn arms(&self) -> &[DVector<f64>] {
        &self.arms
    }

    pub fn targets(&self) -> &[DVector<f64>] {
        &self.targets
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    pub fn sigma_star(&self) -> &DMatrix<f64> {
        &self.sigma_star
    }

    pub fn sigma_min_sq(&self) -> f64 {
        self.sigma_min_sq
    }

    pub fn sigma_max_sq(&self) -> f64 {
        self.sigma_max_sq
    }

    pub fn kappa(&self) -> f64 {
        self.sigma_max_sq / self.sigma_min_sq
    }

    /// `x' Sigma* x` for arm `i`.
    pub fn arm_variance(&self, i: usize) -> f64 {
        quad(&self.arms[i], &self.sigma_star)
    }

    pub fn arm_variances(&self) -> Vec<f64> {
        (0..self.arms.len()).map(|i| self.arm_variance(i)).collect()
    }

    /// Same instance with a different target set.
    pub fn with_targets(&self, targets: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(
            self.arms.clone(),
            targets,
            self.theta_star.clone(),
            self.sigma_star.clone(),
            self.sigma_min_sq,
            self.sigma_max_sq,
        )
    }
}

pub(crate) fn quad(x: &DVector<f64>, s: &DMatrix<f64>) -> f64 {
    (x.transpose() * s * x)[(0, 0)]
}

fn validate_noise_matrix(s: &DMatrix<f64>) -> Result<()> {
    let d = s.nrows();
    for i in 0..d {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidInstance(format!(
                    "noise matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInstance("noise matrix has non-finite entries".into()));
    }
    let min_eig = s
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL {
        return Err(Error::InvalidInstance(format!(
            "noise matrix has negative eigenvalue {min_eig}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn basis2() -> Vec<DVector<f64>> {
        vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]
    }

    #[test]
    fn tight_bounds_and_kappa() {
        let sigma = DMatrix::from_diagonal(&v(&[1.0, 4.0]));
        let inst =
            HeteroInstance::with_tight_bounds(basis2(), basis2(), v(&[1.0, 0.0]), sigma).unwrap();
        assert_eq!(inst.sigma_min_sq(), 1.0);
        assert_eq!(inst.sigma_max_sq(), 4.0);
        assert_eq!(inst.kappa(), 4.0);
        assert_eq!(inst.arm_variances(), vec![1.0, 4.0]);
    }

    #[test]
    fn rejects_arm_outside_bounds() {
        let sigma = DMatrix::from_diagonal(&v(&[1.0, 4.0]));
        let err = HeteroInstance::new(basis2(), basis2(), v(&[1.0, 0.0]), sigma, 1.0, 3.0);
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn rejects_non_spanning_arms() {
        let arms = vec![v(&[1.0, 0.0]), v(&[2.0, 0.0])];
        let err = HeteroInstance::with_tight_bounds(
            arms,
            basis2(),
            v(&[1.0, 0.0]),
            DMatrix::identity(2, 2),
        );
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn rejects_asymmetric_or_indefinite_noise() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(HeteroInstance::new(basis2(), basis2(), v(&[0.0, 0.0]), asym, 0.5, 2.0).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(HeteroInstance::new(basis2(), basis2(), v(&[0.0, 0.0]), indef, 0.5, 2.0).is_err());
    }

    #[test]
    fn rejects_bad_bounds() {
        let eye = DMatrix::identity(2, 2);
        assert!(HeteroInstance::new(basis2(), basis2(), v(&[0.0, 0.0]), eye.clone(), 0.0, 1.0).is_err());
        assert!(HeteroInstance::new(basis2(), basis2(), v(&[0.0, 0.0]), eye, 2.0, 1.0).is_err());
    }
}
