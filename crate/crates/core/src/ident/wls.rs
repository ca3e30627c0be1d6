use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::PdFactor;

/// `(X' W X)^{-1} X' W y` for observations `(x, y)` and per-observation
/// weights; unit weights give OLS.
pub fn wls_estimate(observations: &[(DVector<f64>, f64)], weights: &[f64]) -> Result<DVector<f64>> {
    if observations.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: observations.len(),
            found: weights.len(),
            context: "weights vs observations",
        });
    }
    let Some(d) = observations.first().map(|o| o.0.len()) else {
        return Err(Error::InvalidArgument("no observations".into()));
    };
    let mut a = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    for ((x, y), &w) in observations.iter().zip(weights) {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
                context: "observation vector",
            });
        }
        a.ger(w, x, x, 1.0);
        b.axpy(w * y, x, 1.0);
    }
    Ok(PdFactor::new(&a)?.solve(&b))
}
