//! Least-squares fits from per-arm aggregates.
//!
//! Pulls of the same arm enter the normal equations only through their count
//! and mean, so fitting from [`Tally`] values gives the same estimate as
//! stacking one row per pull.

use nalgebra::{DMatrix, DVector};

use crate::env::Tally;
use crate::error::{Error, Result};
use crate::linalg::PdFactor;

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub theta: DVector<f64>,
    /// The Gram matrix needed a ridge to factor.
    pub ridged: bool,
}

/// `theta = (sum n_x x x' / w_x)^{-1} sum n_x ybar_x x / w_x`; `variances`
/// defaults to all ones (OLS).
pub fn fit_tallies(arms: &[DVector<f64>], tallies: &[Tally], variances: Option<&[f64]>) -> Result<Fit> {
    if tallies.len() != arms.len() {
        return Err(Error::DimensionMismatch {
            expected: arms.len(),
            found: tallies.len(),
            context: "tallies vs arms",
        });
    }
    if let Some(w) = variances {
        if w.len() != arms.len() {
            return Err(Error::DimensionMismatch {
                expected: arms.len(),
                found: w.len(),
                context: "variances vs arms",
            });
        }
    }
    let d = arms.first().map_or(0, |x| x.len());
    let mut a = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    for (i, (x, t)) in arms.iter().zip(tallies).enumerate() {
        if t.count == 0 {
            continue;
        }
        let w = variances.map_or(1.0, |w| w[i]);
        let c = t.count as f64 / w;
        a.ger(c, x, x, 1.0);
        b.axpy(c * t.mean(), x, 1.0);
    }
    let f = PdFactor::new(&a)?;
    Ok(Fit {
        theta: f.solve(&b),
        ridged: f.ridge() > 0.0,
    })
}
