//! Half-vectorization and the quadratic lift `x -> phi_x`.
//!
//! Symmetric matrices are stored by their lower triangle in column-major
//! order (`vech`). The lift is chosen so that `phi_x . vech(S) = x' S x` for
//! every symmetric `S`, which turns estimation of `S` from squared residuals
//! into an ordinary linear regression in `d(d+1)/2` unknowns.

use nalgebra::{DMatrix, DVector};

/// Number of free entries of a symmetric `d x d` matrix.
pub fn lifted_dim(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Position of entry `(i, j)`, `i >= j`, inside `vech`.
pub fn vech_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < d);
    j * d + i - j - j * j.saturating_sub(1) / 2
}

/// Half-vectorization of a (square) matrix: lower triangle, column by column.
pub fn vech(m: &DMatrix<f64>) -> DVector<f64> {
    let d = m.nrows();
    let mut out = DVector::zeros(lifted_dim(d));
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            out[k] = m[(i, j)];
            k += 1;
        }
    }
    out
}

/// Inverse of [`vech`]: rebuilds the symmetric matrix.
pub fn unvech(v: &DVector<f64>, d: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), lifted_dim(d), "vech length does not match dimension");
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    m
}

/// The lift `phi_x = G' vec(x x')`: `x_i^2` on diagonal slots and `2 x_i x_j`
/// on off-diagonal slots.
pub fn lift_phi(x: &DVector<f64>) -> DVector<f64> {
    let d = x.len();
    let mut phi = DVector::zeros(lifted_dim(d));
    let mut k = 0;
    for j in 0..d {
        phi[k] = x[j] * x[j];
        k += 1;
        for i in (j + 1)..d {
            phi[k] = 2.0 * x[i] * x[j];
            k += 1;
        }
    }
    debug_assert_eq!(k, phi.len());
    phi
}

/// A lifted arm together with the index of the arm it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedArm {
    pub phi: DVector<f64>,
    pub source_index: usize,
}

impl LiftedArm {
    pub fn from_arm(source_index: usize, x: &DVector<f64>) -> Self {
        Self {
            phi: lift_phi(x),
            source_index,
        }
    }
}

pub fn lift_all(arms: &[DVector<f64>]) -> Vec<LiftedArm> {
    arms.iter()
        .enumerate()
        .map(|(i, x)| LiftedArm::from_arm(i, x))
        .collect()
}
