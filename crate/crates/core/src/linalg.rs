//! Dense linear-algebra helpers: information matrices, positive-definite
//! solves with a ridge fallback, span bases and least squares.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used when deciding the rank of a vector set.
pub const RANK_TOL: f64 = 1e-9;

/// `A(lambda) = sum_v lambda_v v v' / w_v`.
pub fn info_matrix(
    vectors: &[DVector<f64>],
    design: &[f64],
    weights: &[f64],
) -> Result<DMatrix<f64>> {
    if design.len() != vectors.len() {
        return Err(Error::DimensionMismatch {
            expected: vectors.len(),
            found: design.len(),
            context: "design weights vs vectors",
        });
    }
    if weights.len() != vectors.len() {
        return Err(Error::DimensionMismatch {
            expected: vectors.len(),
            found: weights.len(),
            context: "per-vector weights vs vectors",
        });
    }
    let k = vectors.first().map_or(0, |v| v.len());
    let mut a = DMatrix::zeros(k, k);
    for ((v, &lam), &w) in vectors.iter().zip(design).zip(weights) {
        if v.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: v.len(),
                context: "vector length",
            });
        }
        if !(w > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "per-vector weight must be positive, got {w}"
            )));
        }
        if lam != 0.0 {
            a.ger(lam / w, v, v, 1.0);
        }
    }
    Ok(a)
}

/// Cholesky factor of a symmetric positive-definite matrix, possibly after a
/// small diagonal ridge was added.
#[derive(Debug, Clone)]
pub struct PdFactor {
    chol: Cholesky<f64, Dyn>,
    ridge: f64,
}

impl PdFactor {
    /// Factors `a`; on failure retries with `1e-10 * trace(a) / k` added to
    /// the diagonal.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if let Some(chol) = a.clone().cholesky() {
            return Ok(Self { chol, ridge: 0.0 });
        }
        let k = a.nrows().max(1) as f64;
        let ridge = 1e-10 * a.trace().abs() / k;
        if ridge > 0.0 {
            let mut b = a.clone();
            for i in 0..a.nrows() {
                b[(i, i)] += ridge;
            }
            if let Some(chol) = b.cholesky() {
                log::debug!("information matrix needed ridge {ridge:e}");
                return Ok(Self { chol, ridge });
            }
        }
        Err(Error::SingularInformation {
            pivot: smallest_pivot(a),
        })
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `v' A^{-1} v`, clamped at zero.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.solve(v)).max(0.0)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// First non-positive (or smallest) pivot of an unpivoted Cholesky sweep.
fn smallest_pivot(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut smallest = f64::INFINITY;
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        smallest = smallest.min(diag);
        if diag <= 0.0 || !diag.is_finite() {
            return diag;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    smallest
}

/// `v' A^{-1} v` through a linear solve.
pub fn quad_form_inv(a: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    if a.nrows() != v.len() || a.ncols() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: v.len(),
            context: "quadratic form",
        });
    }
    Ok(PdFactor::new(a)?.quad_form(v))
}

/// Stacks vectors as the columns of a `k x n` matrix.
pub fn columns(vectors: &[DVector<f64>]) -> DMatrix<f64> {
    let k = vectors.first().map_or(0, |v| v.len());
    DMatrix::from_fn(k, vectors.len(), |i, j| vectors[j][i])
}

/// Stacks vectors as the rows of an `n x k` matrix.
pub fn rows(vectors: &[DVector<f64>]) -> DMatrix<f64> {
    let k = vectors.first().map_or(0, |v| v.len());
    DMatrix::from_fn(vectors.len(), k, |i, j| vectors[i][j])
}

/// Orthonormal basis (as columns) of the span of `vectors`.
pub fn span_basis(vectors: &[DVector<f64>]) -> DMatrix<f64> {
    let m = columns(vectors);
    let k = m.nrows();
    if k == 0 || m.ncols() == 0 {
        return DMatrix::zeros(k, 0);
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(k, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    DMatrix::from_fn(k, keep.len(), |i, j| u[(i, keep[j])])
}

/// Rank of a vector set under [`RANK_TOL`].
pub fn rank(vectors: &[DVector<f64>]) -> usize {
    span_basis(vectors).ncols()
}

/// Greedy volume-style selection: repeatedly take the vector with the largest
/// component orthogonal to the ones already chosen. Ties go to the lowest
/// index. Stops after `limit` picks or when nothing independent remains.
pub fn greedy_spanning_subset(vectors: &[DVector<f64>], limit: usize) -> Vec<usize> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut residual: Vec<DVector<f64>> = vectors.to_vec();
    let mut chosen = Vec::new();
    while chosen.len() < limit {
        let mut best = None;
        let mut best_norm = RANK_TOL * scale;
        for (i, r) in residual.iter().enumerate() {
            let n = r.norm();
            if n > best_norm {
                best_norm = n;
                best = Some(i);
            }
        }
        let Some(pick) = best else { break };
        chosen.push(pick);
        let q = &residual[pick] / best_norm;
        for r in residual.iter_mut() {
            let c = q.dot(r);
            r.axpy(-c, &q, 1.0);
        }
    }
    chosen
}

/// Least squares through Householder QR. Returns `None` if the columns are
/// numerically dependent.
pub fn lstsq_qr(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = design.ncols();
    if design.nrows() < n {
        return None;
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let rmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if n > 0 && (0..n).any(|i| r[(i, i)].abs() <= RANK_TOL * rmax) {
        return None;
    }
    let mut qtb = rhs.clone();
    qr.q_tr_mul(&mut qtb);
    let top = qtb.rows(0, n).into_owned();
    r.solve_upper_triangular(&top)
}

/// Minimum-norm least-squares solution via the SVD.
pub fn lstsq_min_norm(design: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(rhs, RANK_TOL * smax.max(f64::MIN_POSITIVE))
        .expect("both singular-vector sets requested")
}

/// Ridge-regularized least squares `(D'D + r I)^{-1} D' y` with
/// `r = 1e-10 * trace(D'D) / k`.
pub fn lstsq_ridge(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let mut gram = design.transpose() * design;
    let k = gram.nrows().max(1) as f64;
    let ridge = (1e-10 * gram.trace() / k).max(f64::MIN_POSITIVE);
    for i in 0..gram.nrows() {
        gram[(i, i)] += ridge;
    }
    let rhs = design.transpose() * rhs;
    Ok(PdFactor::new(&gram)?.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn info_matrix_basis_uniform() {
        let e = [v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let a = info_matrix(&e, &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        assert_eq!(a, DMatrix::from_diagonal(&v(&[0.5, 0.5])));
    }

    #[test]
    fn info_matrix_scaled_weights() {
        let e = [v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let a = info_matrix(&e, &[0.5, 0.5], &[2.0, 1.0]).unwrap();
        assert_eq!(a, DMatrix::from_diagonal(&v(&[0.25, 0.5])));
    }

    #[test]
    fn info_matrix_matches_loop_oracle() {
        let vs = [v(&[0.3, -1.2]), v(&[2.0, 0.7]), v(&[-0.4, 0.9])];
        let lam = [0.2, 0.5, 0.3];
        let w = [1.5, 0.4, 2.2];
        let a = info_matrix(&vs, &lam, &w).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for t in 0..3 {
                    s += lam[t] * vs[t][i] * vs[t][j] / w[t];
                }
                assert!((a[(i, j)] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn info_matrix_rejects_mismatch() {
        let vs = [v(&[1.0, 0.0]), v(&[0.0, 1.0, 2.0])];
        assert!(matches!(
            info_matrix(&vs, &[0.5, 0.5], &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            info_matrix(&vs[..1], &[0.5, 0.5], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quad_form_examples() {
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((quad_form_inv(&eye, &v(&[3.0, 4.0])).unwrap() - 25.0).abs() < 1e-12);
        let a = DMatrix::from_diagonal(&v(&[2.0, 5.0]));
        assert!((quad_form_inv(&a, &v(&[1.0, 1.0])).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn quad_form_matches_explicit_inverse() {
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.5, 0.3, 2.0, 0.1, -0.7, 0.4, 1.5]);
        let a = &b * b.transpose() + DMatrix::identity(3, 3) * 0.1;
        let x = v(&[0.4, -1.3, 2.2]);
        let inv = a.clone().try_inverse().unwrap();
        let oracle = (x.transpose() * inv * &x)[(0, 0)];
        let got = quad_form_inv(&a, &x).unwrap();
        assert!((got - oracle).abs() <= 1e-9 * oracle.abs());
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]) * 0.0;
        match quad_form_inv(&a, &v(&[1.0, 0.0])) {
            Err(Error::SingularInformation { pivot }) => assert!(pivot <= 0.0),
            other => panic!("expected singular error, got {other:?}"),
        }
        let neg = DMatrix::from_diagonal(&v(&[1.0, -1.0]));
        assert!(matches!(
            quad_form_inv(&neg, &v(&[1.0, 1.0])),
            Err(Error::SingularInformation { pivot }) if pivot < 0.0
        ));
    }

    #[test]
    fn ridge_rescues_rank_one_update_roundoff() {
        // Rank-deficient by exactly one direction: ridge kicks in.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = PdFactor::new(&a).unwrap();
        assert!(f.ridge() > 0.0);
    }

    #[test]
    fn greedy_subset_picks_spanning_vectors() {
        let vs = [v(&[1.0, 0.0]), v(&[2.0, 0.0]), v(&[0.0, 0.5]), v(&[1.0, 1.0])];
        let pick = greedy_spanning_subset(&vs, 5);
        assert_eq!(pick.len(), 2);
        assert_eq!(pick[0], 1);
        assert_eq!(rank(&vs), 2);
    }

    #[test]
    fn lstsq_routes_agree_on_full_rank() {
        let d = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let y = v(&[1.0, 2.0, 2.9, 0.1]);
        let a = lstsq_qr(&d, &y).unwrap();
        let b = lstsq_min_norm(&d, &y);
        let normal = (d.transpose() * &d).try_inverse().unwrap() * d.transpose() * &y;
        assert!((&a - &normal).norm() < 1e-12);
        assert!((&b - &normal).norm() < 1e-12);
    }

    #[test]
    fn lstsq_qr_detects_dependence() {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(lstsq_qr(&d, &v(&[1.0, 1.0, 1.0])).is_none());
        let mn = lstsq_min_norm(&d, &v(&[1.0, 2.0, 3.0]));
        // Minimum norm solution is proportional to (1, 2).
        assert!((mn[1] - 2.0 * mn[0]).abs() < 1e-12);
        assert!(((&d * &mn) - v(&[1.0, 2.0, 3.0])).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn info_matrix_is_linear_in_design(
            raw in proptest::collection::vec(-3.0f64..3.0, 8),
            l1 in proptest::collection::vec(0.0f64..1.0, 4),
            l2 in proptest::collection::vec(0.0f64..1.0, 4),
            w in proptest::collection::vec(0.1f64..5.0, 4),
            alpha in 0.0f64..1.0,
        ) {
            let vs: Vec<_> = raw.chunks(2).map(|c| v(c)).collect();
            let mix: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
            let lhs = info_matrix(&vs, &mix, &w).unwrap();
            let rhs = info_matrix(&vs, &l1, &w).unwrap() * alpha
                + info_matrix(&vs, &l2, &w).unwrap() * (1.0 - alpha);
            for (x, y) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
