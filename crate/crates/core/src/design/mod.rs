//! Weighted G-optimal / XY-allocation designs over a finite vector set.
//!
//! For sample vectors `x` with noise variances `w_x` and a design `lambda` on
//! the simplex, the information matrix is `A(lambda) = sum lambda_x x x' / w_x`.
//! The solver minimizes `q(lambda) = max_v ||v||^2_{A(lambda)^{-1}}` over the
//! evaluation vectors `v`.

mod rounding;
mod solver;

pub use rounding::{round_design, round_weights, RoundMode, RoundSchedule};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, PdFactor};

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_ITERS: usize = 20_000;
/// Design weights below this are dropped before a design is returned.
pub const PRUNE_THRESHOLD: f64 = 1e-7;

/// A validated minimax design problem.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    sample_vectors: Vec<DVector<f64>>,
    eval_vectors: Vec<DVector<f64>>,
    variances: Vec<f64>,
    tolerance: f64,
    max_iters: usize,
    /// Orthonormal basis of span(samples) when it is a proper subspace.
    basis: Option<DMatrix<f64>>,
    rank: usize,
}

impl DesignProblem {
    /// Unweighted problem. Fails with `SpanViolation` if some evaluation
    /// vector is not in the span of the sample vectors.
    pub fn new(sample_vectors: Vec<DVector<f64>>, eval_vectors: Vec<DVector<f64>>) -> Result<Self> {
        let n = sample_vectors.len();
        Self::weighted(sample_vectors, eval_vectors, vec![1.0; n])
    }

    /// G-optimal problem: every sample vector is also an evaluation vector.
    pub fn self_evaluating(vectors: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(vectors.clone(), vectors)
    }

    /// Problem with per-sample noise variances `w_x` (the information matrix
    /// uses `1 / w_x`).
    pub fn weighted(
        sample_vectors: Vec<DVector<f64>>,
        eval_vectors: Vec<DVector<f64>>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        if sample_vectors.is_empty() {
            return Err(Error::InvalidArgument("design needs at least one sample vector".into()));
        }
        if eval_vectors.is_empty() {
            return Err(Error::InvalidArgument("design needs at least one evaluation vector".into()));
        }
        if variances.len() != sample_vectors.len() {
            return Err(Error::DimensionMismatch {
                expected: sample_vectors.len(),
                found: variances.len(),
                context: "variances vs sample vectors",
            });
        }
        if let Some(w) = variances.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("variance must be positive and finite, got {w}")));
        }
        let k = sample_vectors[0].len();
        for v in sample_vectors.iter().chain(&eval_vectors) {
            if v.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: v.len(),
                    context: "design vector length",
                });
            }
        }
        let basis = linalg::span_basis(&sample_vectors);
        let rank = basis.ncols();
        if rank == 0 {
            return Err(Error::InvalidArgument("sample vectors are all zero".into()));
        }
        for (index, v) in eval_vectors.iter().enumerate() {
            let proj = &basis * (basis.transpose() * v);
            let residual = (v - proj).norm();
            if residual > 1e-8 * (1.0 + v.norm()) {
                return Err(Error::SpanViolation { index, residual });
            }
        }
        Ok(Self {
            sample_vectors,
            eval_vectors,
            variances,
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
            basis: (rank < k).then_some(basis),
            rank,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn sample_vectors(&self) -> &[DVector<f64>] {
        &self.sample_vectors
    }

    pub fn eval_vectors(&self) -> &[DVector<f64>] {
        &self.eval_vectors
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    /// Dimension of the span of the sample vectors.
    pub fn rank(&self) -> usize {
        self.rank
    }

    fn reduce(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(q) => q.transpose() * v,
            None => v.clone(),
        }
    }

    /// Sample vectors in span coordinates, scaled by `1 / sqrt(w)`.
    fn reduced_samples(&self) -> Vec<DVector<f64>> {
        self.sample_vectors
            .iter()
            .zip(&self.variances)
            .map(|(x, w)| self.reduce(x) / w.sqrt())
            .collect()
    }

    fn reduced_evals(&self) -> Vec<DVector<f64>> {
        self.eval_vectors.iter().map(|v| self.reduce(v)).collect()
    }

    fn is_self_evaluating(&self) -> bool {
        self.eval_vectors.len() == self.sample_vectors.len()
            && self.eval_vectors.iter().zip(&self.sample_vectors).all(|(a, b)| a == b)
            && self.variances.iter().all(|w| *w == self.variances[0])
    }

    /// `max_v ||v||^2_{A^{-1}}` for `A = sum mass_x x x' / w_x`. The masses
    /// may be design weights or integer pull counts.
    pub fn value_at(&self, masses: &[f64]) -> Result<f64> {
        if masses.len() != self.sample_vectors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sample_vectors.len(),
                found: masses.len(),
                context: "design masses vs sample vectors",
            });
        }
        let u = self.reduced_samples();
        let ones = vec![1.0; u.len()];
        let a = linalg::info_matrix(&u, masses, &ones)?;
        let f = PdFactor::new(&a)?;
        Ok(self
            .reduced_evals()
            .iter()
            .map(|e| f.quad_form(e))
            .fold(0.0, f64::max))
    }

    /// Design value attained by an integer pull schedule.
    pub fn schedule_value(&self, schedule: &RoundSchedule) -> Result<f64> {
        let masses: Vec<f64> = schedule.counts.iter().map(|&c| c as f64).collect();
        self.value_at(&masses)
    }
}

/// A probability vector over the sample vectors of a [`DesignProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub weights: Vec<f64>,
    /// `max_v ||v||^2_{A(weights)^{-1}}`.
    pub value: f64,
    pub support_size: usize,
    /// Certified lower bound on the optimal value.
    pub lower_bound: f64,
    /// Whether `value - lower_bound <= tolerance * value` was reached.
    pub certified: bool,
    pub iterations: usize,
}

impl Design {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
    }

    /// Relative optimality gap implied by the lower bound.
    pub fn relative_gap(&self) -> f64 {
        if self.value <= 0.0 {
            return 0.0;
        }
        ((self.value - self.lower_bound) / self.value).max(0.0)
    }
}

/// Solves `min_lambda max_v ||v||^2_{A(lambda)^{-1}}`.
///
/// Deterministic: identical problems give bit-identical designs. All argmax
/// scans break ties towards the lowest index.
pub fn solve_design(problem: &DesignProblem) -> Result<Design> {
    let raw = if problem.is_self_evaluating() {
        solver::fedorov_wynn(problem)?
    } else {
        solver::smoothed_frank_wolfe(problem)?
    };
    finish(problem, raw)
}

fn finish(problem: &DesignProblem, raw: solver::RawDesign) -> Result<Design> {
    let mut weights = raw.weights;
    for w in weights.iter_mut() {
        if *w < PRUNE_THRESHOLD {
            *w = 0.0;
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let value = problem.value_at(&weights)?;
    let lower_bound = raw.lower_bound.min(value);
    let support_size = weights.iter().filter(|w| **w > 0.0).count();
    let certified = value - lower_bound <= problem.tolerance * value;
    if !certified {
        log::warn!(
            "design solver stopped after {} iterations with relative gap {:.3e}",
            raw.iterations,
            (value - lower_bound) / value
        );
    }
    Ok(Design {
        weights,
        value,
        support_size,
        lower_bound,
        certified,
        iterations: raw.iterations,
    })
}
