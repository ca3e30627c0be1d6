//! Iterative solvers behind [`super::solve_design`].
//!
//! Both work in span coordinates with the variances folded into the sample
//! vectors (`u_x = Q' x / sqrt(w_x)`), so `A(lambda) = sum lambda_x u_x u_x'`
//! is positive definite on the support of the initial design. The inverse is
//! carried along with Sherman-Morrison updates and refreshed periodically.

use nalgebra::{DMatrix, DVector};

use super::DesignProblem;
use crate::error::Result;
use crate::linalg::{self, PdFactor};

const REFRESH_EVERY: usize = 64;
const GOLDEN_ITERS: usize = 60;

pub(super) struct RawDesign {
    pub weights: Vec<f64>,
    pub lower_bound: f64,
    pub iterations: usize,
}

fn initial_design(u: &[DVector<f64>], rank: usize) -> Vec<f64> {
    let start = linalg::greedy_spanning_subset(u, rank);
    let mut lam = vec![0.0; u.len()];
    for &i in &start {
        lam[i] = 1.0 / start.len() as f64;
    }
    lam
}

fn inverse_information(u: &[DVector<f64>], lam: &[f64]) -> Result<DMatrix<f64>> {
    let ones = vec![1.0; u.len()];
    let a = linalg::info_matrix(u, lam, &ones)?;
    Ok(PdFactor::new(&a)?.inverse())
}

/// Applies `lambda <- (1 - gamma) lambda + gamma e_j` to the design and to
/// `A^{-1}`; `gamma` may be negative (away step).
fn rank_one_step(lam: &mut [f64], ainv: &mut DMatrix<f64>, u_j: &DVector<f64>, j: usize, gamma: f64) {
    let g = &*ainv * u_j;
    let m = u_j.dot(&g);
    let t = gamma / (1.0 - gamma);
    let scale = 1.0 / (1.0 - gamma);
    let c = t / (1.0 + t * m);
    ainv.ger(-c, &g, &g, 1.0);
    *ainv *= scale;
    for l in lam.iter_mut() {
        *l *= 1.0 - gamma;
    }
    lam[j] += gamma;
    if lam[j] < 0.0 {
        lam[j] = 0.0;
    }
}

/// Fedorov-Wynn with away steps for self-evaluating, equally weighted
/// problems. By the Kiefer-Wolfowitz equivalence the G-optimal value equals
/// the rank `r`, which serves as the certificate.
pub(super) fn fedorov_wynn(problem: &DesignProblem) -> Result<RawDesign> {
    let u = problem.reduced_samples();
    let r = problem.rank() as f64;
    // Evaluations are the raw sample vectors: ||x||^2_{A^-1} = w * ||u||^2_{A^-1}.
    let c = problem.variances()[0];
    let n = u.len();
    let mut lam = initial_design(&u, problem.rank());
    let mut ainv = inverse_information(&u, &lam)?;
    let mut dvals: Vec<f64> = u.iter().map(|x| x.dot(&(&ainv * x))).collect();
    let target = r * (1.0 + problem.tolerance());
    let mut iterations = 0;

    while iterations < problem.max_iters() {
        if iterations > 0 && iterations % REFRESH_EVERY == 0 {
            ainv = inverse_information(&u, &lam)?;
            for (dv, x) in dvals.iter_mut().zip(&u) {
                *dv = x.dot(&(&ainv * x));
            }
        }
        let (mut toward, mut dmax) = (0, f64::NEG_INFINITY);
        let (mut away, mut dmin) = (usize::MAX, f64::INFINITY);
        for i in 0..n {
            if dvals[i] > dmax {
                dmax = dvals[i];
                toward = i;
            }
            if lam[i] > 0.0 && dvals[i] < dmin {
                dmin = dvals[i];
                away = i;
            }
        }
        if dmax <= target {
            break;
        }
        iterations += 1;

        let use_away = away != usize::MAX && lam[away] < 1.0 && r - dmin > dmax - r;
        if use_away {
            let bound = -lam[away] / (1.0 - lam[away]);
            let gamma = if dmin > 1.0 {
                ((dmin - r) / (r * (dmin - 1.0))).max(bound)
            } else {
                bound
            };
            let drop = gamma <= bound;
            step_with_scores(&mut lam, &mut ainv, &mut dvals, &u, away, gamma);
            if drop {
                lam[away] = 0.0;
            }
        } else {
            let gamma = (dmax - r) / (r * (dmax - 1.0));
            step_with_scores(&mut lam, &mut ainv, &mut dvals, &u, toward, gamma);
        }
    }

    Ok(RawDesign {
        weights: lam,
        lower_bound: c * r,
        iterations,
    })
}

/// Rank-one step that also updates the leverage scores `d_i = u_i' A^-1 u_i`.
fn step_with_scores(
    lam: &mut [f64],
    ainv: &mut DMatrix<f64>,
    dvals: &mut [f64],
    u: &[DVector<f64>],
    j: usize,
    gamma: f64,
) {
    let g = &*ainv * &u[j];
    let m = u[j].dot(&g);
    let t = gamma / (1.0 - gamma);
    let c = t / (1.0 + t * m);
    let scale = 1.0 / (1.0 - gamma);
    for (dv, x) in dvals.iter_mut().zip(u) {
        let p = x.dot(&g);
        *dv = (*dv - c * p * p) * scale;
    }
    rank_one_step(lam, ainv, &u[j], j, gamma);
}

/// Frank-Wolfe with away steps on the log-sum-exp smoothing of the max.
///
/// The smoothing temperature tracks the current value so the smoothing error
/// stays at a quarter of the tolerance. Every iterate yields the lower bound
/// `2 h_mu - max_x g_x(mu)` on the optimum, where `mu` is the soft-max
/// distribution over evaluation vectors, `h_mu = sum mu_v f_v` and
/// `g_x(mu) = sum mu_v (u_x' A^-1 v)^2`.
pub(super) fn smoothed_frank_wolfe(problem: &DesignProblem) -> Result<RawDesign> {
    let u = problem.reduced_samples();
    let evals = problem.reduced_evals();
    let n = u.len();
    let r = problem.rank();
    let nv = evals.len();
    let sharpness = if nv > 1 {
        4.0 * (nv as f64).ln() / problem.tolerance()
    } else {
        1.0
    };

    let mut lam = initial_design(&u, r);
    let mut ainv = inverse_information(&u, &lam)?;
    let mut best_lam = lam.clone();
    let mut best_value = f64::INFINITY;
    let mut best_bound = 0.0f64;
    let mut iterations = 0;

    let mut a_v: Vec<DVector<f64>> = vec![DVector::zeros(r); nv];
    let mut f_v = vec![0.0; nv];
    let mut mu = vec![0.0; nv];
    let mut scores = vec![0.0; n];

    loop {
        if iterations > 0 && iterations % REFRESH_EVERY == 0 {
            ainv = inverse_information(&u, &lam)?;
        }
        for k in 0..nv {
            a_v[k] = &ainv * &evals[k];
            f_v[k] = evals[k].dot(&a_v[k]).max(0.0);
        }
        let f = f_v.iter().cloned().fold(0.0, f64::max);
        if f < best_value {
            best_value = f;
            best_lam.copy_from_slice(&lam);
        }
        if f == 0.0 {
            break;
        }
        let beta = sharpness / f;
        let mut z = 0.0;
        for k in 0..nv {
            mu[k] = (beta * (f_v[k] - f)).exp();
            z += mu[k];
        }
        let mut h = 0.0;
        let mut b = DMatrix::<f64>::zeros(r, r);
        for k in 0..nv {
            mu[k] /= z;
            h += mu[k] * f_v[k];
            if mu[k] > 1e-300 {
                b.ger(mu[k], &a_v[k], &a_v[k], 1.0);
            }
        }
        let (mut toward, mut gmax) = (0, f64::NEG_INFINITY);
        let (mut away, mut gmin) = (usize::MAX, f64::INFINITY);
        for i in 0..n {
            scores[i] = u[i].dot(&(&b * &u[i]));
            if scores[i] > gmax {
                gmax = scores[i];
                toward = i;
            }
            if lam[i] > 0.0 && scores[i] < gmin {
                gmin = scores[i];
                away = i;
            }
        }
        best_bound = best_bound.max(2.0 * h - gmax);
        if best_value - best_bound <= problem.tolerance() * best_value
            || iterations >= problem.max_iters()
        {
            break;
        }
        iterations += 1;

        let use_away = away != usize::MAX && lam[away] < 1.0 && h - gmin > gmax - h;
        let (j, lo, hi) = if use_away {
            (away, -lam[away] / (1.0 - lam[away]), 0.0)
        } else {
            (toward, 0.0, 1.0 - 1e-9)
        };
        let g = &ainv * &u[j];
        let m = u[j].dot(&g);
        let p: Vec<f64> = a_v.iter().map(|a| a.dot(&u[j])).collect();
        let smoothed = |gamma: f64| -> f64 {
            let t = gamma / (1.0 - gamma);
            let denom = 1.0 + t * m;
            if denom <= 0.0 {
                return f64::INFINITY;
            }
            let scale = 1.0 / (1.0 - gamma);
            let vals = f_v.iter().zip(&p).map(|(fv, pv)| (fv - t * pv * pv / denom) * scale);
            let top = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            if !top.is_finite() {
                return f64::INFINITY;
            }
            top + vals.map(|x| (beta * (x - top)).exp()).sum::<f64>().ln() / beta
        };
        let mut gamma = golden_section(smoothed, lo, hi);
        if use_away && gamma - lo < 1e-9 {
            gamma = lo;
        }
        if gamma == 0.0 {
            // No progress possible along either direction at this temperature.
            break;
        }
        let drop = use_away && gamma <= lo;
        rank_one_step(&mut lam, &mut ainv, &u[j], j, gamma);
        if drop {
            lam[j] = 0.0;
        }
    }

    Ok(RawDesign {
        weights: best_lam,
        lower_bound: best_bound,
        iterations,
    })
}

/// Minimizes a convex function on `[lo, hi]`; returns an endpoint when the
/// minimum sits there.
fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // Compare against the anchor of the segment (gamma = 0 means "stay").
    let f0 = f(0.0_f64.clamp(lo, hi));
    let fm = f(mid);
    if fm < f0 {
        mid
    } else {
        0.0
    }
}
