use super::Design;
use crate::error::{Error, Result};

/// Relative slack when taking ceilings, so that `N * 0.5` does not round up
/// to `N/2 + 1` after a stray ulp.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundMode {
    /// `ceil(N * lambda_x)` on the support; may overshoot `N` by at most the
    /// support size.
    Ceiling,
    /// Efficient apportionment: exactly `N` pulls.
    Efficient,
}

/// Integer pull counts obtained from a continuous design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundSchedule {
    pub counts: Vec<usize>,
    /// Realized number of pulls, `sum(counts)`.
    pub total: usize,
    /// Requested budget.
    pub budget: usize,
    pub mode: RoundMode,
}

impl RoundSchedule {
    pub fn from_counts(counts: Vec<usize>, budget: usize, mode: RoundMode) -> Self {
        let total = counts.iter().sum();
        Self {
            counts,
            total,
            budget,
            mode,
        }
    }

    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }
}

fn slack_ceil(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    (x - CEIL_SLACK * x.max(1.0)).ceil().max(0.0) as usize
}

/// Rounds `design` to an integer schedule with budget `n`.
pub fn round_design(design: &Design, n: usize, mode: RoundMode) -> Result<RoundSchedule> {
    if n == 0 {
        return Err(Error::InvalidArgument("rounding budget must be at least 1".into()));
    }
    let counts = match mode {
        RoundMode::Ceiling => ceiling(&design.weights, n as f64),
        RoundMode::Efficient => efficient(&design.weights, n),
    };
    Ok(RoundSchedule::from_counts(counts, n, mode))
}

/// Ceiling rounding with a real-valued budget `tau`, as used for per-round
/// sample sizes. The recorded budget is `ceil(tau)`.
pub fn round_weights(weights: &[f64], tau: f64) -> RoundSchedule {
    let tau = tau.max(0.0);
    RoundSchedule::from_counts(ceiling(weights, tau), slack_ceil(tau), RoundMode::Ceiling)
}

fn ceiling(weights: &[f64], n: f64) -> Vec<usize> {
    weights
        .iter()
        .map(|&w| if w > 0.0 { slack_ceil(n * w).max(1) } else { 0 })
        .collect()
}

/// Pukelsheim's efficient apportionment: start from `ceil((N - p/2) lambda)`
/// on the support of size `p` and fix the total by discrepancy steps.
fn efficient(weights: &[f64], n: usize) -> Vec<usize> {
    let p = weights.iter().filter(|w| **w > 0.0).count();
    let nu = n as f64 - p as f64 / 2.0;
    let mut counts: Vec<usize> = weights
        .iter()
        .map(|&w| if w > 0.0 { slack_ceil(nu * w) } else { 0 })
        .collect();
    let mut total: usize = counts.iter().sum();
    while total < n {
        let mut best = None;
        let mut best_ratio = f64::INFINITY;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                let r = counts[i] as f64 / w;
                if r < best_ratio {
                    best_ratio = r;
                    best = Some(i);
                }
            }
        }
        let Some(i) = best else { break };
        counts[i] += 1;
        total += 1;
    }
    while total > n {
        let mut best = None;
        let mut best_ratio = f64::NEG_INFINITY;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 && counts[i] > 0 {
                let r = (counts[i] - 1) as f64 / w;
                if r > best_ratio {
                    best_ratio = r;
                    best = Some(i);
                }
            }
        }
        let Some(i) = best else { break };
        counts[i] -= 1;
        total -= 1;
    }
    counts
}
