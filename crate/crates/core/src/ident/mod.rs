//! Pure-exploration identification: best arm (BAI) and level sets (LS).

mod complexity;
mod elimination;
mod oracle;
mod wls;

pub use complexity::{psi_star, psi_star_with_tolerance, ComplexityReport};
pub use elimination::{hrage_run, hrage_tau, rage_run, rage_tau, RunConfig};
pub use oracle::{oracle_run, SigmaSource};
pub use wls::wls_estimate;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::instance::HeteroInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Identify the unique maximizer of `z' theta*` over the targets.
    BestArm,
    /// Identify `{z : z' theta* > alpha}`.
    LevelSet,
}

/// An identification problem over a validated instance.
#[derive(Debug, Clone)]
pub struct IdentTask {
    objective: Objective,
    alpha: f64,
    delta: f64,
    instance: HeteroInstance,
}

impl IdentTask {
    /// Checks that the best target is unique (BAI) or that no target sits
    /// exactly on the threshold (LS).
    pub fn new(objective: Objective, alpha: f64, delta: f64, instance: HeteroInstance) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
        }
        let task = Self {
            objective,
            alpha: if objective == Objective::BestArm { 0.0 } else { alpha },
            delta,
            instance,
        };
        if !(task.gap_delta() > 0.0) {
            return Err(Error::DegenerateGap(match objective {
                Objective::BestArm => "best target is not unique".into(),
                Objective::LevelSet => format!("a target lies on the threshold {alpha}"),
            }));
        }
        Ok(task)
    }

    pub fn best_arm(delta: f64, instance: HeteroInstance) -> Result<Self> {
        Self::new(Objective::BestArm, 0.0, delta, instance)
    }

    pub fn level_set(alpha: f64, delta: f64, instance: HeteroInstance) -> Result<Self> {
        Self::new(Objective::LevelSet, alpha, delta, instance)
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn instance(&self) -> &HeteroInstance {
        &self.instance
    }

    pub fn rewards(&self) -> Vec<f64> {
        let theta = self.instance.theta_star();
        self.instance.targets().iter().map(|z| z.dot(theta)).collect()
    }

    /// Index of the best target (first one on ties).
    pub fn best_target(&self) -> usize {
        argmax(&self.rewards())
    }

    /// Targets strictly above the threshold.
    pub fn level_set_truth(&self) -> Vec<usize> {
        self.rewards()
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > self.alpha)
            .map(|(i, _)| i)
            .collect()
    }

    /// Smallest suboptimality gap (BAI) or distance to the threshold (LS).
    pub fn gap_delta(&self) -> f64 {
        let r = self.rewards();
        match self.objective {
            Objective::BestArm => {
                let b = argmax(&r);
                r.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != b)
                    .map(|(_, v)| r[b] - v)
                    .fold(f64::INFINITY, f64::min)
            }
            Objective::LevelSet => r.iter().map(|v| (v - self.alpha).abs()).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn is_correct(&self, answer: &Answer) -> bool {
        match (self.objective, answer) {
            (Objective::BestArm, Answer::Best(i)) => *i == self.best_target(),
            (Objective::LevelSet, Answer::Set(s)) => *s == self.level_set_truth(),
            _ => false,
        }
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Unordered pairwise differences `z_j - z_i`, `i < j`.
pub(crate) fn pair_differences(vs: &[&DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(vs.len() * vs.len().saturating_sub(1) / 2);
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            out.push(vs[j] - vs[i]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Best(usize),
    /// Sorted target indices.
    Set(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// `2^-round` for elimination rounds; `None` for oracle batches.
    pub epsilon: Option<f64>,
    pub tau: f64,
    pub active: usize,
    pub pulls: usize,
    pub design_value: f64,
    /// Undecided targets after the round.
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub rounds: Vec<RoundRecord>,
    pub burn_in_pulls: usize,
    pub total_pulls: usize,
    pub answer: Answer,
    pub correct: bool,
    /// Hit the round or sample cap before the stopping rule fired.
    pub non_terminated: bool,
}

impl RunTrace {
    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }
}
