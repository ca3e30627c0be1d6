//! Seeded simulator of `y = x' theta* + eta`, `eta ~ N(0, x' Sigma* x)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::design::RoundSchedule;
use crate::error::{Error, Result};
use crate::instance::{quad, HeteroInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    Gaussian,
    /// `eta = 0`.
    Silent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub arm: usize,
    pub y: f64,
}

/// Per-arm running statistics of a batch of pulls (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub count: usize,
    pub sum: f64,
    mean: f64,
    m2: f64,
}

impl Tally {
    pub fn push(&mut self, y: f64) {
        self.count += 1;
        self.sum += y;
        let delta = y - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (y - self.mean);
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// `sum (y - ybar)^2 / n`.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.mean += delta * other.count as f64 / n;
        self.count += other.count;
        self.sum += other.sum;
    }
}

/// One entry of the optional call log: `(stream, arm, y)`.
pub type LoggedCall = (u64, usize, f64);

/// Simulated bandit environment.
///
/// Draws come from ChaCha8 keyed by the seed. Each stream id selects a
/// disjoint keystream, so stages that call [`Environment::begin_stream`]
/// never share random numbers.
#[derive(Debug, Clone)]
pub struct Environment {
    arms: Vec<DVector<f64>>,
    means: Vec<f64>,
    sds: Vec<f64>,
    mode: NoiseMode,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    pull_count: u64,
    log: Option<Vec<LoggedCall>>,
}

impl Environment {
    pub fn new(inst: &HeteroInstance, seed: u64, mode: NoiseMode) -> Self {
        Self::from_model(inst.arms().to_vec(), inst.theta_star(), inst.sigma_star(), seed, mode)
            .expect("validated instance")
    }

    /// Builds an environment from an unvalidated response model; a
    /// degenerate (even zero) noise matrix is allowed here.
    pub fn from_model(
        arms: Vec<DVector<f64>>,
        theta: &DVector<f64>,
        sigma: &DMatrix<f64>,
        seed: u64,
        mode: NoiseMode,
    ) -> Result<Self> {
        let d = theta.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: sigma.nrows(),
                context: "environment noise matrix",
            });
        }
        for x in &arms {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                    context: "environment arm",
                });
            }
        }
        let means = arms.iter().map(|x| x.dot(theta)).collect();
        let sds = arms.iter().map(|x| quad(x, sigma).max(0.0).sqrt()).collect();
        Ok(Self {
            arms,
            means,
            sds,
            mode,
            seed,
            stream: 0,
            rng: stream_rng(seed, 0),
            pull_count: 0,
            log: None,
        })
    }

    /// Records every draw as `(stream, arm, y)`.
    pub fn with_call_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn call_log(&self) -> Option<&[LoggedCall]> {
        self.log.as_deref()
    }

    pub fn arms(&self) -> &[DVector<f64>] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Total number of draws since construction.
    pub fn pull_count(&self) -> u64 {
        self.pull_count
    }

    /// Switches to the next unused stream and returns its id.
    pub fn begin_stream(&mut self) -> u64 {
        self.stream += 1;
        self.rng = stream_rng(self.seed, self.stream);
        self.stream
    }

    fn check(&self, arm: usize) -> Result<()> {
        if arm >= self.arms.len() {
            return Err(Error::InvalidArm {
                index: arm,
                count: self.arms.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn draw(&mut self, arm: usize) -> f64 {
        self.pull_count += 1;
        let y = match self.mode {
            NoiseMode::Silent => self.means[arm],
            NoiseMode::Gaussian => {
                let z: f64 = self.rng.sample(StandardNormal);
                self.means[arm] + self.sds[arm] * z
            }
        };
        if let Some(log) = self.log.as_mut() {
            log.push((self.stream, arm, y));
        }
        y
    }

    pub fn sample(&mut self, arm: usize) -> Result<f64> {
        self.check(arm)?;
        Ok(self.draw(arm))
    }

    /// Pulls every arm `counts[arm]` times in increasing arm order.
    pub fn sample_schedule(&mut self, schedule: &RoundSchedule) -> Result<Vec<Observation>> {
        self.check_schedule(schedule)?;
        let mut out = Vec::with_capacity(schedule.total);
        for (arm, &c) in schedule.counts.iter().enumerate() {
            for _ in 0..c {
                let y = self.draw(arm);
                out.push(Observation { arm, y });
            }
        }
        Ok(out)
    }

    /// Same draws as [`Environment::sample_schedule`] but only per-arm
    /// statistics are kept.
    pub fn pull_tallies(&mut self, schedule: &RoundSchedule) -> Result<Vec<Tally>> {
        self.check_schedule(schedule)?;
        let mut out = vec![Tally::default(); schedule.counts.len()];
        for (arm, &c) in schedule.counts.iter().enumerate() {
            for _ in 0..c {
                let y = self.draw(arm);
                out[arm].push(y);
            }
        }
        Ok(out)
    }

    fn check_schedule(&self, schedule: &RoundSchedule) -> Result<()> {
        if schedule.counts.len() != self.arms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.arms.len(),
                found: schedule.counts.len(),
                context: "schedule vs arms",
            });
        }
        Ok(())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of replication `rep` derived from a base seed (splitmix64 finalizer).
pub fn replication_seed(base: u64, rep: u64) -> u64 {
    let mut z = base.wrapping_add(rep.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::RoundMode;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn env(mode: NoiseMode, seed: u64) -> Environment {
        let arms = vec![v(&[1.0, 0.0]), v(&[0.0, 2.0])];
        let sigma = DMatrix::from_diagonal(&v(&[0.5, 1.0]));
        Environment::from_model(arms, &v(&[1.0, -0.5]), &sigma, seed, mode).unwrap()
    }

    #[test]
    fn silent_mode_returns_mean() {
        let mut e = env(NoiseMode::Silent, 1);
        assert_eq!(e.sample(0).unwrap(), 1.0);
        assert_eq!(e.sample(1).unwrap(), -1.0);
        assert_eq!(e.pull_count(), 2);
    }

    #[test]
    fn zero_noise_matrix_is_exact() {
        let arms = vec![v(&[1.0, 0.0]), v(&[0.3, 0.7])];
        let theta = v(&[2.0, 1.0]);
        let mut e =
            Environment::from_model(arms, &theta, &DMatrix::zeros(2, 2), 4, NoiseMode::Gaussian).unwrap();
        for _ in 0..10 {
            assert_eq!(e.sample(1).unwrap(), 0.3 * 2.0 + 0.7);
        }
    }

    #[test]
    fn invalid_arm_is_rejected() {
        let mut e = env(NoiseMode::Gaussian, 1);
        assert!(matches!(e.sample(2), Err(Error::InvalidArm { index: 2, count: 2 })));
        assert_eq!(e.pull_count(), 0);
    }

    #[test]
    fn gaussian_moments() {
        // arm 1 has variance 4 * 1.0 = 4, mean -1.
        let mut e = env(NoiseMode::Gaussian, 99);
        let n = 1_000_000;
        let mut t = Tally::default();
        for _ in 0..n {
            t.push(e.sample(1).unwrap());
        }
        assert!((t.mean() + 1.0).abs() < 0.02);
        assert!((t.variance() / 4.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn equal_seeds_equal_outputs() {
        let mut a = env(NoiseMode::Gaussian, 7);
        let mut b = env(NoiseMode::Gaussian, 7);
        for i in 0..100 {
            assert_eq!(a.sample(i % 2).unwrap().to_bits(), b.sample(i % 2).unwrap().to_bits());
        }
        let mut c = env(NoiseMode::Gaussian, 8);
        assert_ne!(a.sample(0).unwrap(), c.sample(0).unwrap());
    }

    #[test]
    fn streams_do_not_overlap() {
        let mut a = env(NoiseMode::Gaussian, 3);
        let first: Vec<f64> = (0..1000).map(|_| a.sample(0).unwrap()).collect();
        assert_eq!(a.begin_stream(), 1);
        let second: Vec<f64> = (0..1000).map(|_| a.sample(0).unwrap()).collect();
        for y in &second {
            assert!(!first.contains(y));
        }
        // Re-entering the same stream id from scratch reproduces it.
        let mut b = env(NoiseMode::Gaussian, 3);
        b.begin_stream();
        assert_eq!(b.sample(0).unwrap(), second[0]);
    }

    #[test]
    fn schedule_and_tallies_agree() {
        let sched = RoundSchedule::from_counts(vec![3, 5], 8, RoundMode::Ceiling);
        let mut a = env(NoiseMode::Gaussian, 12).with_call_log();
        let obs = a.sample_schedule(&sched).unwrap();
        assert_eq!(obs.len(), 8);
        assert_eq!(a.pull_count(), 8);
        assert_eq!(a.call_log().unwrap().len(), 8);
        assert!(obs[..3].iter().all(|o| o.arm == 0));
        let mut b = env(NoiseMode::Gaussian, 12);
        let t = b.pull_tallies(&sched).unwrap();
        assert_eq!(b.pull_count(), 8);
        let s0: f64 = obs[..3].iter().map(|o| o.y).sum();
        assert_eq!(t[0].count, 3);
        assert!((t[0].sum - s0).abs() < 1e-12);
    }

    #[test]
    fn tally_merge_matches_single_pass() {
        let ys = [0.3, -1.2, 4.0, 2.2, 0.0, 7.5];
        let mut all = Tally::default();
        let (mut a, mut b) = (Tally::default(), Tally::default());
        for (i, y) in ys.iter().enumerate() {
            all.push(*y);
            if i < 2 { a.push(*y) } else { b.push(*y) }
        }
        a.merge(&b);
        assert_eq!(a.count, all.count);
        assert!((a.variance() - all.variance()).abs() < 1e-12);
    }

    #[test]
    fn replication_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| replication_seed(7, r)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
