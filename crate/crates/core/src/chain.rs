//! The block-counting chain `X_0 = n > X_1 > … > X_τ = 1`.
//!
//! With `b ≥ 2` blocks the chain waits `W / λ_b` (`W` standard exponential)
//! and then merges `k` blocks into one, `k` drawn from the merger-size pmf.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::rates::{AlphaParam, RateCache};
use crate::{Error, Result};

/// One realization of the block-counting chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrajectory {
    pub n: u64,
    pub alpha: AlphaParam,
    /// `X_0 ..= X_τ`.
    pub x: Vec<u64>,
    /// `U_1 ..= U_τ`; `U_k` blocks collapse into one at the k-th merger.
    pub u: Vec<u64>,
    /// `T_{k+1} − T_k` for `k = 0 .. τ`.
    pub dt: Vec<f64>,
    pub seed: Option<u64>,
}

impl ChainTrajectory {
    /// Number of mergers τ_n.
    pub fn tau(&self) -> usize {
        self.u.len()
    }

    /// Total branch length `L_n = Σ X_k (T_{k+1} − T_k)`.
    pub fn total_length(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.dt)
            .fold(0.0, |acc, (&x, &dt)| acc + x as f64 * dt)
    }

    /// Check every structural invariant of the trajectory.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::TrajectoryMismatch(msg));
        let tau = self.u.len();
        if self.x.len() != tau + 1 || self.dt.len() != tau {
            return fail(format!(
                "lengths x={}, u={}, dt={}",
                self.x.len(),
                self.u.len(),
                self.dt.len()
            ));
        }
        if self.x[0] != self.n || *self.x.last().unwrap() != 1 {
            return fail(format!("chain must run from {} to 1", self.n));
        }
        for k in 1..=tau {
            let (prev, next, u) = (self.x[k - 1], self.x[k], self.u[k - 1]);
            if next >= prev || u < 2 || prev + 1 != next + u {
                return fail(format!("step {k}: X {prev} -> {next} with U = {u}"));
            }
        }
        if let Some(bad) = self.dt.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            return fail(format!("holding time {bad} = {}", self.dt[bad]));
        }
        Ok(())
    }
}

/// Draw one holding time and merger size with `b ≥ 2` blocks.
#[inline]
pub(crate) fn step<R: Rng + ?Sized>(cache: &RateCache, b: u64, rng: &mut R) -> (f64, u64) {
    let w: f64 = Exp1.sample(rng);
    let dt = w / cache.total_rate(b);
    let k = cache.sample_merger_size(b, rng);
    (dt, k)
}

/// Simulate the chain started from `n` blocks with rates from `cache`.
pub fn simulate_chain_with<R: Rng + ?Sized>(
    n: u64,
    cache: &RateCache,
    rng: &mut R,
) -> Result<ChainTrajectory> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let mut x = vec![n];
    let mut u = Vec::new();
    let mut dt = Vec::new();
    let mut b = n;
    while b >= 2 {
        let (d, k) = step(cache, b, rng);
        b = b - k + 1;
        x.push(b);
        u.push(k);
        dt.push(d);
    }
    Ok(ChainTrajectory {
        n,
        alpha: cache.alpha(),
        x,
        u,
        dt,
        seed: None,
    })
}

/// Simulate the chain started from `n` blocks.
pub fn simulate_chain<R: Rng + ?Sized>(
    n: u64,
    alpha: AlphaParam,
    rng: &mut R,
) -> Result<ChainTrajectory> {
    simulate_chain_with(n, &RateCache::new(alpha, n), rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    /// Merger index `k ≥ 1`.
    pub k: usize,
    /// `X_{k−1}`.
    pub blocks_before: u64,
    /// `U_k`.
    pub merger_size: u64,
    /// `T_k − T_{k−1}`.
    pub holding_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSummary {
    pub tau: usize,
    /// `Σ X_k Δ_k`, i.e. `L_n`.
    pub weighted_clock_sum: f64,
    pub steps: Vec<StepRecord>,
}

pub fn tau_summary(traj: &ChainTrajectory) -> TauSummary {
    let steps = (0..traj.tau())
        .map(|i| StepRecord {
            k: i + 1,
            blocks_before: traj.x[i],
            merger_size: traj.u[i],
            holding_time: traj.dt[i],
        })
        .collect();
    TauSummary {
        tau: traj.tau(),
        weighted_clock_sum: traj.total_length(),
        steps,
    }
}

/// `max_{1≤j≤τ} |X_{τ−j}/n − j/τ|`; zero for τ = 0.
pub fn block_count_deviation(traj: &ChainTrajectory) -> f64 {
    let tau = traj.tau();
    let n = traj.n as f64;
    (1..=tau)
        .map(|j| (traj.x[tau - j] as f64 / n - j as f64 / tau as f64).abs())
        .fold(0.0, f64::max)
}
