//! External branches: hypergeometric thinning of the singleton count along a
//! block-counting chain, branch-length functionals and the `Π` products.
//!
//! Given the chain, the number `H_k` of singletons swallowed by the k-th
//! merger is `Hyp(X_{k−1}, Y_{k−1}, U_k)`: `U_k` of the `X_{k−1}` blocks are
//! picked uniformly and `Y_{k−1}` of those blocks are singletons.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainTrajectory};
use crate::rates::RateCache;
use crate::special::ln_binomial;
use crate::{Error, Result};

/// Draw counts up to this size are sampled item by item.
const SEQUENTIAL_MAX_DRAWS: u64 = 16;

/// Exact draw from `Hyp(population, marked, draws)`: the number of marked
/// items among `draws` taken without replacement from `population` items of
/// which `marked` are marked.
pub fn sample_hypergeometric<R: Rng + ?Sized>(
    population: u64,
    marked: u64,
    draws: u64,
    rng: &mut R,
) -> Result<u64> {
    if marked > population || draws > population {
        return Err(Error::InvalidHypergeometric {
            population,
            marked,
            draws,
        });
    }
    Ok(hypergeometric_unchecked(population, marked, draws, rng))
}

fn hypergeometric_unchecked<R: Rng + ?Sized>(
    population: u64,
    marked: u64,
    draws: u64,
    rng: &mut R,
) -> u64 {
    if draws == 0 || marked == 0 {
        return 0;
    }
    if marked == population {
        return draws;
    }
    if draws == population {
        return marked;
    }
    // Reflect into draws ≤ N/2 and marked ≤ N/2.
    if 2 * draws > population {
        return marked - hypergeometric_unchecked(population, marked, population - draws, rng);
    }
    if 2 * marked > population {
        return draws - hypergeometric_unchecked(population, population - marked, draws, rng);
    }
    if draws <= SEQUENTIAL_MAX_DRAWS {
        sequential_draws(population, marked, draws, rng)
    } else {
        inverse_from_mode(population, marked, draws, rng)
    }
}

/// Urn simulation, one integer-uniform draw per item.
fn sequential_draws<R: Rng + ?Sized>(population: u64, marked: u64, draws: u64, rng: &mut R) -> u64 {
    let mut left = population;
    let mut marked_left = marked;
    let mut hits = 0;
    for _ in 0..draws {
        if rng.random_range(0..left) < marked_left {
            hits += 1;
            marked_left -= 1;
            if marked_left == 0 {
                break;
            }
        }
        left -= 1;
    }
    hits
}

/// Chop-down inverse transform starting at the mode and alternating
/// outward, with the pmf stepped by its ratio recurrence.
fn inverse_from_mode<R: Rng + ?Sized>(
    population: u64,
    marked: u64,
    draws: u64,
    rng: &mut R,
) -> u64 {
    let (n, m, d) = (population as f64, marked as f64, draws as f64);
    let lo = draws.saturating_sub(population - marked);
    let hi = draws.min(marked);
    let mode = (((d + 1.0) * (m + 1.0) / (n + 2.0)).floor() as u64).clamp(lo, hi);
    let p_mode = (ln_binomial(marked, mode) + ln_binomial(population - marked, draws - mode)
        - ln_binomial(population, draws))
    .exp();
    // P(h + 1) / P(h)
    let up = |h: f64| (m - h) * (d - h) / ((h + 1.0) * (n - m - d + h + 1.0));
    loop {
        let mut u: f64 = rng.random();
        u -= p_mode;
        if u < 0.0 {
            return mode;
        }
        let (mut below, mut p_below) = (mode, p_mode);
        let (mut above, mut p_above) = (mode, p_mode);
        while below > lo || above < hi {
            if below > lo {
                below -= 1;
                p_below /= up(below as f64);
                u -= p_below;
                if u < 0.0 {
                    return below;
                }
            }
            if above < hi {
                p_above *= up(above as f64);
                above += 1;
                u -= p_above;
                if u < 0.0 {
                    return above;
                }
            }
        }
        // Rounding left a sliver of mass unassigned; redraw.
    }
}

/// Singleton counts along a chain plus the resulting branch lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalTrajectory {
    /// `Y_0 ..= Y_τ`.
    pub y: Vec<u64>,
    /// `H_1 ..= H_τ`.
    pub h: Vec<u64>,
    /// ℓ_n.
    pub external_length: f64,
    /// L_n.
    pub total_length: f64,
}

pub fn thin_external<R: Rng + ?Sized>(chain: &ChainTrajectory, rng: &mut R) -> ExternalTrajectory {
    let tau = chain.tau();
    let mut y = Vec::with_capacity(tau + 1);
    let mut h = Vec::with_capacity(tau);
    let mut singletons = chain.n;
    y.push(singletons);
    for k in 1..=tau {
        let absorbed = hypergeometric_unchecked(chain.x[k - 1], singletons, chain.u[k - 1], rng);
        singletons -= absorbed;
        h.push(absorbed);
        y.push(singletons);
    }
    let external_length = weighted_sum(&y, &chain.dt);
    ExternalTrajectory {
        y,
        h,
        external_length,
        total_length: chain.total_length(),
    }
}

fn weighted_sum(counts: &[u64], dt: &[f64]) -> f64 {
    counts
        .iter()
        .zip(dt)
        .fold(0.0, |acc, (&c, &d)| acc + c as f64 * d)
}

/// `(L_n, ℓ_n)` recomputed from a chain and its thinning.
pub fn branch_lengths(chain: &ChainTrajectory, ext: &ExternalTrajectory) -> Result<(f64, f64)> {
    let tau = chain.tau();
    if ext.y.len() != tau + 1 || ext.h.len() != tau || chain.dt.len() != tau {
        return Err(Error::TrajectoryMismatch(format!(
            "chain has tau = {tau}, external trajectory has {} counts",
            ext.y.len()
        )));
    }
    if ext.y[0] != chain.n {
        return Err(Error::TrajectoryMismatch(format!(
            "Y_0 = {} but n = {}",
            ext.y[0], chain.n
        )));
    }
    Ok((chain.total_length(), weighted_sum(&ext.y, &chain.dt)))
}

/// `Π_j^k = ∏_{i=j+1}^{k} (1 − 1/X_i)` for `0 ≤ j ≤ k ≤ τ − 1`.
pub fn pi_product(chain: &ChainTrajectory, j: usize, k: usize) -> Result<f64> {
    let tau = chain.tau();
    if j > k || k + 1 > tau {
        return Err(Error::InvalidProductRange { j, k, tau });
    }
    let ln: f64 = chain.x[j + 1..=k]
        .iter()
        .map(|&x| (-1.0 / x as f64).ln_1p())
        .sum();
    Ok(ln.exp())
}

/// `E[Y_k | X] = X_k Π_0^k` for `k = 0 .. τ`, in O(τ).
pub fn conditional_expected_externals(chain: &ChainTrajectory) -> Vec<f64> {
    let tau = chain.tau();
    let mut out = Vec::with_capacity(tau);
    let mut ln_pi = 0.0;
    for k in 0..tau {
        if k > 0 {
            ln_pi += (-1.0 / chain.x[k] as f64).ln_1p();
        }
        out.push(chain.x[k] as f64 * ln_pi.exp());
    }
    out
}

/// `max_{1≤j≤τ} |Y_{τ−j}/n − (j/τ)^α|`; zero for τ = 0.
pub fn external_count_deviation(chain: &ChainTrajectory, ext: &ExternalTrajectory) -> f64 {
    let tau = chain.tau();
    let n = chain.n as f64;
    let a = chain.alpha.get();
    (1..=tau)
        .map(|j| (ext.y[tau - j] as f64 / n - (j as f64 / tau as f64).powf(a)).abs())
        .fold(0.0, f64::max)
}

/// Per-replicate totals, without stored sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub n: u64,
    pub tau: u64,
    pub total_length: f64,
    pub external_length: f64,
}

/// Chain and thinning in a single pass, O(1) memory.
///
/// Consumes `chain_rng` exactly as [`chain::simulate_chain_with`] and
/// `thin_rng` exactly as [`thin_external`], so both routes agree draw for
/// draw.
pub fn simulate_summary<R1, R2>(
    n: u64,
    cache: &RateCache,
    chain_rng: &mut R1,
    thin_rng: &mut R2,
) -> Result<ReplicateSummary>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let mut b = n;
    let mut singletons = n;
    let mut tau = 0;
    let mut total_length = 0.0;
    let mut external_length = 0.0;
    while b >= 2 {
        let (dt, k) = chain::step(cache, b, chain_rng);
        total_length += b as f64 * dt;
        external_length += singletons as f64 * dt;
        singletons -= hypergeometric_unchecked(b, singletons, k, thin_rng);
        b = b - k + 1;
        tau += 1;
    }
    Ok(ReplicateSummary {
        n,
        tau,
        total_length,
        external_length,
    })
}
