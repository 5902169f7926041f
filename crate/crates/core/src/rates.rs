//! Merger rates of the Beta(2 − α, α)-coalescent.
//!
//! With `b` blocks present, any particular `k` of them merge at rate
//!
//! ```text
//! λ_{b,k} = ∫ p^{k−2} (1 − p)^{b−k} Λ(dp) = B(k − α, b − k + α) / B(2 − α, α)
//! ```
//!
//! and some merger happens at total rate `λ_b = Σ_k C(b,k) λ_{b,k}`. The sum
//! telescopes: `λ_{b+1} − λ_b = Γ(b + α − 1) / (Γ(b) Γ(α))`, which gives the
//! closed form
//!
//! ```text
//! λ_b = Γ(b − 1 + α) / (α Γ(α) Γ(b − 1))
//! ```
//!
//! used on the hot path. [`total_rate_by_summation`] keeps the term-by-term
//! route as an independent cross-check.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::special::{gamma, ln_beta, ln_binomial, ln_gamma_ratio};
use crate::{Error, Result};

/// Coalescent parameter α, restricted to the open interval (1, 2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 1.0 && alpha < 2.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// γ = 1 / (α − 1), the mean block-count decrement per merger in the
    /// large-`n` limit.
    #[inline]
    pub fn gamma(self) -> f64 {
        1.0 / (self.0 - 1.0)
    }
}

impl TryFrom<f64> for AlphaParam {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<AlphaParam> for f64 {
    fn from(a: AlphaParam) -> f64 {
        a.0
    }
}

impl std::fmt::Display for AlphaParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn check_blocks(b: u64) -> Result<()> {
    if b < 2 {
        Err(Error::TooFewBlocks(b))
    } else {
        Ok(())
    }
}

/// `ln λ_{b,k}`.
pub fn ln_lambda_bk(b: u64, k: u64, alpha: AlphaParam) -> Result<f64> {
    check_blocks(b)?;
    if k < 2 || k > b {
        return Err(Error::InvalidMergerSize { b, k });
    }
    let a = alpha.get();
    let (b, k) = (b as f64, k as f64);
    Ok(ln_beta(k - a, b - k + a) - ln_beta(2.0 - a, a))
}

/// Rate at which one specific set of `k` blocks out of `b` merges.
pub fn lambda_bk(b: u64, k: u64, alpha: AlphaParam) -> Result<f64> {
    ln_lambda_bk(b, k, alpha).map(f64::exp)
}

/// `C(b,k+1) λ_{b,k+1} / (C(b,k) λ_{b,k})`.
#[inline]
fn weight_ratio(b: f64, k: f64, a: f64) -> f64 {
    (b - k) * (k - a) / ((k + 1.0) * (b - k - 1.0 + a))
}

/// `ln λ_b` from the closed form.
fn ln_total_rate(b: u64, a: f64) -> f64 {
    ln_gamma_ratio((b - 1) as f64, a) - (a * gamma(a)).ln()
}

/// `C(b,2) λ_{b,2} = b (b − 1) Γ(b − 2 + α) / (2 Γ(b) Γ(α))`.
fn ln_pair_weight(b: u64, a: f64) -> f64 {
    let bf = b as f64;
    (bf * (bf - 1.0) / 2.0).ln() + ln_gamma_ratio(bf, a - 2.0) - gamma(a).ln()
}

/// Total merger rate `λ_b` among `b` blocks.
pub fn total_rate(b: u64, alpha: AlphaParam) -> Result<f64> {
    check_blocks(b)?;
    Ok(ln_total_rate(b, alpha.get()).exp())
}

/// `λ_b` accumulated term by term, `t_2 = C(b,2) λ_{b,2}` followed by the
/// ratio recurrence. O(b); meant for cross-checking [`total_rate`].
pub fn total_rate_by_summation(b: u64, alpha: AlphaParam) -> Result<f64> {
    check_blocks(b)?;
    let a = alpha.get();
    let bf = b as f64;
    let mut term = ln_pair_weight(b, a).exp();
    // Terms shrink with k, so sum smallest-first for accuracy.
    let mut terms = Vec::with_capacity(b as usize - 1);
    for k in 2..=b {
        terms.push(term);
        term *= weight_ratio(bf, k as f64, a);
    }
    Ok(terms.iter().rev().sum())
}

/// Leading-order rate `m^α / (α Γ(α))`.
pub fn asymptotic_rate(m: u64, alpha: AlphaParam) -> Result<f64> {
    check_blocks(m)?;
    let a = alpha.get();
    Ok((m as f64).powf(a) / (a * gamma(a)))
}

/// Full table of merger rates for a fixed block count.
///
/// Per-subset rates are kept in log space: for `b` in the thousands
/// `λ_{b,k}` underflows long before `k` reaches `b`.
#[derive(Debug, Clone, Serialize)]
pub struct MergerRateTable {
    pub b: u64,
    pub alpha: AlphaParam,
    /// `ln λ_{b,k}` at index `k − 2`.
    pub ln_per_subset_rates: Vec<f64>,
    /// `C(b,k) λ_{b,k}` at index `k − 2`.
    pub binom_weights: Vec<f64>,
    pub total_rate: f64,
    /// Merger-size probabilities at index `k − 2`.
    pub size_pmf: Vec<f64>,
}

impl MergerRateTable {
    pub fn new(b: u64, alpha: AlphaParam) -> Result<Self> {
        check_blocks(b)?;
        let mut ln_rates = Vec::with_capacity(b as usize - 1);
        let mut weights = Vec::with_capacity(b as usize - 1);
        for k in 2..=b {
            let ln_rate = ln_lambda_bk(b, k, alpha)?;
            ln_rates.push(ln_rate);
            weights.push((ln_binomial(b, k) + ln_rate).exp());
        }
        let total: f64 = weights.iter().rev().sum();
        let size_pmf = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            b,
            alpha,
            ln_per_subset_rates: ln_rates,
            binom_weights: weights,
            total_rate: total,
            size_pmf,
        })
    }

    pub fn per_subset_rate(&self, k: u64) -> f64 {
        self.ln_per_subset_rates[(k - 2) as usize].exp()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.size_pmf[(k - 2) as usize]
    }

    /// Plain inverse-CDF draw over the stored pmf. O(k).
    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for (i, p) in self.size_pmf.iter().enumerate() {
            cum += p;
            if u < cum {
                return i as u64 + 2;
            }
        }
        self.b
    }
}

/// Per-α memo of `(λ_b, P(merger size = 2 | b))` for `b ≤ capacity`.
///
/// Read-only after construction, so one instance can be shared by every
/// worker of a replicate batch. Block counts above the capacity are
/// evaluated on the fly.
#[derive(Debug, Clone)]
pub struct RateCache {
    alpha: AlphaParam,
    total: Vec<f64>,
    pair_share: Vec<f64>,
}

impl RateCache {
    pub fn new(alpha: AlphaParam, capacity: u64) -> Self {
        let a = alpha.get();
        let len = capacity.max(2) as usize + 1;
        let mut total = vec![f64::NAN; len];
        let mut pair_share = vec![f64::NAN; len];
        for b in 2..len {
            let (t, p) = Self::evaluate(b as u64, a);
            total[b] = t;
            pair_share[b] = p;
        }
        Self {
            alpha,
            total,
            pair_share,
        }
    }

    fn evaluate(b: u64, a: f64) -> (f64, f64) {
        let ln_total = ln_total_rate(b, a);
        (ln_total.exp(), (ln_pair_weight(b, a) - ln_total).exp())
    }

    pub fn alpha(&self) -> AlphaParam {
        self.alpha
    }

    pub fn capacity(&self) -> u64 {
        self.total.len() as u64 - 1
    }

    /// `(λ_b, P(k = 2))`; `b ≥ 2` is the caller's responsibility.
    #[inline]
    fn lookup(&self, b: u64) -> (f64, f64) {
        match self.total.get(b as usize) {
            Some(&t) => (t, self.pair_share[b as usize]),
            None => Self::evaluate(b, self.alpha.get()),
        }
    }

    #[inline]
    pub fn total_rate(&self, b: u64) -> f64 {
        self.lookup(b).0
    }

    /// Draw a merger size for `b ≥ 2` blocks by inverse transform, walking
    /// `k = 2, 3, …` with the weight-ratio recurrence. The pmf is heavy at
    /// small `k`, so the expected walk length stays bounded as `b` grows.
    #[inline]
    pub fn sample_merger_size<R: Rng + ?Sized>(&self, b: u64, rng: &mut R) -> u64 {
        debug_assert!(b >= 2);
        if b == 2 {
            return 2;
        }
        let a = self.alpha.get();
        let bf = b as f64;
        let u: f64 = rng.random();
        let mut p = self.lookup(b).1;
        let mut cum = p;
        let mut k = 2u64;
        while u >= cum && k < b {
            p *= weight_ratio(bf, k as f64, a);
            k += 1;
            cum += p;
        }
        k
    }
}

/// One merger-size draw; builds no cache.
pub fn sample_merger_size<R: Rng + ?Sized>(b: u64, alpha: AlphaParam, rng: &mut R) -> Result<u64> {
    check_blocks(b)?;
    let cache = RateCache::new(alpha, 0);
    Ok(cache.sample_merger_size(b, rng))
}
