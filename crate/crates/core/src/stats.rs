//! Sample statistics used by the experiment checks.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of terms kept in the Kolmogorov series.
const KOLMOGOROV_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `sup |F_a − F_b|`.
    pub statistic: f64,
    /// Asymptotic p-value; approximate, especially for small or tied samples.
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov test.
///
/// Ties are handled by advancing both empirical CDFs past a repeated value
/// before comparing them, so discrete samples give the exact `D`. The p-value
/// uses the Kolmogorov limit law at `λ = (√m + 0.12 + 0.11/√m) D` with
/// effective size `m = n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = match a[i].total_cmp(&b[j]) {
            Ordering::Greater => b[j],
            _ => a[i],
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let m = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_survival((m + 0.12 + 0.11 / m) * d);
    Ok(KsResult {
        statistic: d,
        p_value,
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Small-λ form: P(K ≤ λ) = √(2π)/λ Σ exp(−(2j−1)² π² / (8λ²)).
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=KOLMOGOROV_TERMS)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (c * k * k).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let sum: f64 = (1..=KOLMOGOROV_TERMS)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            let jf = j as f64;
            sign * (-2.0 * jf * jf * lambda * lambda).exp()
        })
        .sum();
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance; zero for a single observation.
    pub variance: f64,
    pub std_error: f64,
    pub q01: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q99: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleSummary {
    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// Lower-nearest quantile of sorted data: the order statistic at index
/// `⌊p (n − 1)⌋`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let idx = (p * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx]
}

pub fn summarize(samples: &[f64]) -> Result<SampleSummary> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = sorted(samples);
    let n = s.len();
    // Mean and variance from the sorted copy so the result does not depend
    // on input order.
    let mean = s.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(SampleSummary {
        count: n,
        mean: mean.clamp(s[0], s[n - 1]),
        variance,
        std_error: (variance / n as f64).sqrt(),
        q01: quantile_sorted(&s, 0.01),
        q25: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q75: quantile_sorted(&s, 0.75),
        q99: quantile_sorted(&s, 0.99),
        min: s[0],
        max: s[n - 1],
    })
}

pub fn median(samples: &[f64]) -> Result<f64> {
    summarize(samples).map(|s| s.median)
}

/// Hill estimate of the lower-tail index.
///
/// Uses the `k = ⌊fraction · n⌋` most negative observations:
/// `k / Σ_{i≤k} ln(X_(i) / X_(k+1))` where `X_(1) ≥ X_(2) ≥ …` are the
/// negated samples. Light-tailed data gives large estimates that keep
/// growing with `n`.
pub fn tail_index(samples: &[f64], fraction: f64) -> Result<f64> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if !(fraction > 0.0 && fraction < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "tail fraction {fraction} outside (0, 0.5)"
        )));
    }
    let k = ((fraction * samples.len() as f64) as usize).max(2);
    let mut lower: Vec<f64> = samples.iter().map(|x| -x).collect();
    // Only the top k + 1 order statistics are needed.
    lower.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = lower[k];
    if threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tail fraction {fraction} reaches non-negative samples"
        )));
    }
    let log_excess: f64 = lower[..k].iter().map(|x| (x / threshold).ln()).sum();
    Ok(k as f64 / log_excess)
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Ok(sab / (saa * sbb).sqrt())
}
