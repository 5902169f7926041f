//! The totally skewed α-stable limit law ς and the normalizations that lead
//! to it.
//!
//! ς is pinned down by `E ς = 0`, `P(ς > x) = o(x^{−α})` and
//! `P(ς < −x) ~ x^{−α}`. In the `S_α(σ, β, μ)` parametrization of
//! Samorodnitsky and Taqqu (Zolotarev's "S1"), the tails of a stable law with
//! `1 < α < 2` satisfy
//!
//! ```text
//! x^α P(X < −x) → C_α (1 − β)/2 σ^α,   C_α = (1 − α) / (Γ(2 − α) cos(πα/2))
//! ```
//!
//! so ς is `S_α(σ, −1, 0)` with `σ^α C_α = 1`, i.e.
//!
//! ```text
//! σ(α) = (Γ(2 − α) |cos(πα/2)| / (α − 1))^{1/α}
//! ```
//!
//! Samples come from the Chambers–Mallows–Stuck transform. For `α > 1` the
//! location `μ` of this parametrization is the mean, so `μ = 0` centers ς.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::rates::AlphaParam;
use crate::special::gamma;

/// (1 + √5) / 2.
pub const ALPHA0: f64 = 1.618_033_988_749_895;

/// Scale σ(α) giving the left-tail constant 1.
pub fn stable_scale(alpha: AlphaParam) -> f64 {
    let a = alpha.get();
    (gamma(2.0 - a) * (PI * a / 2.0).cos().abs() / (a - 1.0)).powf(1.0 / a)
}

/// `S_α(scale, −1, 0)`: mean zero, heavy left tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableSpec {
    pub alpha: AlphaParam,
    pub scale: f64,
    // Chambers–Mallows–Stuck constants for β = −1.
    #[serde(skip)]
    shift: f64,
    #[serde(skip)]
    factor: f64,
}

impl StableSpec {
    /// ς itself.
    pub fn new(alpha: AlphaParam) -> Self {
        Self::with_scale(alpha, stable_scale(alpha))
    }

    /// ς multiplied by `multiplier > 0`.
    pub fn scaled(alpha: AlphaParam, multiplier: f64) -> Self {
        Self::with_scale(alpha, multiplier * stable_scale(alpha))
    }

    pub fn with_scale(alpha: AlphaParam, scale: f64) -> Self {
        assert!(
            scale > 0.0 && scale.is_finite(),
            "stable scale must be positive, got {scale}"
        );
        let a = alpha.get();
        let beta = -1.0;
        let t = beta * (PI * a / 2.0).tan();
        Self {
            alpha,
            scale,
            shift: t.atan() / a,
            factor: (1.0 + t * t).powf(1.0 / (2.0 * a)),
        }
    }

    /// Left-tail constant `lim x^α P(X < −x)` of this law.
    pub fn left_tail_constant(&self) -> f64 {
        (self.scale / stable_scale(self.alpha)).powf(self.alpha.get())
    }
}

impl Distribution<f64> for StableSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha.get();
        let u: f64 = Open01.sample(rng);
        let v = PI * (u - 0.5);
        let w: f64 = Exp1.sample(rng);
        let arg = a * (v + self.shift);
        let x = self.factor * arg.sin() / v.cos().powf(1.0 / a)
            * ((v - arg).cos() / w).powf((1.0 - a) / a);
        self.scale * x
    }
}

pub fn sample_stable<R: Rng + ?Sized>(spec: &StableSpec, rng: &mut R) -> f64 {
    spec.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_prime: f64,
    pub c2_prime: f64,
    pub gamma: f64,
    pub alpha0: f64,
}

pub fn limit_constants(alpha: AlphaParam) -> LimitConstants {
    let a = alpha.get();
    let c1 = a * (a - 1.0) * gamma(a);
    let c2 =
        a * (2.0 - a) * (a - 1.0).powf(1.0 / a + 1.0) * gamma(a) / gamma(2.0 - a).powf(1.0 / a);
    LimitConstants {
        alpha: a,
        c1,
        c2,
        c1_prime: c1 / (2.0 - a),
        c2_prime: c2 / (2.0 - a),
        gamma: alpha.gamma(),
        alpha0: ALPHA0,
    }
}

/// `(τ − n/γ) / n^{1/α}`.
pub fn normalize_tau(tau: u64, n: u64, alpha: AlphaParam) -> f64 {
    let (a, nf) = (alpha.get(), n as f64);
    (tau as f64 - nf / alpha.gamma()) / nf.powf(1.0 / a)
}

/// Multiplier `1 / (γ^{1/α+1} Γ(2−α)^{1/α})` of ς in the limit of
/// [`normalize_tau`].
pub fn tau_limit_scale(alpha: AlphaParam) -> f64 {
    let a = alpha.get();
    1.0 / (alpha.gamma().powf(1.0 / a + 1.0) * gamma(2.0 - a).powf(1.0 / a))
}

/// Exponent `1/α + 1 − α` of the fluctuation scale of ℓ_n (and of L_n below
/// the golden ratio).
pub fn fluctuation_exponent(alpha: AlphaParam) -> f64 {
    let a = alpha.get();
    1.0 / a + 1.0 - a
}

/// `(ℓ − c1 n^{2−α}) / n^{1/α+1−α}`; its limit is `c2 ς`.
pub fn normalize_external(ell: f64, n: u64, alpha: AlphaParam) -> f64 {
    let (a, nf) = (alpha.get(), n as f64);
    let c = limit_constants(alpha);
    (ell - c.c1 * nf.powf(2.0 - a)) / nf.powf(fluctuation_exponent(alpha))
}

/// Fluctuation regime of the total length L_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalLengthRegime {
    /// α < α0: stable fluctuations on the scale `n^{1/α+1−α}`.
    Stable,
    /// α = α0: stable fluctuations on the scale `(log n)^{1/α}`.
    Critical,
    /// α > α0: O(1) fluctuations with a non-stable limit.
    Bounded,
}

impl TotalLengthRegime {
    pub fn of(alpha: AlphaParam) -> Self {
        let a = alpha.get();
        if a < ALPHA0 {
            Self::Stable
        } else if a == ALPHA0 {
            Self::Critical
        } else {
            Self::Bounded
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Critical => "critical",
            Self::Bounded => "bounded",
        }
    }
}

/// Normalized total length and the regime that selected the normalization:
///
/// * α < α0: `(L − c1′ n^{2−α}) / n^{1/α+1−α}`
/// * α = α0: `(L − c1′ n^{2−α}) / (log n)^{1/α}`
/// * α > α0: `L − c1′ n^{2−α}`
pub fn normalize_total(total_length: f64, n: u64, alpha: AlphaParam) -> (f64, TotalLengthRegime) {
    let (a, nf) = (alpha.get(), n as f64);
    let centered = total_length - limit_constants(alpha).c1_prime * nf.powf(2.0 - a);
    let regime = TotalLengthRegime::of(alpha);
    let value = match regime {
        TotalLengthRegime::Stable => centered / nf.powf(fluctuation_exponent(alpha)),
        TotalLengthRegime::Critical => centered / nf.ln().powf(1.0 / a),
        TotalLengthRegime::Bounded => centered,
    };
    (value, regime)
}

/// Multiplier of ς in the limit of [`normalize_total`]; `None` when the
/// limit is not stable.
pub fn total_limit_scale(alpha: AlphaParam) -> Option<f64> {
    let a = alpha.get();
    let c2p = limit_constants(alpha).c2_prime;
    match TotalLengthRegime::of(alpha) {
        TotalLengthRegime::Stable => Some(c2p / (1.0 + a - a * a).powf(1.0 / a)),
        TotalLengthRegime::Critical => Some(c2p),
        TotalLengthRegime::Bounded => None,
    }
}

/// `αΓ(α)(α−1)^{α−1} τ^{2−α}`, the τ-driven approximation of ℓ_n.
pub fn external_length_from_tau(tau: u64, alpha: AlphaParam) -> f64 {
    let a = alpha.get();
    a * gamma(a) * (a - 1.0).powf(a - 1.0) * (tau as f64).powf(2.0 - a)
}

/// `αΓ(α) γ^{1−α} τ^{2−α} / (2 − α)`, the naive τ-driven approximation of
/// L_n. It misses the O(1) fluctuations contributed near the root.
pub fn total_length_from_tau(tau: u64, alpha: AlphaParam) -> f64 {
    external_length_from_tau(tau, alpha) / (2.0 - alpha.get())
}

/// Exponent `max(2/α − α, 3/2 − α)` of the error in
/// [`external_length_from_tau`].
pub fn external_residual_exponent(alpha: AlphaParam) -> f64 {
    let a = alpha.get();
    (2.0 / a - a).max(1.5 - a)
}

/// `(ℓ − αΓ(α)(α−1)^{α−1}τ^{2−α}) / n^{e + slack}` with `e` from
/// [`external_residual_exponent`].
pub fn scaled_external_residual(ell: f64, tau: u64, n: u64, alpha: AlphaParam, slack: f64) -> f64 {
    (ell - external_length_from_tau(tau, alpha))
        / (n as f64).powf(external_residual_exponent(alpha) + slack)
}
