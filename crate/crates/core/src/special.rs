//! Log-gamma helpers.
//!
//! `ln_gamma` defers to `statrs`. Differences `ln Γ(x + a) − ln Γ(x)` for
//! large `x` lose most of their digits when taken as a plain difference of
//! two log-gammas, so [`ln_gamma_ratio`] evaluates them from the Stirling
//! series directly.

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Below this argument the ratio is shifted upward by the recurrence
/// `Γ(z + 1) = z Γ(z)` before the asymptotic series is applied.
const STIRLING_MIN: f64 = 20.0;

/// `ln Γ(x + a) − ln Γ(x)` for `x > 0`, `x + a > 0`.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    debug_assert!(x > 0.0 && x + a > 0.0, "ln_gamma_ratio({x}, {a})");
    if a == 0.0 {
        return 0.0;
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < STIRLING_MIN {
        acc += x.ln() - (x + a).ln();
        x += 1.0;
    }
    acc + stirling_ratio(x, a)
}

fn stirling_ratio(x: f64, a: f64) -> f64 {
    // (x + a − 1/2) ln(x + a) − (x − 1/2) ln x − a, rearranged so the
    // leading terms do not cancel.
    let lead = (x - 0.5) * (a / x).ln_1p() + a * (x + a).ln() - a;
    lead + stirling_tail(x + a) - stirling_tail(x)
}

fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln C(n, k)` for real-valued arguments, `0 ≤ k ≤ n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}
