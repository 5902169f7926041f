//! Independent references for the integration tests. Nothing here calls
//! into the crate's special functions.

#![allow(dead_code)]

use std::f64::consts::PI;

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// `∫_0^1 x^{p−1} (1−x)^{q−1} dx` by tanh-sinh quadrature with step `h`.
///
/// Substituting `x = 1/(1+e^{−s})`, `s = π sinh t` keeps both `x` and `1 − x`
/// exact near the endpoints, so the integrable singularities at 0 and 1 are
/// resolved without cancellation.
pub fn beta_integral_with_step(p: f64, q: f64, h: f64) -> f64 {
    let t_max = 7.0;
    let steps = (t_max / h).ceil() as i64;
    let mut terms: Vec<f64> = (-steps..=steps)
        .map(|i| {
            let t = i as f64 * h;
            let s = PI * t.sinh();
            let ln_x = -softplus(-s);
            let ln_1mx = -softplus(s);
            // dx = x (1−x) π cosh t dt
            (p * ln_x + q * ln_1mx + (PI * t.cosh()).ln()).exp()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    h * terms.iter().sum::<f64>()
}

/// Beta integral with a built-in convergence check between steps `h` and `h/2`.
pub fn beta_integral(p: f64, q: f64) -> f64 {
    let coarse = beta_integral_with_step(p, q, 1.0 / 32.0);
    let fine = beta_integral_with_step(p, q, 1.0 / 64.0);
    assert!(
        ((coarse - fine) / fine).abs() < 1e-13,
        "quadrature not converged for B({p}, {q}): {coarse} vs {fine}"
    );
    fine
}

/// `λ_{b,k} = ∫ x^{k−2} (1−x)^{b−k} Λ(dx)` for `Λ = Beta(2−α, α)`.
pub fn lambda_bk_quadrature(b: u64, k: u64, alpha: f64) -> f64 {
    beta_integral(k as f64 - alpha, (b - k) as f64 + alpha) / beta_integral(2.0 - alpha, alpha)
}

/// `C(b, k)` by the multiplicative formula.
pub fn binomial(b: u64, k: u64) -> f64 {
    let k = k.min(b - k);
    (0..k).fold(1.0, |acc, i| acc * (b - i) as f64 / (i + 1) as f64)
}

/// `λ_b = Σ_k C(b,k) λ_{b,k}` from the quadrature rates.
pub fn total_rate_quadrature(b: u64, alpha: f64) -> f64 {
    (2..=b)
        .map(|k| binomial(b, k) * lambda_bk_quadrature(b, k, alpha))
        .sum()
}

/// Chi-square statistic with cells of expected count < 5 pooled into their
/// neighbour. Returns (statistic, degrees of freedom).
pub fn pooled_chi_square(observed: &[u64], probabilities: &[f64]) -> (f64, usize) {
    let total: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&c, &p) in observed.iter().zip(probabilities) {
        o += c as f64;
        e += p * total as f64;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    let last = cells.last_mut().expect("at least one pooled cell");
    last.0 += o;
    last.1 += e;
    let stat = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, cells.len() - 1)
}

/// Upper 0.1% point of chi-square(df), Wilson–Hilferty.
pub fn chi_square_999(df: usize) -> f64 {
    let d = df as f64;
    let z = 3.090_232_306;
    d * (1.0 - 2.0 / (9.0 * d) + z * (2.0 / (9.0 * d)).sqrt()).powi(3)
}
