//! Least-squares estimation of a single level break,
//! μ_t(τ) = μ + β I(t ≤ ⌊τT⌋), by grid search over the break fraction.
//!
//! Time is indexed t = 0, …, T−1 here, so the first regime holds ⌊τT⌋ + 1
//! observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TRIM: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakFit {
    pub tau_hat: f64,
    /// Number of observations in the first regime, i.e. the 1-based position
    /// of its last observation.
    pub break_index: usize,
    pub mu_hat: f64,
    pub beta_hat: f64,
    pub ssr: f64,
    /// x_t − μ̂_t(τ̂).
    pub filtered: Vec<f64>,
}

/// SSR of the regression of x on {1, I(t ≤ k)}, with (μ̂, β̂).
pub fn fit_at(x: &[f64], k: usize) -> (f64, f64, f64) {
    let (pre, post) = x.split_at(k);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (m1, m2) = (mean(pre), mean(post));
    let ssr = pre.iter().map(|v| (v - m1).powi(2)).sum::<f64>() + post.iter().map(|v| (v - m2).powi(2)).sum::<f64>();
    (m2, m1 - m2, ssr)
}

/// Candidate first-regime lengths k = ⌊τT⌋ + 1 for τ = j/T in [trim, 1 − trim].
pub fn grid(t: usize, trim: f64) -> Vec<usize> {
    let tf = t as f64;
    (1..t).filter(|&k| {
        let tau = (k - 1) as f64 / tf;
        tau >= trim - 1e-12 && tau <= 1.0 - trim + 1e-12
    }).collect()
}

pub fn break_filter(x: &[f64], trim: f64) -> Result<BreakFit> {
    let t = x.len();
    if t < 20 {
        return Err(Error::Domain(format!("break filter needs T >= 20, got {t}")));
    }
    if !(trim > 0.0 && trim < 0.5) {
        return Err(Error::Config(format!("trim must lie in (0, 0.5), got {trim}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    let candidates = grid(t, trim);
    if candidates.is_empty() {
        return Err(Error::Config(format!("no break candidates for T = {t} and trim = {trim}")));
    }
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for k in candidates {
        let (mu, beta, ssr) = fit_at(x, k);
        // strict comparison keeps the smallest τ on ties
        if best.is_none_or(|b| ssr < b.3) {
            best = Some((k, mu, beta, ssr));
        }
    }
    let (k, mu_hat, beta_hat, ssr) = best.expect("non-empty grid");
    let filtered = x
        .iter()
        .enumerate()
        .map(|(i, v)| v - mu_hat - if i < k { beta_hat } else { 0.0 })
        .collect();
    Ok(BreakFit { tau_hat: (k - 1) as f64 / t as f64, break_index: k, mu_hat, beta_hat, ssr, filtered })
}
