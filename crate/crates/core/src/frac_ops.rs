//! Binomial expansion coefficients π_i(a) of Δ^{−a} and truncated fractional
//! differencing, Δ_+^d x_t = Σ_{i<t} π_i(−d) x_{t−i}.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special_fn::ln_gamma_signed;

/// Series length at which `fracdiff` switches from the direct sum to the FFT.
pub const FFT_THRESHOLD: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct PiSeries<S> {
    pub a: S,
    pub coeffs: Vec<S>,
}

/// κ_{0t}(d) = π_{t−1}(1−d) and its derivative in d. Stored zero-based, so
/// `k0[0]` is κ_{01}.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaSeries<S> {
    pub d: S,
    pub k0: Vec<S>,
    pub k1: Vec<S>,
}

/// D_d π_j(0) = 1/j and D_dd π_j(0) = 2 H_{j−1}/j, H the harmonic numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct DPiZero<S> {
    pub d1: Vec<S>,
    pub d2: Vec<S>,
}

pub fn pi_coeffs<S: Real>(a: S, n: usize) -> PiSeries<S> {
    let mut coeffs = Vec::with_capacity(n.max(1));
    coeffs.push(S::one());
    for i in 1..n {
        let fi = S::from_usize_lossy(i);
        let prev = coeffs[i - 1];
        coeffs.push((fi - S::one() + a) * prev / fi);
    }
    PiSeries { a, coeffs }
}

/// π_j(a) = Γ(j+a)/(Γ(a)Γ(j+1)) through log-Gamma. Test oracle only.
pub fn pi_coeffs_gamma<S: Real>(a: S, j: usize) -> Result<S> {
    if a <= S::zero() && a == a.round() {
        return Err(Error::Domain(format!("pi_coeffs_gamma needs a not a non-positive integer, got {a:?}")));
    }
    let fj = S::from_usize_lossy(j);
    let (lnum, snum) = ln_gamma_signed(fj + a)?;
    let (la, sa) = ln_gamma_signed(a)?;
    let (lj, _) = ln_gamma_signed(fj + S::one())?;
    Ok(snum * sa * (lnum - la - lj).exp())
}

/// π_j(a) and D_a π_j(a) for j < n, by the recursion and its derivative.
pub fn pi_coeffs_with_derivative<S: Real>(a: S, n: usize) -> (Vec<S>, Vec<S>) {
    let mut p = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    if n == 0 {
        return (p, dp);
    }
    p.push(S::one());
    dp.push(S::zero());
    for j in 1..n {
        let fj = S::from_usize_lossy(j);
        let f = fj - S::one() + a;
        dp.push((f * dp[j - 1] + p[j - 1]) / fj);
        p.push(f * p[j - 1] / fj);
    }
    (p, dp)
}

pub fn kappa_series<S: Real>(d: S, t: usize) -> KappaSeries<S> {
    let (p, dp) = pi_coeffs_with_derivative(S::one() - d, t);
    KappaSeries { d, k0: p, k1: dp.into_iter().map(|v| -v).collect() }
}

pub fn dpi_zero<S: Real>(n: usize) -> DPiZero<S> {
    let mut d1 = vec![S::zero(); n];
    let mut d2 = vec![S::zero(); n];
    let mut h = S::zero();
    for j in 1..n {
        let fj = S::from_usize_lossy(j);
        d1[j] = fj.recip();
        // h = H_{j−1} here
        d2[j] = S::lit(2.0) * h / fj;
        h = h + fj.recip();
    }
    DPiZero { d1, d2 }
}

/// Direct O(T²) truncated fractional difference.
pub fn fracdiff_naive<S: Real>(x: &[S], d: S) -> Vec<S> {
    let w = pi_coeffs(-d, x.len()).coeffs;
    convolve_truncated(x, &w)
}

/// y_t = Σ_{i≤t} w_i x_{t−i}, zero based, output length = x.len().
pub fn convolve_truncated<S: Real>(x: &[S], w: &[S]) -> Vec<S> {
    let n = x.len();
    let mut y = vec![S::zero(); n];
    for t in 0..n {
        let mut acc = S::zero();
        for i in 0..=t.min(w.len().saturating_sub(1)) {
            acc = acc + w[i] * x[t - i];
        }
        y[t] = acc;
    }
    y
}

/// FFT plan for truncated convolutions of length-`n` series.
#[derive(Clone)]
pub struct FftConvolver<S: Real> {
    n: usize,
    len: usize,
    fwd: Arc<dyn Fft<S>>,
    inv: Arc<dyn Fft<S>>,
}

impl<S: Real> std::fmt::Debug for FftConvolver<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver").field("n", &self.n).field("len", &self.len).finish()
    }
}

impl<S: Real> FftConvolver<S> {
    pub fn new(n: usize) -> Self {
        let len = (2 * n.max(1) - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self { n, len, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Zero-padded spectrum of a series, reusable across `apply_spectrum` calls.
    pub fn spectrum(&self, x: &[S]) -> Vec<Complex<S>> {
        let mut buf = vec![Complex::new(S::zero(), S::zero()); self.len];
        for (b, v) in buf.iter_mut().zip(x.iter().take(self.n)) {
            b.re = *v;
        }
        self.fwd.process(&mut buf);
        buf
    }

    /// Truncated convolution of `w` with the series whose spectrum is `x_hat`.
    pub fn apply_spectrum(&self, x_hat: &[Complex<S>], w: &[S]) -> Vec<S> {
        let mut buf = self.spectrum(w);
        for (b, xh) in buf.iter_mut().zip(x_hat) {
            *b = *b * *xh;
        }
        self.inv.process(&mut buf);
        let scale = S::from_usize_lossy(self.len).recip();
        buf[..self.n].iter().map(|c| c.re * scale).collect()
    }

    pub fn convolve(&self, x: &[S], w: &[S]) -> Vec<S> {
        let xh = self.spectrum(x);
        self.apply_spectrum(&xh, w)
    }
}

/// Truncated fractional difference through a zero-padded FFT convolution.
pub fn fracdiff_fft<S: Real>(x: &[S], d: S) -> Vec<S> {
    if d == S::zero() {
        return x.to_vec();
    }
    if x.is_empty() {
        return Vec::new();
    }
    let conv = FftConvolver::new(x.len());
    conv.convolve(x, &pi_coeffs(-d, x.len()).coeffs)
}

/// Fractional difference choosing the direct or FFT path by length.
pub fn fracdiff<S: Real>(x: &[S], d: S) -> Vec<S> {
    if x.len() >= FFT_THRESHOLD {
        fracdiff_fft(x, d)
    } else {
        fracdiff_naive(x, d)
    }
}
