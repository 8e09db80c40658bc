//! ARMA lag polynomial algebra: β(L) = 1 − Σ β_k L^k, α(L) = 1 + Σ α_k L^k,
//! ω(L) = α(L)/β(L), φ(L) = ω(L)^{−1} and parameter derivatives of φ.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frac_ops::{convolve_truncated, FftConvolver};
use crate::scalar::Real;

/// Spectral radius margin for stationarity and invertibility.
pub const ROOT_MARGIN: f64 = 1e-9;
/// Minimum distance between an AR root and an MA root.
pub const COMMON_ROOT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaParams<S> {
    pub ar: Vec<S>,
    pub ma: Vec<S>,
}

impl<S: Real> ArmaParams<S> {
    /// Validated parameters: roots outside the unit circle, no common roots.
    pub fn new(ar: Vec<S>, ma: Vec<S>) -> Result<Self> {
        let p = Self { ar, ma };
        p.check()?;
        Ok(p)
    }

    pub fn white_noise() -> Self {
        Self { ar: Vec::new(), ma: Vec::new() }
    }

    pub fn p1(&self) -> usize {
        self.ar.len()
    }

    pub fn p2(&self) -> usize {
        self.ma.len()
    }

    pub fn p(&self) -> usize {
        self.ar.len() + self.ma.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.ar.iter().chain(self.ma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonInvertible("non-finite coefficient".into()));
        }
        let neg_ar: Vec<S> = self.ar.iter().map(|&b| -b).collect();
        if !roots_outside_unit_circle(&neg_ar, S::lit(ROOT_MARGIN)) {
            return Err(Error::NonInvertible(format!("AR polynomial {:?} is not stationary", self.ar)));
        }
        if !roots_outside_unit_circle(&self.ma, S::lit(ROOT_MARGIN)) {
            return Err(Error::NonInvertible(format!("MA polynomial {:?} is not invertible", self.ma)));
        }
        if !self.ar.is_empty() && !self.ma.is_empty() {
            let ar: Vec<f64> = self.ar.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
            let ma: Vec<f64> = self.ma.iter().map(|v| -v.to_f64().unwrap_or(f64::NAN)).collect();
            let ra = inverse_roots(&ar);
            let rm = inverse_roots(&ma);
            for a in &ra {
                for m in &rm {
                    let za = a.inv();
                    let zm = m.inv();
                    if (za - zm).norm() <= COMMON_ROOT_TOL {
                        return Err(Error::NonInvertible(format!("AR and MA share the root {za}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// β(1) = 1 − Σ β_k.
    pub fn beta_at_one(&self) -> S {
        self.ar.iter().fold(S::one(), |acc, &b| acc - b)
    }

    /// α(1) = 1 + Σ α_k.
    pub fn alpha_at_one(&self) -> S {
        self.ma.iter().fold(S::one(), |acc, &a| acc + a)
    }

    /// D log φ(1) with φ(1) = β(1)/α(1), one entry per coefficient.
    pub fn dlog_phi_at_one(&self) -> Vec<S> {
        let b1 = self.beta_at_one();
        let a1 = self.alpha_at_one();
        let mut v = vec![-b1.recip(); self.p1()];
        v.extend(std::iter::repeat_n(-a1.recip(), self.p2()));
        v
    }

    /// y = φ(L) x with zero pre-sample values: α(L) y = β(L) x.
    pub fn filter_phi(&self, x: &[S]) -> Vec<S> {
        let mut y = Vec::with_capacity(x.len());
        for t in 0..x.len() {
            let mut v = x[t];
            for (k, &b) in self.ar.iter().enumerate() {
                if t > k {
                    v = v - b * x[t - k - 1];
                }
            }
            for (k, &a) in self.ma.iter().enumerate() {
                if t > k {
                    v = v - a * y[t - k - 1];
                }
            }
            y.push(v);
        }
        y
    }

    /// y = ω(L) x with zero pre-sample values: β(L) y = α(L) x.
    pub fn filter_omega(&self, x: &[S]) -> Vec<S> {
        let mut y = Vec::with_capacity(x.len());
        for t in 0..x.len() {
            let mut v = x[t];
            for (k, &a) in self.ma.iter().enumerate() {
                if t > k {
                    v = v + a * x[t - k - 1];
                }
            }
            for (k, &b) in self.ar.iter().enumerate() {
                if t > k {
                    v = v + b * y[t - k - 1];
                }
            }
            y.push(v);
        }
        y
    }
}

/// Whether every root of 1 + Σ c_k z^k lies outside the circle of radius
/// 1/(1−margin), checked by the Schur–Cohn step-down recursion.
pub fn roots_outside_unit_circle<S: Real>(c: &[S], margin: S) -> bool {
    let mut p = c.len();
    while p > 0 && c[p - 1] == S::zero() {
        p -= 1;
    }
    if p == 0 {
        return true;
    }
    let scale = (S::one() - margin).recip();
    let mut a: Vec<S> = Vec::with_capacity(p);
    let mut s = S::one();
    for k in 0..p {
        s = s * scale;
        // AR form 1 − Σ a_k z^k
        a.push(-c[k] * s);
    }
    for k in (1..=p).rev() {
        let r = a[k - 1];
        if !(r.abs() < S::one()) {
            return false;
        }
        let den = S::one() - r * r;
        let prev: Vec<S> = (0..k - 1).map(|j| (a[j] + r * a[k - 2 - j]) / den).collect();
        a = prev;
    }
    true
}

/// Reciprocal roots λ of 1 − Σ b_k z^k, i.e. eigenvalues of the companion matrix.
fn inverse_roots(b: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    let mut p = b.len();
    while p > 0 && b[p - 1] == 0.0 {
        p -= 1;
    }
    if p == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(p, p);
    for k in 0..p {
        m[(0, k)] = b[k];
    }
    for k in 1..p {
        m[(k, k - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondDerivative {
    #[default]
    Analytic,
    /// Central differences of the analytic first derivatives.
    FiniteDifference,
}

/// Truncated expansion weights and derivatives of φ_j in the ARMA coefficients,
/// ordered (AR..., MA...).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable<S> {
    pub params: ArmaParams<S>,
    pub omega: Vec<S>,
    pub phi: Vec<S>,
    pub dphi: Vec<Vec<S>>,
    pub d2phi: Vec<Vec<Vec<S>>>,
    /// |ω_{N−1}|, the size of the last retained weight.
    pub omega_tail: S,
}

impl<S: Real> WeightTable<S> {
    pub fn n(&self) -> usize {
        self.omega.len()
    }
}

pub fn expand_weights<S: Real>(params: &ArmaParams<S>, n: usize) -> Result<WeightTable<S>> {
    expand_weights_with(params, n, SecondDerivative::Analytic)
}

pub fn expand_weights_with<S: Real>(
    params: &ArmaParams<S>,
    n: usize,
    second: SecondDerivative,
) -> Result<WeightTable<S>> {
    params.check()?;
    let n = n.max(1);
    let mut impulse = vec![S::zero(); n];
    impulse[0] = S::one();
    let omega = params.filter_omega(&impulse);
    let phi = params.filter_phi(&impulse);
    let dphi = phi_first_derivatives(params, &phi);
    let d2phi = match second {
        SecondDerivative::Analytic => phi_second_derivatives(params, &dphi),
        SecondDerivative::FiniteDifference => phi_second_fd(params, n),
    };
    let omega_tail = omega[n - 1].abs();
    Ok(WeightTable { params: params.clone(), omega, phi, dphi, d2phi, omega_tail })
}

/// α(L)^{−1} applied to a forcing sequence: y_n = f_n − Σ α_j y_{n−j}.
fn ma_recursion<S: Real>(ma: &[S], f: &[S]) -> Vec<S> {
    let mut y: Vec<S> = Vec::with_capacity(f.len());
    for t in 0..f.len() {
        let mut v = f[t];
        for (j, &a) in ma.iter().enumerate() {
            if t > j {
                v = v - a * y[t - j - 1];
            }
        }
        y.push(v);
    }
    y
}

fn phi_first_derivatives<S: Real>(params: &ArmaParams<S>, phi: &[S]) -> Vec<Vec<S>> {
    let n = phi.len();
    let mut out = Vec::with_capacity(params.p());
    for k in 0..params.p1() {
        let mut f = vec![S::zero(); n];
        if k + 1 < n {
            f[k + 1] = -S::one();
        }
        out.push(ma_recursion(&params.ma, &f));
    }
    for m in 0..params.p2() {
        let f: Vec<S> = (0..n).map(|t| if t > m { -phi[t - m - 1] } else { S::zero() }).collect();
        out.push(ma_recursion(&params.ma, &f));
    }
    out
}

fn lagged<S: Real>(x: &[S], lag: usize) -> impl Iterator<Item = S> + '_ {
    (0..x.len()).map(move |t| if t >= lag { x[t - lag] } else { S::zero() })
}

fn phi_second_derivatives<S: Real>(params: &ArmaParams<S>, dphi: &[Vec<S>]) -> Vec<Vec<Vec<S>>> {
    let (p1, p) = (params.p1(), params.p());
    let n = dphi.first().map_or(0, |v| v.len());
    let mut out = vec![vec![vec![S::zero(); n]; p]; p];
    for a in 0..p {
        for b in 0..p {
            let a_ma = a >= p1;
            let b_ma = b >= p1;
            if !a_ma && !b_ma {
                continue;
            }
            let mut f = vec![S::zero(); n];
            if a_ma {
                let lag = a - p1 + 1;
                for (fv, v) in f.iter_mut().zip(lagged(&dphi[b], lag)) {
                    *fv = *fv - v;
                }
            }
            if b_ma {
                let lag = b - p1 + 1;
                for (fv, v) in f.iter_mut().zip(lagged(&dphi[a], lag)) {
                    *fv = *fv - v;
                }
            }
            out[a][b] = ma_recursion(&params.ma, &f);
        }
    }
    out
}

fn phi_second_fd<S: Real>(params: &ArmaParams<S>, n: usize) -> Vec<Vec<Vec<S>>> {
    let p = params.p();
    let h = S::lit(1e-5);
    let mut impulse = vec![S::zero(); n];
    impulse[0] = S::one();
    let shifted = |k: usize, delta: S| {
        let mut q = params.clone();
        if k < q.p1() {
            q.ar[k] = q.ar[k] + delta;
        } else {
            let m = k - q.p1();
            q.ma[m] = q.ma[m] + delta;
        }
        let phi = q.filter_phi(&impulse);
        phi_first_derivatives(&q, &phi)
    };
    let mut out = vec![vec![vec![S::zero(); n]; p]; p];
    for b in 0..p {
        let up = shifted(b, h);
        let dn = shifted(b, -h);
        for a in 0..p {
            for t in 0..n {
                out[a][b][t] = (up[a][t] - dn[a][t]) / (h + h);
            }
        }
    }
    out
}

/// b_{φ_k i} = Σ_{s<i} ω_s ∂φ_{i−s}/∂φ_k, its second-derivative analogue and
/// h_{dφ_k i} = Σ_{s=1}^{i−1} b_{φ_k s}/(i−s).
#[derive(Debug, Clone, PartialEq)]
pub struct BhCoeffs<S> {
    pub b1: Vec<Vec<S>>,
    pub b2: Vec<Vec<Vec<S>>>,
    pub hd: Vec<Vec<S>>,
}

pub fn bh_coeffs<S: Real>(table: &WeightTable<S>) -> BhCoeffs<S> {
    let params = &table.params;
    let b1: Vec<Vec<S>> = table.dphi.iter().map(|d| params.filter_omega(d)).collect();
    let b2: Vec<Vec<Vec<S>>> = table
        .d2phi
        .iter()
        .map(|row| row.iter().map(|d| params.filter_omega(d)).collect())
        .collect();
    let hd = b1.iter().map(|b| harmonic_convolution(b)).collect();
    BhCoeffs { b1, b2, hd }
}

/// h_i = Σ_{s=1}^{i−1} b_s/(i−s).
pub fn harmonic_convolution<S: Real>(b: &[S]) -> Vec<S> {
    let n = b.len();
    let mut w = vec![S::zero(); n];
    for (j, wj) in w.iter_mut().enumerate().skip(1) {
        *wj = S::from_usize_lossy(j).recip();
    }
    if n > 4096 {
        FftConvolver::new(n).convolve(b, &w)
    } else {
        convolve_truncated(b, &w)
    }
}
