//! Profile CSS, known-level CSS and modified CSS objectives.
//!
//! With z_t = φ(L)Δ_+^d x_t and c_t = φ(L)Δ_+^d I(t ≥ 1) the residuals are
//! ε_t = z_t − μ c_t, the concentrated level is μ̂ = Σ z c / Σ c² and
//! L* = ½ Σ (z_t − μ̂ c_t)². The modified objective is m(θ) L* with
//! m(θ) = (Σ c_t²)^{1/(T−1)}.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::arma_poly::{expand_weights, ArmaParams};
use crate::error::{Error, Result};
use crate::frac_ops::{convolve_truncated, fracdiff_naive, kappa_series, pi_coeffs, FftConvolver, FFT_THRESHOLD};
use crate::model::{Deterministic, ThetaParams};
use crate::scalar::Real;

const DEGENERATE_SCC: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "mu0")]
pub enum ObjectiveKind {
    Css,
    CssKnownMu(f64),
    Mcss,
}

/// Divisor used for σ̂².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma2Divisor {
    #[default]
    T,
    TMinusOne,
}

/// c_t(θ) for t = 1..T (stored zero-based) and D_θ c_t, rows ordered (d, ar..., ma...).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutedCoeffs<S> {
    pub c: Vec<S>,
    pub dc: Vec<Vec<S>>,
}

/// Convoluted coefficients c_t = Σ_{j<t} φ_j κ_{0(t−j)} and their derivatives,
/// built from the explicit weight table.
pub fn conv_coeffs<S: Real>(theta: &ThetaParams<S>, t: usize) -> Result<ConvolutedCoeffs<S>> {
    let arma = theta.arma()?;
    let table = expand_weights(&arma, t)?;
    let kappa = kappa_series(theta.d, t);
    let c = convolve_truncated(&kappa.k0, &table.phi);
    let mut dc = Vec::with_capacity(1 + arma.p());
    dc.push(convolve_truncated(&kappa.k1, &table.phi));
    for dphi in &table.dphi {
        dc.push(convolve_truncated(&kappa.k0, dphi));
    }
    Ok(ConvolutedCoeffs { c, dc })
}

/// c_t through the ARMA recursion, O(T p).
pub fn conv_coeffs_fast<S: Real>(arma: &ArmaParams<S>, d: S, t: usize) -> Vec<S> {
    arma.filter_phi(&pi_coeffs(S::one() - d, t).coeffs)
}

/// z = φ(L) Δ_+^d x.
pub fn filtered<S: Real>(theta: &ThetaParams<S>, x: &[S]) -> Result<Vec<S>> {
    let arma = theta.arma()?;
    Ok(arma.filter_phi(&crate::frac_ops::fracdiff(x, theta.d)))
}

pub fn residuals<S: Real>(theta: &ThetaParams<S>, mu: S, x: &[S]) -> Result<Vec<S>> {
    let arma = theta.arma()?;
    let z = arma.filter_phi(&crate::frac_ops::fracdiff(x, theta.d));
    let c = conv_coeffs_fast(&arma, theta.d, x.len());
    Ok(z.iter().zip(&c).map(|(&zt, &ct)| zt - mu * ct).collect())
}

fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&u, &v)| acc + u * v)
}

fn level_fit<S: Real>(z: &[S], c: &[S]) -> Result<(S, S)> {
    let scc = dot(c, c);
    if !(scc.to_f64().unwrap_or(0.0) >= DEGENERATE_SCC) {
        return Err(Error::DegenerateLevel(scc.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((dot(z, c) / scc, scc))
}

fn half_ssr<S: Real>(z: &[S], c: &[S], mu: S) -> S {
    let half = S::lit(0.5);
    z.iter().zip(c).fold(S::zero(), |acc, (&zt, &ct)| {
        let e = zt - mu * ct;
        acc + e * e
    }) * half
}

pub fn mu_hat<S: Real>(theta: &ThetaParams<S>, x: &[S]) -> Result<S> {
    let arma = theta.arma()?;
    let z = arma.filter_phi(&crate::frac_ops::fracdiff(x, theta.d));
    let c = conv_coeffs_fast(&arma, theta.d, x.len());
    Ok(level_fit(&z, &c)?.0)
}

pub fn css_profile<S: Real>(theta: &ThetaParams<S>, x: &[S]) -> Result<S> {
    let arma = theta.arma()?;
    let z = arma.filter_phi(&crate::frac_ops::fracdiff(x, theta.d));
    let c = conv_coeffs_fast(&arma, theta.d, x.len());
    let (mu, _) = level_fit(&z, &c)?;
    Ok(half_ssr(&z, &c, mu))
}

pub fn css_known_mu<S: Real>(theta: &ThetaParams<S>, mu0: S, x: &[S]) -> Result<S> {
    let e = residuals(theta, mu0, x)?;
    Ok(S::lit(0.5) * dot(&e, &e))
}

pub fn mod_term<S: Real>(theta: &ThetaParams<S>, t: usize) -> Result<S> {
    if t < 2 {
        return Err(Error::Domain(format!("mod_term needs T >= 2, got {t}")));
    }
    let arma = theta.arma()?;
    let c = conv_coeffs_fast(&arma, theta.d, t);
    let scc = dot(&c, &c);
    Ok(scc.powf(S::from_usize_lossy(t - 1).recip()))
}

pub fn mcss_objective<S: Real>(theta: &ThetaParams<S>, x: &[S]) -> Result<S> {
    Ok(mod_term(theta, x.len())? * css_profile(theta, x)?)
}

/// Filtered deterministic columns [I(t≥1), t I(t≥1)]. Δ_+^d of the trend
/// column is π_{t−1}(2−d).
fn trend_columns<S: Real>(arma: &ArmaParams<S>, d: S, t: usize) -> (Vec<S>, Vec<S>) {
    let c = arma.filter_phi(&pi_coeffs(S::one() - d, t).coeffs);
    let g = arma.filter_phi(&pi_coeffs(S::lit(2.0) - d, t).coeffs);
    (c, g)
}

/// det of the Gram matrix of the filtered [constant, trend] columns, to the
/// power 1/(T−2).
pub fn mod_term_trend<S: Real>(theta: &ThetaParams<S>, t: usize) -> Result<S> {
    if t < 3 {
        return Err(Error::Domain(format!("mod_term_trend needs T >= 3, got {t}")));
    }
    let arma = theta.arma()?;
    let (c, g) = trend_columns(&arma, theta.d, t);
    let det = gram_det(&c, &g);
    if !(det > S::zero()) {
        return Err(Error::SingularGram);
    }
    Ok(det.powf(S::from_usize_lossy(t - 2).recip()))
}

fn gram_det<S: Real>(c: &[S], g: &[S]) -> S {
    dot(c, c) * dot(g, g) - dot(c, g) * dot(c, g)
}

pub fn sigma2_hat<S: Real>(theta: &ThetaParams<S>, x: &[S]) -> Result<S> {
    sigma2_hat_with(theta, x, Sigma2Divisor::T)
}

pub fn sigma2_hat_with<S: Real>(theta: &ThetaParams<S>, x: &[S], div: Sigma2Divisor) -> Result<S> {
    let l = css_profile(theta, x)?;
    let t = x.len();
    let denom = match div {
        Sigma2Divisor::T => t,
        Sigma2Divisor::TMinusOne => t - 1,
    };
    Ok(S::lit(2.0) * l / S::from_usize_lossy(denom))
}

/// Value of an objective together with the fitted deterministic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<S> {
    /// Value of the objective being minimized.
    pub value: S,
    /// ½ Σ ε̂² at the fitted (or known) level.
    pub half_ssr: S,
    /// Fitted level, and slope when a trend is present.
    pub coef: Vec<S>,
    pub modifier: S,
}

/// Objective bound to one data series, with an FFT spectrum of the data cached
/// for long series.
#[derive(Debug, Clone)]
pub struct Objective<S: Real> {
    x: Vec<S>,
    kind: ObjectiveKind,
    det: Deterministic,
    fft: Option<(FftConvolver<S>, Vec<Complex<S>>)>,
}

impl<S: Real> Objective<S> {
    pub fn new(x: &[S], kind: ObjectiveKind, det: Deterministic) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("series contains non-finite values".into()));
        }
        let x: Vec<S> = match kind {
            ObjectiveKind::CssKnownMu(mu0) => {
                if !mu0.is_finite() {
                    return Err(Error::Config("known level must be finite".into()));
                }
                if det != Deterministic::Constant {
                    return Err(Error::Config("a known level needs the constant-only model".into()));
                }
                x.iter().map(|&v| v - S::lit(mu0)).collect()
            }
            _ => x.to_vec(),
        };
        if kind == ObjectiveKind::Mcss && x.len() <= det.columns() {
            return Err(Error::Domain("series too short for the modification term".into()));
        }
        let fft = (x.len() >= FFT_THRESHOLD).then(|| {
            let conv = FftConvolver::new(x.len());
            let spec = conv.spectrum(&x);
            (conv, spec)
        });
        Ok(Self { x, kind, det, fft })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn deterministic(&self) -> Deterministic {
        self.det
    }

    fn fracdiff_x(&self, d: S) -> Vec<S> {
        match &self.fft {
            Some((conv, spec)) => conv.apply_spectrum(spec, &pi_coeffs(-d, self.x.len()).coeffs),
            None => fracdiff_naive(&self.x, d),
        }
    }

    pub fn value(&self, theta: &ThetaParams<S>) -> Result<S> {
        self.evaluate(theta).map(|e| e.value)
    }

    pub fn evaluate(&self, theta: &ThetaParams<S>) -> Result<Evaluation<S>> {
        let arma = theta.arma()?;
        let t = self.x.len();
        let z = arma.filter_phi(&self.fracdiff_x(theta.d));
        let one = S::one();
        let known = matches!(self.kind, ObjectiveKind::CssKnownMu(_));
        let (half, coef, gram_det_k) = if known || self.det == Deterministic::None {
            let coef = match self.kind {
                ObjectiveKind::CssKnownMu(mu0) => vec![S::lit(mu0)],
                _ => Vec::new(),
            };
            (S::lit(0.5) * dot(&z, &z), coef, one)
        } else if self.det == Deterministic::Constant {
            let c = conv_coeffs_fast(&arma, theta.d, t);
            let (mu, scc) = level_fit(&z, &c)?;
            (half_ssr(&z, &c, mu), vec![mu], scc)
        } else {
            let (c, g) = trend_columns(&arma, theta.d, t);
            let (scc, sgg, scg) = (dot(&c, &c), dot(&g, &g), dot(&c, &g));
            let det = scc * sgg - scg * scg;
            if !(det > S::zero()) {
                return Err(Error::SingularGram);
            }
            let (szc, szg) = (dot(&z, &c), dot(&z, &g));
            let mu = (sgg * szc - scg * szg) / det;
            let beta = (scc * szg - scg * szc) / det;
            let half = z
                .iter()
                .zip(c.iter().zip(&g))
                .fold(S::zero(), |acc, (&zt, (&ct, &gt))| {
                    let e = zt - mu * ct - beta * gt;
                    acc + e * e
                })
                * S::lit(0.5);
            (half, vec![mu, beta], det)
        };
        let modifier = match self.kind {
            ObjectiveKind::Mcss => {
                let k = self.det.columns();
                gram_det_k.powf(S::from_usize_lossy(t - k).recip())
            }
            _ => one,
        };
        let value = modifier * half;
        if !value.is_finite() {
            return Err(Error::NonFinite(theta.to_vec().iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()));
        }
        Ok(Evaluation { value, half_ssr: half, coef, modifier })
    }
}
