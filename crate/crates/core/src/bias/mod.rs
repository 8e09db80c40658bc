//! Theoretical score and intrinsic biases of the CSS, known-level CSS and MCSS
//! estimators, in approximate (limiting) and exact (finite-T) form, plus the
//! bias-corrected MCSS estimator.

pub mod closed_form;
pub mod engine;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arma_poly::{expand_weights, ArmaParams};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorKind, FitResult};
use crate::model::ThetaParams;
use crate::objectives::conv_coeffs;
use crate::special_fn::digamma;

pub use closed_form::{closed_form, ClosedForm, ClosedFormCase};
use engine::{assemble, invert, layout, FiniteT, Limiting, Param, Sequences};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasVariant {
    Approximate,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasRoute {
    General,
    ClosedForm,
}

/// Which inverse enters the exact expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AInverse {
    #[default]
    Limiting,
    FiniteT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    /// Half-width of the excluded band around d = 1/2.
    pub boundary_band: f64,
    /// Relative size of the last retained b-coefficients at which truncation stops.
    pub tol: f64,
    pub min_n: usize,
    pub max_n: usize,
    /// Treat d as known (short-memory models); only ARMA components are reported.
    pub pin_d: bool,
    pub exact_inverse: AInverse,
    /// Intrinsic bias subtracted by the bcm estimator.
    pub bcm_variant: BiasVariant,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            boundary_band: 0.01,
            tol: 1e-13,
            min_n: 2048,
            max_n: 1_000_000,
            pin_d: false,
            exact_inverse: AInverse::Limiting,
            bcm_variant: BiasVariant::Exact,
        }
    }
}

/// Bias of each estimator, one entry per reported parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTotals {
    pub css: Vec<f64>,
    pub css_known_mu: Vec<f64>,
    pub mcss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasParts {
    pub score_bias: Vec<f64>,
    pub intrinsic_bias: Vec<f64>,
}

impl BiasParts {
    pub fn totals(&self) -> EstimatorTotals {
        EstimatorTotals {
            css: self.score_bias.iter().zip(&self.intrinsic_bias).map(|(s, b)| s + b).collect(),
            css_known_mu: self.intrinsic_bias.clone(),
            mcss: self.intrinsic_bias.clone(),
        }
    }
}

/// Bias decomposition at (θ0, T). Values are biases, not scaled by T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub t: usize,
    pub theta0: ThetaParams<f64>,
    pub variant: BiasVariant,
    pub route: BiasRoute,
    pub param_names: Vec<String>,
    /// Score bias of the CSS estimator; the known-level and MCSS score biases are zero.
    pub score_bias: Vec<f64>,
    pub intrinsic_bias: Vec<f64>,
    pub total: EstimatorTotals,
    /// Truncation of the limiting sums and the relative size of the dropped tail.
    pub truncation_n: usize,
    pub tail: f64,
    /// Exact reports carry the approximate decomposition alongside.
    pub approximate: Option<BiasParts>,
}

pub fn param_names(p1: usize, p2: usize, free_d: bool) -> Vec<String> {
    let mut v = Vec::new();
    if free_d {
        v.push("d".to_string());
    }
    v.extend((1..=p1).map(|k| format!("ar{k}")));
    v.extend((1..=p2).map(|k| format!("ma{k}")));
    v
}

pub fn check_boundary(d: f64, band: f64) -> Result<()> {
    if (d - 0.5).abs() < band {
        return Err(Error::BoundaryD { d, band });
    }
    Ok(())
}

/// T·𝓑 with its truncation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicBias {
    pub t_bias: Vec<f64>,
    pub truncation_n: usize,
    pub tail: f64,
}

struct Limit {
    seqs: Sequences,
    params: Vec<Param>,
    a: DMatrix<f64>,
}

impl Limit {
    fn new(arma: &ArmaParams<f64>, free_d: bool, cfg: &BiasConfig) -> Result<Self> {
        let seqs = Sequences::adaptive(arma, cfg.min_n, cfg.max_n, cfg.tol)?;
        let params = layout(arma.p(), free_d);
        let eng = Limiting::new(&seqs);
        let a = DMatrix::from_fn(params.len(), params.len(), |j, l| eng.a_entry(params[j], params[l]));
        Ok(Self { seqs, params, a })
    }
}

/// Approximate intrinsic bias T·𝓑(φ0). It depends on the ARMA part only.
pub fn approx_intrinsic_bias(phi0: &ArmaParams<f64>, cfg: &BiasConfig) -> Result<IntrinsicBias> {
    let lim = Limit::new(phi0, !cfg.pin_d, cfg)?;
    if lim.params.is_empty() {
        return Ok(IntrinsicBias { t_bias: Vec::new(), truncation_n: lim.seqs.n, tail: 0.0 });
    }
    let moments = Limiting::new(&lim.seqs).moments(&lim.params);
    let a_inv = invert(&moments.a)?;
    let tb = assemble(&a_inv, &moments.a, &moments);
    Ok(IntrinsicBias { t_bias: tb.iter().copied().collect(), truncation_n: lim.seqs.n, tail: lim.seqs.tail })
}

/// Exact intrinsic bias T·B_T(φ0) from the finite-T sums.
pub fn exact_intrinsic_bias(phi0: &ArmaParams<f64>, t: usize, cfg: &BiasConfig) -> Result<IntrinsicBias> {
    let params = layout(phi0.p(), !cfg.pin_d);
    if params.is_empty() {
        return Ok(IntrinsicBias { t_bias: Vec::new(), truncation_n: t, tail: 0.0 });
    }
    let finite = FiniteT::new(phi0, t)?.moments(&params);
    let (a_inv, n, tail) = match cfg.exact_inverse {
        AInverse::Limiting => {
            let lim = Limit::new(phi0, !cfg.pin_d, cfg)?;
            (invert(&lim.a)?, lim.seqs.n, lim.seqs.tail)
        }
        AInverse::FiniteT => (invert(&finite.a)?, t, 0.0),
    };
    let tb = assemble(&a_inv, &finite.a, &finite);
    Ok(IntrinsicBias { t_bias: tb.iter().copied().collect(), truncation_n: n, tail })
}

/// Type-I autocovariances γ(h) = Σ_n π_n(a) π_{n+h}(a), a = 1 − d < 1/2, and
/// their derivatives in d, h < n.
fn frac_autocov(d: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = 1.0 - d;
    let lg = crate::special_fn::ln_gamma(1.0 - 2.0 * a)? - 2.0 * crate::special_fn::ln_gamma(1.0 - a)?;
    let g0 = lg.exp();
    // D_a log γ(0) = −2Ψ(1−2a) + 2Ψ(1−a), and D_d = −D_a
    let dg0 = -g0 * (-2.0 * digamma(1.0 - 2.0 * a)? + 2.0 * digamma(1.0 - a)?);
    let mut g = vec![0.0; n];
    let mut dg = vec![0.0; n];
    g[0] = g0;
    dg[0] = dg0;
    for h in 1..n {
        let hf = (h - 1) as f64;
        let den = hf + 1.0 - a;
        let r = (hf + a) / den;
        // D_a r = (2h−1)/(h−a)² with the previous lag h−1; D_d flips the sign
        let dr = -(2.0 * hf + 1.0) / (den * den);
        g[h] = r * g[h - 1];
        dg[h] = r * dg[h - 1] + dr * g[h - 1];
    }
    Ok((g, dg))
}

/// Σ_{t≥1} c_t D_θ c_t / Σ_{t≥1} c_t² for d > 1/2, rows (d, ar..., ma...).
pub fn infinite_score_vector(theta0: &ThetaParams<f64>, cfg: &BiasConfig) -> Result<Vec<f64>> {
    let arma = theta0.arma()?;
    // φ_j decay geometrically; AR-only models have p1+1 nonzero weights
    let mut n = 64;
    let table = loop {
        let table = expand_weights(&arma, n)?;
        let peak = table.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = table.phi[n.saturating_sub(50)..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if tail <= 1e-17 * peak || n >= cfg.max_n {
            break table;
        }
        n = (2 * n).min(cfg.max_n);
    };
    let (g, dg) = frac_autocov(theta0.d, n)?;
    let phi = &table.phi;
    let sym = |x: &[f64], y: &[f64], w: &[f64]| -> f64 {
        // Σ_{j,k} x_j y_k w(|j−k|)
        let pos = lag_products(x, y);
        let neg = lag_products(y, x);
        let mut acc = w[0] * pos[0];
        for h in 1..n {
            acc += w[h] * (pos[h] + neg[h]);
        }
        acc
    };
    let scc = sym(phi, phi, &g);
    let mut v = vec![0.5 * sym(phi, phi, &dg) / scc];
    for dphi in &table.dphi {
        v.push(sym(dphi, phi, &g) / scc);
    }
    Ok(v)
}

/// r_h = Σ_j x_j y_{j+h}, including j = 0.
fn lag_products(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n <= 2048 {
        return (0..n).map(|h| (0..n - h).map(|j| x[j] * y[j + h]).sum()).collect();
    }
    let yr: Vec<f64> = (0..n).map(|i| y[n - 1 - i]).collect();
    let conv = crate::frac_ops::FftConvolver::new(n).convolve(x, &yr);
    (0..n).map(|h| conv[n - 1 - h]).collect()
}

/// The bracket multiplying A^{-1} in the approximate score bias.
fn approx_score_vector(theta0: &ThetaParams<f64>, t: usize, cfg: &BiasConfig) -> Result<Vec<f64>> {
    let d = theta0.d;
    if d > 0.5 {
        return infinite_score_vector(theta0, cfg);
    }
    let arma = theta0.arma()?;
    let mut v = vec![-(t as f64).ln() + digamma(1.0 - d)? + 1.0 / (1.0 - 2.0 * d)];
    v.extend(arma.dlog_phi_at_one());
    Ok(v)
}

fn select(v: Vec<f64>, pin_d: bool) -> Vec<f64> {
    if pin_d {
        v.into_iter().skip(1).collect()
    } else {
        v
    }
}

fn apply(a_inv: &DMatrix<f64>, v: &[f64], scale: f64) -> Vec<f64> {
    (a_inv * DVector::from_column_slice(v)).iter().map(|x| x * scale).collect()
}

/// Approximate score bias 𝓢_T of the CSS estimator.
pub fn approx_score_bias(theta0: &ThetaParams<f64>, t: usize, cfg: &BiasConfig) -> Result<Vec<f64>> {
    check_boundary(theta0.d, cfg.boundary_band)?;
    let lim = Limit::new(&theta0.arma()?, !cfg.pin_d, cfg)?;
    let v = select(approx_score_vector(theta0, t, cfg)?, cfg.pin_d);
    Ok(apply(&invert(&lim.a)?, &v, 1.0 / t as f64))
}

/// Σ_{t≤T} c_t D_θ c_t / Σ_{t≤T} c_t².
pub fn finite_score_vector(theta0: &ThetaParams<f64>, t: usize) -> Result<Vec<f64>> {
    let cc = conv_coeffs(theta0, t)?;
    let scc: f64 = cc.c.iter().map(|c| c * c).sum();
    Ok(cc.dc.iter().map(|row| row.iter().zip(&cc.c).map(|(a, b)| a * b).sum::<f64>() / scc).collect())
}

/// Exact score bias S_T of the CSS estimator.
pub fn exact_score_bias(theta0: &ThetaParams<f64>, t: usize, cfg: &BiasConfig) -> Result<Vec<f64>> {
    check_boundary(theta0.d, cfg.boundary_band)?;
    let arma = theta0.arma()?;
    let v = select(finite_score_vector(theta0, t)?, cfg.pin_d);
    let a_inv = match cfg.exact_inverse {
        AInverse::Limiting => invert(&Limit::new(&arma, !cfg.pin_d, cfg)?.a)?,
        AInverse::FiniteT => {
            let params = layout(arma.p(), !cfg.pin_d);
            invert(&FiniteT::new(&arma, t)?.moments(&params).a)?
        }
    };
    Ok(apply(&a_inv, &v, 1.0 / t as f64))
}

fn names_for(theta0: &ThetaParams<f64>, pin_d: bool) -> Vec<String> {
    param_names(theta0.ar.len(), theta0.ma.len(), !pin_d)
}

/// Approximate bias report from the general engine.
pub fn approx_bias(theta0: &ThetaParams<f64>, t: usize, cfg: &BiasConfig) -> Result<BiasReport> {
    check_boundary(theta0.d, cfg.boundary_band)?;
    let arma = theta0.arma()?;
    let intrinsic = approx_intrinsic_bias(&arma, cfg)?;
    let score = approx_score_bias(theta0, t, cfg)?;
    let parts = BiasParts {
        score_bias: score,
        intrinsic_bias: intrinsic.t_bias.iter().map(|b| b / t as f64).collect(),
    };
    Ok(BiasReport {
        t,
        theta0: theta0.clone(),
        variant: BiasVariant::Approximate,
        route: BiasRoute::General,
        param_names: names_for(theta0, cfg.pin_d),
        total: parts.totals(),
        score_bias: parts.score_bias,
        intrinsic_bias: parts.intrinsic_bias,
        truncation_n: intrinsic.truncation_n,
        tail: intrinsic.tail,
        approximate: None,
    })
}

/// Exact bias report, with the approximate decomposition attached.
pub fn exact_bias(theta0: &ThetaParams<f64>, t: usize, cfg: &BiasConfig) -> Result<BiasReport> {
    let approx = approx_bias(theta0, t, cfg)?;
    let arma = theta0.arma()?;
    let intrinsic = exact_intrinsic_bias(&arma, t, cfg)?;
    let parts = BiasParts {
        score_bias: exact_score_bias(theta0, t, cfg)?,
        intrinsic_bias: intrinsic.t_bias.iter().map(|b| b / t as f64).collect(),
    };
    Ok(BiasReport {
        variant: BiasVariant::Exact,
        total: parts.totals(),
        score_bias: parts.score_bias,
        intrinsic_bias: parts.intrinsic_bias,
        truncation_n: intrinsic.truncation_n,
        tail: intrinsic.tail,
        approximate: Some(BiasParts { score_bias: approx.score_bias, intrinsic_bias: approx.intrinsic_bias }),
        ..approx
    })
}

/// Bias report from one of the closed-form special cases.
pub fn closed_form_bias(case: ClosedFormCase, theta0: &ThetaParams<f64>, t: usize, cfg: &BiasConfig) -> Result<BiasReport> {
    check_boundary(theta0.d, cfg.boundary_band)?;
    let cf = closed_form(case, theta0, t)?;
    let pin = matches!(case, ClosedFormCase::ArmaShort | ClosedFormCase::Ar1);
    let tf = t as f64;
    let parts = BiasParts {
        score_bias: cf.t_score.iter().map(|v| v / tf).collect(),
        intrinsic_bias: cf.t_intrinsic.iter().map(|v| v / tf).collect(),
    };
    Ok(BiasReport {
        t,
        theta0: theta0.clone(),
        variant: BiasVariant::Approximate,
        route: BiasRoute::ClosedForm,
        param_names: names_for(theta0, pin),
        total: parts.totals(),
        score_bias: parts.score_bias,
        intrinsic_bias: parts.intrinsic_bias,
        truncation_n: 0,
        tail: 0.0,
        approximate: None,
    })
}

/// Bias-corrected MCSS: θ̂_bcm = θ̂_m − B_T(φ̂_m).
pub fn bcm_correct(fit: &FitResult, cfg: &BiasConfig) -> Result<FitResult> {
    if fit.kind != EstimatorKind::Mcss {
        return Err(Error::Config(format!("bcm correction needs an MCSS fit, got {:?}", fit.kind)));
    }
    let arma = fit.theta_hat.arma()?;
    let cfg = BiasConfig { pin_d: fit.spec.fixed_d.is_some(), ..cfg.clone() };
    let tb = match cfg.bcm_variant {
        BiasVariant::Exact => exact_intrinsic_bias(&arma, fit.t, &cfg)?,
        BiasVariant::Approximate => approx_intrinsic_bias(&arma, &cfg)?,
    };
    let correction: Vec<f64> = tb.t_bias.iter().map(|b| b / fit.t as f64).collect();
    let free: Vec<f64> = fit.spec.free_from_theta(&fit.theta_hat).iter().zip(&correction).map(|(v, c)| v - c).collect();
    let mut out = fit.clone();
    out.kind = EstimatorKind::Bcm;
    out.theta_hat = fit.spec.theta_from_free(&free);
    out.correction = Some(correction);
    out.refresh_t_stats();
    Ok(out)
}

/// One cell of a theoretical bias table, ×100; `None` inside the d = 1/2 band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTableRow {
    pub d0: f64,
    pub t: usize,
    pub css: Option<f64>,
    pub css_known_mu: Option<f64>,
    pub mcss: Option<f64>,
}

/// Theoretical bias of d̂ for the three estimators over a (d0, T) grid.
pub fn bias_table(
    t_list: &[usize],
    d0_list: &[f64],
    arma: &ArmaParams<f64>,
    variant: BiasVariant,
    cfg: &BiasConfig,
) -> Result<Vec<BiasTableRow>> {
    if cfg.pin_d {
        return Err(Error::Config("bias tables report the memory parameter; d cannot be pinned".into()));
    }
    let intrinsic_approx = approx_intrinsic_bias(arma, cfg)?.t_bias[0];
    let mut rows = Vec::new();
    for &d0 in d0_list {
        for &t in t_list {
            if check_boundary(d0, cfg.boundary_band).is_err() {
                rows.push(BiasTableRow { d0, t, css: None, css_known_mu: None, mcss: None });
                continue;
            }
            let theta0 = ThetaParams::new(d0, arma.ar.clone(), arma.ma.clone());
            let (score, intr) = match variant {
                BiasVariant::Approximate => (approx_score_bias(&theta0, t, cfg)?[0], intrinsic_approx / t as f64),
                BiasVariant::Exact => (
                    exact_score_bias(&theta0, t, cfg)?[0],
                    exact_intrinsic_bias(arma, t, cfg)?.t_bias[0] / t as f64,
                ),
            };
            rows.push(BiasTableRow {
                d0,
                t,
                css: Some(100.0 * (score + intr)),
                css_known_mu: Some(100.0 * intr),
                mcss: Some(100.0 * intr),
            });
        }
    }
    Ok(rows)
}
