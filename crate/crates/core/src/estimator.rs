//! Box-constrained estimation of θ for any objective, with a deterministic
//! multi-start, numerical-Hessian standard errors and the asymptotic A matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::engine::{layout, Limiting, Sequences};
use crate::bias::{bcm_correct, param_names, BiasConfig};
use crate::error::{Error, Result};
use crate::model::{Deterministic, ModelSpec, ThetaParams};
use crate::objectives::{Objective, ObjectiveKind, Sigma2Divisor};
use crate::optim::{nelder_mead, BoxMap, NmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "mu0")]
pub enum EstimatorKind {
    Css,
    CssKnownMu(f64),
    Mcss,
    /// MCSS minus the intrinsic bias at the estimated ARMA part.
    Bcm,
}

impl EstimatorKind {
    pub fn objective(self) -> ObjectiveKind {
        match self {
            EstimatorKind::Css => ObjectiveKind::Css,
            EstimatorKind::CssKnownMu(mu) => ObjectiveKind::CssKnownMu(mu),
            EstimatorKind::Mcss | EstimatorKind::Bcm => ObjectiveKind::Mcss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub nm: NmOptionsDef,
    /// Grid step for d starts.
    pub d_step: f64,
    /// Start values for every ARMA coefficient.
    pub arma_starts: Vec<f64>,
    /// Nelder–Mead runs from this many best grid points.
    pub n_best: usize,
    /// Relative step of the central-difference Hessian.
    pub hessian_step: f64,
    pub sigma2_divisor: Sigma2Divisor,
    pub compute_cov: bool,
    pub bias: BiasConfig,
    /// Single local search from this free-parameter point instead of the start grid.
    #[serde(default)]
    pub fixed_start: Option<Vec<f64>>,
}

/// Serializable mirror of [`NmOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmOptionsDef {
    pub step: f64,
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_evals: usize,
}

impl From<NmOptionsDef> for NmOptions {
    fn from(o: NmOptionsDef) -> Self {
        NmOptions { step: o.step, x_tol: o.x_tol, f_tol: o.f_tol, max_evals: o.max_evals }
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let nm = NmOptions::default();
        Self {
            nm: NmOptionsDef { step: nm.step, x_tol: nm.x_tol, f_tol: nm.f_tol, max_evals: nm.max_evals },
            d_step: 0.25,
            arma_starts: vec![-0.5, 0.0, 0.5],
            n_best: 3,
            hessian_step: 1e-4,
            sigma2_divisor: Sigma2Divisor::T,
            compute_cov: true,
            bias: BiasConfig::default(),
            fixed_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_starts: usize,
    pub n_evals: usize,
    pub converged: bool,
    pub at_boundary: bool,
    /// Max-norm of the central-difference gradient at θ̂; `None` at the box edge.
    pub grad_norm: Option<f64>,
    /// Residuals are numerically zero for the fitted θ (e.g. a constant series).
    pub degenerate: bool,
    pub cov_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: EstimatorKind,
    pub spec: ModelSpec,
    pub t: usize,
    pub theta_hat: ThetaParams<f64>,
    /// Names of the free parameters, in the order of `cov`, `se` and `t_stats`.
    pub param_names: Vec<String>,
    /// Fitted deterministic coefficients (level, then slope).
    pub coef: Vec<f64>,
    /// `None` for the known-level estimator.
    pub mu_hat: Option<f64>,
    pub sigma2_hat: f64,
    pub objective: f64,
    pub cov: Option<Vec<Vec<f64>>>,
    pub se: Option<Vec<f64>>,
    /// Estimates over standard errors, i.e. tests of a zero value.
    pub t_stats: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
    /// Bias subtracted from the MCSS fit (bcm only).
    pub correction: Option<Vec<f64>>,
}

impl FitResult {
    pub fn free_params(&self) -> Vec<f64> {
        self.spec.free_from_theta(&self.theta_hat)
    }

    pub fn refresh_t_stats(&mut self) {
        let est = self.free_params();
        self.t_stats = self.se.as_ref().map(|se| est.iter().zip(se).map(|(e, s)| e / s).collect());
    }
}

/// Asymptotic variance matrix A of √T(θ̂ − θ0), truncated at `n` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct AsyMatrix {
    pub a: DMatrix<f64>,
    pub n: usize,
    pub tail: f64,
}

pub fn asy_matrix(theta: &ThetaParams<f64>, n: usize) -> Result<AsyMatrix> {
    let arma = theta.arma()?;
    let seqs = Sequences::at(&arma, n.max(2))?;
    let eng = Limiting::new(&seqs);
    let params = layout(arma.p(), true);
    let a = DMatrix::from_fn(params.len(), params.len(), |j, l| eng.a_entry(params[j], params[l]));
    Ok(AsyMatrix { a, n: seqs.n, tail: seqs.tail })
}

fn start_grid(spec: &ModelSpec, cfg: &EstimatorConfig) -> Vec<Vec<f64>> {
    let mut d_values = Vec::new();
    if spec.fixed_d.is_none() {
        let (lo, hi) = spec.d_box;
        let mut k = 1usize;
        loop {
            let d = lo + k as f64 * cfg.d_step;
            if d >= hi {
                break;
            }
            d_values.push(d);
            k += 1;
        }
        if d_values.is_empty() {
            d_values.push(0.5 * (lo + hi));
        }
    }
    let mut grid: Vec<Vec<f64>> = if spec.fixed_d.is_none() { d_values.iter().map(|&d| vec![d]).collect() } else { vec![Vec::new()] };
    for _ in 0..spec.p() {
        grid = grid
            .into_iter()
            .flat_map(|g| {
                cfg.arma_starts.iter().map(move |&a| {
                    let mut g = g.clone();
                    g.push(a);
                    g
                })
            })
            .collect();
    }
    grid
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

pub fn estimate(kind: EstimatorKind, spec: &ModelSpec, x: &[f64]) -> Result<FitResult> {
    estimate_with(kind, spec, x, &EstimatorConfig::default())
}

pub fn estimate_with(kind: EstimatorKind, spec: &ModelSpec, x: &[f64], cfg: &EstimatorConfig) -> Result<FitResult> {
    spec.validate()?;
    let t = x.len();
    if t <= spec.p() + 2 {
        return Err(Error::Domain(format!("need T > p + 2, got T = {t} with p = {}", spec.p())));
    }
    let obj = Objective::new(x, kind.objective(), spec.deterministic)?;
    let (lo, hi) = spec.bounds();
    let map = BoxMap::new(lo.clone(), hi.clone());
    let f = |free: &[f64]| obj.value(&spec.theta_from_free(free)).unwrap_or(f64::INFINITY);

    let (free_hat, n_starts, n_evals, converged) = if spec.n_free() == 0 {
        (Vec::new(), 0, 1, true)
    } else {
        let grid = match &cfg.fixed_start {
            Some(s) => {
                let inside = s.len() == spec.n_free() && s.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| l < v && v < h);
                if !inside {
                    return Err(Error::Config(format!("fixed start {s:?} is not strictly inside the parameter box")));
                }
                vec![s.clone()]
            }
            None => start_grid(spec, cfg),
        };
        let values: Vec<f64> = grid.par_iter().map(|g| f(g)).collect();
        let mut ranked: Vec<usize> = (0..grid.len()).filter(|&i| values[i].is_finite()).collect();
        if ranked.is_empty() {
            return Err(Error::AllStartsFailed);
        }
        ranked.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        ranked.truncate(cfg.n_best.max(1));
        let opts: NmOptions = cfg.nm.into();
        let legs: Vec<_> = ranked.par_iter().map(|&i| nelder_mead(f, &map, &grid[i], &opts)).collect();
        let mut evals = grid.len() + legs.iter().map(|r| r.n_evals).sum::<usize>();
        let best = legs
            .iter()
            .min_by(|a, b| a.f.total_cmp(&b.f).then_with(|| lex_cmp(&a.x, &b.x)))
            .expect("at least one leg");
        let polish = nelder_mead(f, &map, &best.x, &opts);
        evals += polish.n_evals;
        let fin = if polish.f <= best.f { polish } else { best.clone() };
        (fin.x, ranked.len(), evals, fin.converged)
    };

    let theta_hat = spec.theta_from_free(&free_hat);
    let ev = obj.evaluate(&theta_hat)?;
    let at_boundary = map.dim() > 0 && map.at_boundary(&free_hat, 1e-6);
    let scale: f64 = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let degenerate = 2.0 * ev.half_ssr <= 1e-20 * scale;
    let denom = match cfg.sigma2_divisor {
        Sigma2Divisor::T => t,
        Sigma2Divisor::TMinusOne => t - 1,
    } as f64;
    let sigma2_hat = if degenerate { 0.0 } else { 2.0 * ev.half_ssr / denom };

    let grad_norm = (!at_boundary && !degenerate && map.dim() > 0).then(|| {
        (0..free_hat.len())
            .map(|i| {
                let h = 1e-6 * free_hat[i].abs().max(1.0);
                let mut p = free_hat.clone();
                let mut m = free_hat.clone();
                p[i] += h;
                m[i] -= h;
                ((f(&p) - f(&m)) / (2.0 * h)).abs()
            })
            .fold(0.0, f64::max)
    });

    let (cov, cov_error) = if !cfg.compute_cov || map.dim() == 0 || degenerate {
        (None, degenerate.then(|| "degenerate fit".to_string()))
    } else {
        match hessian_cov_free(&f, &free_hat, sigma2_hat, cfg.hessian_step) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let se = cov.as_ref().map(|c| (0..c.len()).map(|i| c[i][i].max(0.0).sqrt()).collect::<Vec<_>>());
    let mu_hat = match (kind, spec.deterministic) {
        (EstimatorKind::CssKnownMu(_), _) | (_, Deterministic::None) => None,
        _ => ev.coef.first().copied(),
    };
    let mut fit = FitResult {
        kind: if kind == EstimatorKind::Bcm { EstimatorKind::Mcss } else { kind },
        spec: spec.clone(),
        t,
        theta_hat,
        param_names: param_names(spec.p1, spec.p2, spec.fixed_d.is_none()),
        coef: ev.coef,
        mu_hat,
        sigma2_hat,
        objective: ev.value,
        cov,
        se,
        t_stats: None,
        diagnostics: Diagnostics {
            n_starts,
            n_evals,
            converged: converged && !at_boundary,
            at_boundary,
            grad_norm,
            degenerate,
            cov_error,
        },
        correction: None,
    };
    fit.refresh_t_stats();
    if kind == EstimatorKind::Bcm {
        return bcm_correct(&fit, &cfg.bias);
    }
    Ok(fit)
}

/// σ̂² H^{-1}, H the symmetrized central-difference Hessian of `f` at `x`.
pub fn hessian_cov_free<F>(f: &F, x: &[f64], sigma2: f64, rel_step: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| rel_step * v.abs().max(1.0)).collect();
    let at = |di: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, s) in di {
            p[i] += s;
        }
        f(&p)
    };
    let f0 = f(x);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])]) - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularHessian);
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    let inv = sym.try_inverse().ok_or(Error::SingularHessian)?;
    let cov = (&inv + inv.transpose()) * (0.5 * sigma2);
    if cov.iter().any(|v| !v.is_finite()) || (0..n).any(|i| cov[(i, i)] <= 0.0) {
        return Err(Error::SingularHessian);
    }
    Ok((0..n).map(|i| (0..n).map(|j| cov[(i, j)]).collect()).collect())
}

/// Numerical-Hessian covariance of an objective at θ̂ over the free parameters of `spec`.
pub fn hessian_cov(kind: EstimatorKind, spec: &ModelSpec, theta_hat: &ThetaParams<f64>, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let obj = Objective::new(x, kind.objective(), spec.deterministic)?;
    let f = |free: &[f64]| obj.value(&spec.theta_from_free(free)).unwrap_or(f64::INFINITY);
    let ev = obj.evaluate(theta_hat)?;
    let sigma2 = 2.0 * ev.half_ssr / x.len() as f64;
    hessian_cov_free(&f, &spec.free_from_theta(theta_hat), sigma2, EstimatorConfig::default().hessian_step)
}
