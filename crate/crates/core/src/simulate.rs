//! Type-II ARFIMA data generation and a reproducible Monte Carlo harness.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{bcm_correct, param_names};
use crate::error::{Error, Result};
use crate::estimator::{estimate_with, EstimatorConfig, EstimatorKind, FitResult};
use crate::frac_ops::fracdiff_fft;
use crate::model::{ModelSpec, ThetaParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Innovation {
    Gaussian,
    /// Student-t with `df` > 2 degrees of freedom, rescaled to unit variance.
    StudentT { df: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub theta0: ThetaParams<f64>,
    pub mu0: f64,
    pub sigma0: f64,
    pub t: usize,
    pub innovation: Innovation,
}

impl DgpSpec {
    pub fn new(theta0: ThetaParams<f64>, t: usize) -> Self {
        Self { theta0, mu0: 0.0, sigma0: 1.0, t, innovation: Innovation::Gaussian }
    }

    pub fn validate(&self) -> Result<()> {
        self.theta0.arma()?;
        if self.t < 8 {
            return Err(Error::Config(format!("T must be at least 8, got {}", self.t)));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !self.theta0.d.is_finite() || !self.mu0.is_finite() {
            return Err(Error::Config("d0 and mu0 must be finite".into()));
        }
        if let Innovation::StudentT { df } = self.innovation {
            if !(df > 2.0) {
                return Err(Error::Config(format!("Student-t innovations need df > 2, got {df}")));
            }
        }
        Ok(())
    }
}

/// ε_t for t = 1..T with the given seed.
pub fn innovations(spec: &DgpSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match spec.innovation {
        Innovation::Gaussian => {
            let n = Normal::new(0.0, spec.sigma0).expect("validated sigma0");
            (0..spec.t).map(|_| n.sample(&mut rng)).collect()
        }
        Innovation::StudentT { df } => {
            let st = StudentT::new(df).expect("validated df");
            let scale = spec.sigma0 * ((df - 2.0) / df).sqrt();
            (0..spec.t).map(|_| scale * st.sample(&mut rng)).collect()
        }
    }
}

/// x_t = μ0 + Δ_+^{−d0} u_t with φ(L; φ0) u_t = ε_t and zero initial values.
pub fn simulate_path(spec: &DgpSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(path_from_innovations(spec, &innovations(spec, seed))?)
}

pub fn path_from_innovations(spec: &DgpSpec, eps: &[f64]) -> Result<Vec<f64>> {
    let arma = spec.theta0.arma()?;
    let u = arma.filter_omega(eps);
    Ok(fracdiff_fft(&u, -spec.theta0.d).into_iter().map(|v| v + spec.mu0).collect())
}

/// Seed of replication `r` in cell `cell`, a SplitMix64 finalizer over the
/// three inputs so that streams do not depend on scheduling.
pub fn replication_seed(base_seed: u64, cell: u64, r: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base_seed) ^ cell) ^ r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpec {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub d0: Vec<f64>,
    pub arma0: Vec<ArmaSpec>,
    pub t: Vec<usize>,
    pub estimators: Vec<EstimatorKindName>,
    pub reps: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub mu0: f64,
    #[serde(default = "one")]
    pub sigma0: f64,
    /// Half-width of the d box around d0.
    #[serde(default = "five")]
    pub d_half_width: f64,
    #[serde(default)]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default)]
    pub start: McStart,
}

/// Where each replication's search starts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McStart {
    /// The estimator's deterministic multi-start grid (global search).
    #[default]
    MultiStart,
    /// One local search from the true parameters.
    TrueValue,
}

fn one() -> f64 {
    1.0
}

fn five() -> f64 {
    5.0
}

/// Estimators in a study. The known-level variant uses the true μ0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKindName {
    Css,
    CssMu0,
    Mcss,
    Bcm,
}

impl EstimatorKindName {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKindName::Css => "css",
            EstimatorKindName::CssMu0 => "css-mu0",
            EstimatorKindName::Mcss => "mcss",
            EstimatorKindName::Bcm => "bcm",
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.d0.is_empty() || self.arma0.is_empty() || self.t.is_empty() || self.estimators.is_empty() {
            return Err(Error::Config("empty Monte Carlo grid or estimator list".into()));
        }
        if !(self.d_half_width > 0.0) {
            return Err(Error::Config("d_half_width must be positive".into()));
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    /// Grid cells in (d0, arma0, T) order.
    pub fn cells(&self) -> Vec<DgpSpec> {
        let mut out = Vec::new();
        for &d0 in &self.d0 {
            for arma in &self.arma0 {
                for &t in &self.t {
                    out.push(DgpSpec {
                        theta0: ThetaParams::new(d0, arma.ar.clone(), arma.ma.clone()),
                        mu0: self.mu0,
                        sigma0: self.sigma0,
                        t,
                        innovation: Innovation::Gaussian,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub name: String,
    pub true_value: f64,
    pub bias_x100: f64,
    pub mse_x100: f64,
    /// Standard error of the Monte Carlo mean, ×100.
    pub se_x100: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub estimator: EstimatorKindName,
    pub n_ok: usize,
    pub n_failed: usize,
    pub params: Vec<ParamStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub dgp: DgpSpec,
    pub reps: usize,
    pub estimators: Vec<EstimatorStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub base_seed: u64,
    pub cells: Vec<McCell>,
}

/// 100 (|bias_css| − |bias_mcss|) / |bias_mcss|.
pub fn delta_pct(bias_css: f64, bias_mcss: f64) -> f64 {
    100.0 * (bias_css.abs() - bias_mcss.abs()) / bias_mcss.abs()
}

fn usable(fit: &FitResult) -> bool {
    !fit.diagnostics.at_boundary && fit.theta_hat.to_vec().iter().all(|v| v.is_finite())
}

/// Errors θ̂ − θ0 of every requested estimator for one replication; `None` marks a failure.
pub fn replicate(
    dgp: &DgpSpec,
    estimators: &[EstimatorKindName],
    d_half_width: f64,
    cfg: &EstimatorConfig,
    start: McStart,
    seed: u64,
) -> Result<Vec<Option<Vec<f64>>>> {
    let x = simulate_path(dgp, seed)?;
    let spec = ModelSpec::new(dgp.theta0.ar.len(), dgp.theta0.ma.len())
        .with_d_box(dgp.theta0.d - d_half_width, dgp.theta0.d + d_half_width);
    let truth = dgp.theta0.to_vec();
    let local;
    let cfg = match start {
        McStart::MultiStart => cfg,
        McStart::TrueValue => {
            local = EstimatorConfig { fixed_start: Some(truth.clone()), ..cfg.clone() };
            &local
        }
    };
    let err = |fit: &FitResult| -> Option<Vec<f64>> {
        usable(fit).then(|| fit.theta_hat.to_vec().iter().zip(&truth).map(|(a, b)| a - b).collect())
    };
    let needs_mcss = estimators.iter().any(|e| matches!(e, EstimatorKindName::Mcss | EstimatorKindName::Bcm));
    let mcss = if needs_mcss { estimate_with(EstimatorKind::Mcss, &spec, &x, cfg).ok() } else { None };
    Ok(estimators
        .iter()
        .map(|e| match e {
            EstimatorKindName::Css => estimate_with(EstimatorKind::Css, &spec, &x, cfg).ok().and_then(|f| err(&f)),
            EstimatorKindName::CssMu0 => {
                estimate_with(EstimatorKind::CssKnownMu(dgp.mu0), &spec, &x, cfg).ok().and_then(|f| err(&f))
            }
            EstimatorKindName::Mcss => mcss.as_ref().and_then(err),
            EstimatorKindName::Bcm => mcss
                .as_ref()
                .filter(|f| usable(f))
                .and_then(|f| bcm_correct(f, &cfg.bias).ok())
                .and_then(|f| err(&f)),
        })
        .collect())
}

pub fn run_mc(config: &McConfig) -> Result<McResult> {
    config.validate()?;
    let mut cfg = config.estimator.clone().unwrap_or_default();
    cfg.compute_cov = false;
    let mut cells = Vec::new();
    for (ci, dgp) in config.cells().into_iter().enumerate() {
        let reps: Vec<Result<Vec<Option<Vec<f64>>>>> = (0..config.reps)
            .into_par_iter()
            .map(|r| {
                let seed = replication_seed(config.base_seed, ci as u64, r as u64);
                replicate(&dgp, &config.estimators, config.d_half_width, &cfg, config.start, seed)
            })
            .collect();
        let reps: Vec<Vec<Option<Vec<f64>>>> = reps.into_iter().collect::<Result<_>>()?;
        let names = param_names(dgp.theta0.ar.len(), dgp.theta0.ma.len(), true);
        let truth = dgp.theta0.to_vec();
        let estimators = config
            .estimators
            .iter()
            .enumerate()
            .map(|(ei, &estimator)| {
                let k = names.len();
                let mut s1 = vec![Kahan::default(); k];
                let mut s2 = vec![Kahan::default(); k];
                let mut n_ok = 0usize;
                for rep in &reps {
                    if let Some(e) = &rep[ei] {
                        n_ok += 1;
                        for j in 0..k {
                            s1[j].add(e[j]);
                            s2[j].add(e[j] * e[j]);
                        }
                    }
                }
                let n = n_ok as f64;
                let params = (0..k)
                    .map(|j| {
                        let mean = s1[j].sum / n;
                        let mse = s2[j].sum / n;
                        let var = if n_ok > 1 { (mse - mean * mean).max(0.0) * n / (n - 1.0) } else { 0.0 };
                        ParamStats {
                            name: names[j].clone(),
                            true_value: truth[j],
                            bias_x100: 100.0 * mean,
                            mse_x100: 100.0 * mse,
                            se_x100: 100.0 * (var / n).sqrt(),
                        }
                    })
                    .collect();
                EstimatorStats { estimator, n_ok, n_failed: config.reps - n_ok, params }
            })
            .collect();
        cells.push(McCell { dgp, reps: config.reps, estimators });
    }
    Ok(McResult { base_seed: config.base_seed, cells })
}
