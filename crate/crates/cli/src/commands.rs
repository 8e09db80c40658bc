//! Subcommand arguments and their pure implementations. Each `run_*` returns
//! the text it would emit so the binary and the tests share one code path.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mcss_core::arma_poly::ArmaParams;
use mcss_core::bias::{bias_table, BiasConfig, BiasVariant};
use mcss_core::breaks::{break_filter, BreakFit, DEFAULT_TRIM};
use mcss_core::estimator::{estimate_with, EstimatorConfig, EstimatorKind, FitResult};
use mcss_core::model::{ModelSpec, ThetaParams};
use mcss_core::objectives::mod_term;
use mcss_core::simulate::{delta_pct, run_mc, simulate_path, DgpSpec, EstimatorKindName, McConfig, McResult};
use serde::Serialize;

use crate::dataset::{load, ColumnSel, DatasetFrame, Transform};
use crate::output::{csv_string, json, list, num, opt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Css,
    CssMu0,
    Mcss,
    Bcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Approximate,
    Exact,
}

impl From<VariantArg> for BiasVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Approximate => BiasVariant::Approximate,
            VariantArg::Exact => BiasVariant::Exact,
        }
    }
}

/// `lo:hi`
pub fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("need finite lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// `lo:hi:step`
pub fn parse_grid(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if !(v.iter().all(|x| x.is_finite()) && v[0] <= v[1] && v[2] > 0.0) {
        return Err(format!("need lo <= hi and step > 0, got {s}"));
    }
    Ok((v[0], v[1], v[2]))
}

/// ARMA part shared by several subcommands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ArmaArgs {
    /// AR coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub ar: Vec<f64>,
    /// MA coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub ma: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV file with one observation per row; a header row is optional.
    pub input: PathBuf,
    /// Column by header name or 1-based position; default is the last column.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum, default_value_t = Transform::None)]
    pub transform: Transform,
}

impl InputArgs {
    pub fn load(&self) -> Result<DatasetFrame> {
        let sel = match &self.column {
            None => ColumnSel::Last,
            Some(c) => c.parse().map_err(anyhow::Error::msg)?,
        };
        load(&self.input, &sel, self.transform)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: InputArgs,
    #[arg(long, default_value_t = 0)]
    pub p1: usize,
    #[arg(long, default_value_t = 0)]
    pub p2: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Mcss)]
    pub estimator: EstimatorArg,
    /// Known level, required by css-mu0.
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    /// Search interval for d.
    #[arg(long, value_parser = parse_range, default_value = "-5:5", allow_hyphen_values = true)]
    pub d_box: (f64, f64),
    /// Remove a least-squares level break before estimation.
    #[arg(long)]
    pub break_filter: bool,
    #[arg(long, default_value_t = DEFAULT_TRIM)]
    pub trim: f64,
    /// Intrinsic bias subtracted by bcm.
    #[arg(long, value_enum, default_value_t = VariantArg::Exact)]
    pub bcm_variant: VariantArg,
    /// Write the JSON result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakSummary {
    pub tau_hat: f64,
    pub break_index: usize,
    pub mu_hat: f64,
    pub beta_hat: f64,
    pub ssr: f64,
}

impl From<&BreakFit> for BreakSummary {
    fn from(b: &BreakFit) -> Self {
        Self { tau_hat: b.tau_hat, break_index: b.break_index, mu_hat: b.mu_hat, beta_hat: b.beta_hat, ssr: b.ssr }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateOutput {
    pub dataset: DatasetMeta,
    pub break_fit: Option<BreakSummary>,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetMeta {
    pub name: String,
    pub source: String,
    pub transform: Transform,
    pub raw_len: usize,
    pub t: usize,
}

impl From<&DatasetFrame> for DatasetMeta {
    fn from(d: &DatasetFrame) -> Self {
        Self { name: d.name.clone(), source: d.source.clone(), transform: d.transform, raw_len: d.raw_len, t: d.len() }
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<EstimateOutput> {
    let data = args.data.load()?;
    let (x, break_fit) = if args.break_filter {
        let b = break_filter(&data.values, args.trim)?;
        let s = BreakSummary::from(&b);
        (b.filtered, Some(s))
    } else {
        (data.values.clone(), None)
    };
    let kind = match (args.estimator, args.mu0) {
        (EstimatorArg::CssMu0, Some(mu)) => EstimatorKind::CssKnownMu(mu),
        (EstimatorArg::CssMu0, None) => bail!("--estimator css-mu0 needs --mu0"),
        (_, Some(_)) => bail!("--mu0 applies only to --estimator css-mu0"),
        (EstimatorArg::Css, None) => EstimatorKind::Css,
        (EstimatorArg::Mcss, None) => EstimatorKind::Mcss,
        (EstimatorArg::Bcm, None) => EstimatorKind::Bcm,
    };
    let spec = ModelSpec::new(args.p1, args.p2).with_d_box(args.d_box.0, args.d_box.1);
    let mut cfg = EstimatorConfig::default();
    cfg.bias = BiasConfig { bcm_variant: args.bcm_variant.into(), ..cfg.bias };
    let fit = estimate_with(kind, &spec, &x, &cfg)?;
    Ok(EstimateOutput { dataset: DatasetMeta::from(&data), break_fit, fit })
}

pub fn estimate_json(args: &EstimateArgs, out: &EstimateOutput) -> Result<String> {
    json("estimate", args, out)
}

/// Human-readable parameter table.
pub fn estimate_table(out: &EstimateOutput) -> String {
    let fit = &out.fit;
    let mut s = format!(
        "{} ({} obs, transform {}), ARFIMA({},d,{}) by {}\n",
        out.dataset.name,
        fit.t,
        out.dataset.transform,
        fit.spec.p1,
        fit.spec.p2,
        match fit.kind {
            EstimatorKind::Css => "css".to_string(),
            EstimatorKind::CssKnownMu(mu) => format!("css-mu0 (mu0 = {mu})"),
            EstimatorKind::Mcss => "mcss".to_string(),
            EstimatorKind::Bcm => "bcm".to_string(),
        }
    );
    if let Some(b) = &out.break_fit {
        s += &format!(
            "level break: tau = {:.4} (obs {}), mu = {:.4}, beta = {:.4}\n",
            b.tau_hat, b.break_index, b.mu_hat, b.beta_hat
        );
    }
    s += &format!("{:<8}{:>12}{:>12}{:>10}\n", "param", "estimate", "std.err", "t-stat");
    let est = fit.free_params();
    for (i, name) in fit.param_names.iter().enumerate() {
        let se = fit.se.as_ref().map(|v| v[i]);
        let ts = fit.t_stats.as_ref().map(|v| v[i]);
        s += &format!(
            "{:<8}{:>12.4}{:>12}{:>10}\n",
            name,
            est[i],
            se.map_or("-".into(), |v| format!("{v:.4}")),
            ts.map_or("-".into(), |v| format!("{v:.2}"))
        );
    }
    if let Some(mu) = fit.mu_hat {
        s += &format!("{:<8}{:>12.4}\n", "mu", mu);
    }
    s += &format!("sigma2 = {:.6}, objective = {:.6}\n", fit.sigma2_hat, fit.objective);
    let d = &fit.diagnostics;
    if d.degenerate {
        s += "warning: degenerate fit, residuals are numerically zero\n";
    }
    if d.at_boundary {
        s += "warning: estimate on the boundary of the parameter box\n";
    }
    if let Some(e) = &d.cov_error {
        s += &format!("warning: no standard errors ({e})\n");
    }
    s
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BreakFilterArgs {
    #[command(flatten)]
    pub data: InputArgs,
    #[arg(long, default_value_t = DEFAULT_TRIM)]
    pub trim: f64,
    /// Write the JSON result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the filtered series as CSV (t,x) here.
    #[arg(long)]
    pub filtered_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakOutput {
    pub dataset: DatasetMeta,
    pub fit: BreakFit,
}

pub fn break_filter_cmd(args: &BreakFilterArgs) -> Result<BreakOutput> {
    let data = args.data.load()?;
    let fit = break_filter(&data.values, args.trim)?;
    Ok(BreakOutput { dataset: DatasetMeta::from(&data), fit })
}

pub fn series_csv(x: &[f64]) -> Result<String> {
    let rows: Vec<Vec<String>> = x.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), num(*v)]).collect();
    csv_string(&["t", "x"], &rows)
}

fn default_d0() -> Vec<f64> {
    (-2..=12).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BiasTableArgs {
    /// Sample sizes.
    #[arg(long = "t", value_delimiter = ',', default_values_t = [32usize, 64, 128, 256])]
    pub t: Vec<usize>,
    /// True memory parameters; default −0.2, −0.1, …, 1.2.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub d0: Vec<f64>,
    #[command(flatten)]
    pub arma: ArmaArgs,
    #[arg(long, value_enum, default_value_t = VariantArg::Approximate)]
    pub variant: VariantArg,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn bias_table_csv(args: &BiasTableArgs) -> Result<String> {
    let arma = ArmaParams::new(args.arma.ar.clone(), args.arma.ma.clone())?;
    let d0 = if args.d0.is_empty() { default_d0() } else { args.d0.clone() };
    let rows = bias_table(&args.t, &d0, &arma, args.variant.into(), &BiasConfig::default())?;
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.d0), r.t.to_string(), opt(r.css), opt(r.css_known_mu), opt(r.mcss)])
        .collect();
    csv_string(&["d0", "T", "css", "css_mu0", "mcss"], &rows)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    /// JSON study configuration.
    pub config: PathBuf,
    /// Override the number of replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output prefix; writes PREFIX.csv and PREFIX.json. Without it the CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_mc_config(args: &McArgs) -> Result<McConfig> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg: McConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_mc_cmd(cfg: &McConfig) -> Result<McResult> {
    Ok(run_mc(cfg)?)
}

/// One row per (cell, estimator, parameter). The Δ% column is filled on CSS
/// rows when MCSS is part of the same study.
pub fn mc_csv(res: &McResult) -> Result<String> {
    let mut rows = Vec::new();
    for (ci, cell) in res.cells.iter().enumerate() {
        let mcss = cell.estimators.iter().find(|e| e.estimator == EstimatorKindName::Mcss);
        for est in &cell.estimators {
            for (j, p) in est.params.iter().enumerate() {
                let delta = match (est.estimator, mcss) {
                    (EstimatorKindName::Css, Some(m)) => Some(delta_pct(p.bias_x100, m.params[j].bias_x100)),
                    _ => None,
                };
                rows.push(vec![
                    ci.to_string(),
                    num(cell.dgp.theta0.d),
                    list(&cell.dgp.theta0.ar),
                    list(&cell.dgp.theta0.ma),
                    cell.dgp.t.to_string(),
                    est.estimator.label().to_string(),
                    p.name.clone(),
                    num(p.true_value),
                    num(p.bias_x100),
                    num(p.mse_x100),
                    num(p.se_x100),
                    est.n_ok.to_string(),
                    est.n_failed.to_string(),
                    opt(delta),
                ]);
            }
        }
    }
    csv_string(
        &[
            "cell", "d0", "ar", "ma", "T", "estimator", "param", "true_value", "bias_x100", "mse_x100", "se_x100", "n_ok",
            "n_failed", "delta_pct_abs_bias",
        ],
        &rows,
    )
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModtermArgs {
    #[arg(long = "t", value_delimiter = ',', default_values_t = [32usize, 64, 128, 256])]
    pub t: Vec<usize>,
    /// d grid as lo:hi:step.
    #[arg(long, value_parser = parse_grid, default_value = "-1:2:0.01", allow_hyphen_values = true)]
    pub d_range: (f64, f64, f64),
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn d_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // rounding keeps lo + k·step free of binary noise such as 0.30000000000000004
    (0..=n).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect()
}

pub fn modterm_csv(args: &ModtermArgs) -> Result<String> {
    let (lo, hi, step) = args.d_range;
    let mut rows = Vec::new();
    for &t in &args.t {
        for d in d_grid(lo, hi, step) {
            let m = mod_term(&ThetaParams::fractional(d), t)?;
            rows.push(vec![t.to_string(), num(d), num(m)]);
        }
    }
    csv_string(&["T", "d", "m"], &rows)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub d0: f64,
    #[command(flatten)]
    pub arma: ArmaArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    #[arg(long = "t")]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn simulate_csv(args: &SimulateArgs) -> Result<String> {
    let mut spec = DgpSpec::new(ThetaParams::new(args.d0, args.arma.ar.clone(), args.arma.ma.clone()), args.t);
    spec.mu0 = args.mu0;
    spec.sigma0 = args.sigma0;
    series_csv(&simulate_path(&spec, args.seed)?)
}
