//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with the measured values before asserting.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use mcss_core::arma_poly::ArmaParams;
use mcss_core::bias::closed_form::arfima1d0_matrices;
use mcss_core::bias::engine::{layout, Limiting, Sequences};
use mcss_core::bias::{approx_bias, approx_intrinsic_bias, closed_form, BiasConfig, ClosedFormCase};
use mcss_core::breaks::{break_filter, DEFAULT_TRIM};
use mcss_core::estimator::{estimate, estimate_with, EstimatorConfig, EstimatorKind};
use mcss_core::frac_ops::{fracdiff_fft, fracdiff_naive, pi_coeffs, pi_coeffs_gamma};
use mcss_core::model::{ModelSpec, ThetaParams};
use mcss_core::objectives::{conv_coeffs, Objective, ObjectiveKind};
use mcss_core::simulate::{innovations, replication_seed, run_mc, simulate_path, ArmaSpec, DgpSpec, EstimatorKindName, McConfig, McStart};
use mcss_core::special_fn::{ZETA2, ZETA3};
use mcss_core::model::Deterministic;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    println!("{} [{id}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

// Reference theoretical biases ×100: rows d0 = −0.2..1.2 without 0.5; per T (32, 64, 128, 256) the CSS value,
// then the known-level and MCSS values, which coincide.
const TABLE2: [(f64, [f64; 4], [f64; 4]); 14] = [
    (-0.2, [-9.94, -5.63, -3.14, -1.74], [-4.16, -2.08, -1.04, -0.52]),
    (-0.1, [-9.97, -5.64, -3.15, -1.74], [-4.16, -2.08, -1.04, -0.52]),
    (0.0, [-9.95, -5.63, -3.14, -1.74], [-4.16, -2.08, -1.04, -0.52]),
    (0.1, [-9.81, -5.56, -3.11, -1.72], [-4.16, -2.08, -1.04, -0.52]),
    (0.2, [-9.42, -5.37, -3.01, -1.67], [-4.16, -2.08, -1.04, -0.52]),
    (0.3, [-8.32, -4.82, -2.74, -1.53], [-4.16, -2.08, -1.04, -0.52]),
    (0.4, [-4.18, -2.75, -1.70, -1.02], [-4.16, -2.08, -1.04, -0.52]),
    (0.6, [-11.29, -5.64, -2.82, -1.41], [-4.16, -2.08, -1.04, -0.52]),
    (0.7, [-6.71, -3.36, -1.68, -0.84], [-4.16, -2.08, -1.04, -0.52]),
    (0.8, [-5.26, -2.63, -1.31, -0.66], [-4.16, -2.08, -1.04, -0.52]),
    (0.9, [-4.56, -2.28, -1.14, -0.57], [-4.16, -2.08, -1.04, -0.52]),
    (1.0, [-4.16, -2.08, -1.04, -0.52], [-4.16, -2.08, -1.04, -0.52]),
    (1.1, [-3.91, -1.95, -0.98, -0.49], [-4.16, -2.08, -1.04, -0.52]),
    (1.2, [-3.73, -1.87, -0.93, -0.47], [-4.16, -2.08, -1.04, -0.52]),
];

#[test]
fn criterion_1_theoretical_bias_grid() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_mcss")).arg("bias-table").output().expect("running mcss");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<Vec<String>> = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    let find = |d0: f64, t: usize| {
        rows.iter()
            .find(|r| r[0].parse::<f64>().unwrap() == d0 && r[1].parse::<usize>().unwrap() == t)
            .unwrap_or_else(|| panic!("missing cell d0={d0} T={t}"))
    };
    let mut worst = 0.0f64;
    let mut cells = 0;
    for (d0, css, other) in TABLE2 {
        for (k, t) in [32usize, 64, 128, 256].into_iter().enumerate() {
            let r = find(d0, t);
            for (col, want) in [(2, css[k]), (3, other[k]), (4, other[k])] {
                let got: f64 = r[col].parse().unwrap();
                worst = worst.max((got - want).abs());
                cells += 1;
            }
        }
    }
    let dash = [32usize, 64, 128, 256].iter().all(|&t| find(0.5, t)[2..].iter().all(|c| c.is_empty()));
    let ok = worst <= 0.01 && dash && elapsed < 60.0;
    report(1, "theoretical bias grid", ok, &format!("{cells} cells, max |diff| = {worst:.4}, d0 = 0.5 blank = {dash}, {elapsed:.2} s"));
    assert!(ok);
}

#[test]
fn criterion_2_closed_form_cross_checks() {
    let start = Instant::now();
    let cfg = BiasConfig::default();
    let pinned = BiasConfig { pin_d: true, ..cfg.clone() };
    let mut worst = 0.0f64;
    let mut upd = |a: f64, b: f64| worst = worst.max((a - b).abs());

    let pure = approx_intrinsic_bias(&ArmaParams::white_noise(), &cfg).unwrap();
    upd(pure.t_bias[0], -3.0 * ZETA3 / (ZETA2 * ZETA2));

    for k in -4..=4 {
        let phi = k as f64 * 0.2;
        if phi != 0.0 {
            let arma = ArmaParams::new(vec![phi], vec![]).unwrap();
            let seqs = Sequences::adaptive(&arma, cfg.min_n, cfg.max_n, cfg.tol).unwrap();
            let m = Limiting::new(&seqs).moments(&layout(1, true));
            let (a, f, g, c) = arfima1d0_matrices(phi).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    upd(m.a[(i, j)], a[i][j]);
                    for l in 0..2 {
                        upd(m.f[l][(i, j)], f[l][i][j]);
                        upd(m.g[l][(i, j)], g[l][i][j]);
                        upd(m.c[l][(i, j)], c[l][i][j]);
                    }
                }
            }
            for d0 in [0.2, 0.8] {
                let th = ThetaParams::new(d0, vec![phi], vec![]);
                let t = 128;
                let cf = closed_form(ClosedFormCase::Arfima1d0, &th, t).unwrap();
                let gen = approx_bias(&th, t, &cfg).unwrap();
                for p in 0..2 {
                    upd(gen.intrinsic_bias[p] * t as f64, cf.t_intrinsic[p]);
                    upd(gen.score_bias[p] * t as f64, cf.t_score[p]);
                }
            }
        }
        let th = ThetaParams::new(0.0, vec![phi], vec![]);
        let gen = approx_bias(&th, 100, &pinned).unwrap();
        upd(gen.intrinsic_bias[0] * 100.0, -2.0 * phi);
        upd(gen.score_bias[0] * 100.0, -phi - 1.0);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst < 1e-6 && elapsed < 30.0;
    report(2, "closed-form cross-checks", ok, &format!("max |diff| = {worst:.2e}, {elapsed:.2} s"));
    assert!(ok);
}

#[test]
fn criterion_3_monte_carlo_reproduction() {
    let started = Instant::now();
    // The published tables come from one local search per replication started at
    // the true parameters; the global multi-start numbers are printed for reference.
    let run = |start: McStart| {
        let cfg = McConfig {
            d0: vec![0.4],
            arma0: vec![ArmaSpec { ar: vec![-0.5], ma: vec![] }],
            t: vec![64],
            estimators: vec![EstimatorKindName::Css, EstimatorKindName::Mcss, EstimatorKindName::Bcm],
            reps: 2500,
            base_seed: 20_240_601,
            mu0: 0.0,
            sigma0: 1.0,
            d_half_width: 5.0,
            estimator: None,
            start,
        };
        run_mc(&cfg).unwrap().cells.remove(0)
    };
    let cell = run(McStart::TrueValue);
    let global = run(McStart::MultiStart);
    let d = |c: &mcss_core::simulate::McCell, i: usize| c.estimators[i].params[0].clone();
    let (css, mcss, bcm) = (d(&cell, 0), d(&cell, 1), d(&cell, 2));
    let ok = (css.bias_x100 + 12.88).abs() <= 1.0
        && (mcss.bias_x100 + 4.64).abs() <= 0.8
        && (bcm.bias_x100 + 1.32).abs() <= 0.8
        && mcss.mse_x100 < css.mse_x100;
    let failed: Vec<usize> = cell.estimators.iter().map(|e| e.n_failed).collect();
    report(
        3,
        "Monte Carlo reproduction",
        ok,
        &format!(
            "start at theta0: bias x100 css {:.2} ({:.2}), mcss {:.2} ({:.2}), bcm {:.2} ({:.2}); mse x100 css {:.2}, mcss {:.2}; failures {failed:?}; \
             multi-start: css {:.2}, mcss {:.2}, bcm {:.2}; {:.1} s",
            css.bias_x100,
            css.se_x100,
            mcss.bias_x100,
            mcss.se_x100,
            bcm.bias_x100,
            bcm.se_x100,
            css.mse_x100,
            mcss.mse_x100,
            d(&global, 0).bias_x100,
            d(&global, 1).bias_x100,
            d(&global, 2).bias_x100,
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

/// Mean and standard error of the central-difference d-gradient of an objective at d0.
fn gradient_stats(kind: ObjectiveKind, d0: f64, t: usize, reps: u64) -> (f64, f64) {
    let dgp = DgpSpec::new(ThetaParams::fractional(d0), t);
    let h = 1e-5;
    let g: Vec<f64> = (0..reps)
        .map(|r| {
            let x = simulate_path(&dgp, replication_seed(77, 0, r)).unwrap();
            let obj = Objective::new(&x, kind, Deterministic::Constant).unwrap();
            let up = obj.value(&ThetaParams::fractional(d0 + h)).unwrap();
            let dn = obj.value(&ThetaParams::fractional(d0 - h)).unwrap();
            (up - dn) / (2.0 * h)
        })
        .collect();
    let n = g.len() as f64;
    let mean = g.iter().sum::<f64>() / n;
    let var = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn criterion_4_score_unbiasedness() {
    let (mm, ms) = gradient_stats(ObjectiveKind::Mcss, 0.2, 64, 10_000);
    let (cm, cs) = gradient_stats(ObjectiveKind::Css, 0.2, 64, 10_000);
    // a positive expected slope at d0 pulls the minimizer below d0
    let ok = (mm / ms).abs() < 4.0 && cm / cs > 4.0;
    report(
        4,
        "score unbiasedness",
        ok,
        &format!("mcss mean {mm:.4} (SE {ms:.4}, z {:.2}); css mean {cm:.4} (SE {cs:.4}, z {:.2})", mm / ms, cm / cs),
    );
    assert!(ok);
}

#[test]
fn criterion_5_numerical_kernels() {
    let start = Instant::now();
    let mut fft_worst = 0.0f64;
    for t in 1..=1024usize {
        let x = innovations(&DgpSpec::new(ThetaParams::fractional(0.0), t.max(8)), t as u64);
        let x = &x[..t];
        for d in [-0.7, 0.3, 1.4] {
            let a = fracdiff_fft(x, d);
            let b = fracdiff_naive(x, d);
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            let err = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) / scale;
            fft_worst = fft_worst.max(err);
        }
    }
    let mut pi_worst = 0.0f64;
    for a in [-1.3f64, -0.4, 0.3, 0.5, 1.7, 2.2] {
        let p = pi_coeffs(a, 201).coeffs;
        for (j, v) in p.iter().enumerate() {
            let g: f64 = pi_coeffs_gamma(a, j).unwrap();
            pi_worst = pi_worst.max((v - g).abs() / g.abs().max(1e-12));
        }
    }
    let mut dc_worst = 0.0f64;
    let theta = ThetaParams::new(0.3, vec![0.5], vec![-0.25]);
    let t = 120;
    let cc = conv_coeffs(&theta, t).unwrap();
    let v = theta.to_vec();
    let h = 1e-6f64;
    for k in 0..v.len() {
        let (mut up, mut dn) = (v.clone(), v.clone());
        up[k] += h;
        dn[k] -= h;
        let cu = conv_coeffs(&ThetaParams::from_slice(&up, 1, 1).unwrap(), t).unwrap().c;
        let cd = conv_coeffs(&ThetaParams::from_slice(&dn, 1, 1).unwrap(), t).unwrap().c;
        for i in 0..t {
            let fd: f64 = (cu[i] - cd[i]) / (2.0 * h);
            dc_worst = dc_worst.max((cc.dc[k][i] - fd).abs() / fd.abs().max(1.0));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = fft_worst < 1e-10 && pi_worst < 1e-10 && dc_worst < 1e-6 && elapsed < 10.0;
    report(
        5,
        "numerical kernels",
        ok,
        &format!("fft {fft_worst:.1e}, pi {pi_worst:.1e}, dc {dc_worst:.1e}, {elapsed:.2} s"),
    );
    assert!(ok);
}

#[test]
fn criterion_6_asymptotic_coverage() {
    let (d0, t, reps) = (0.2, 16_384usize, 200u64);
    let dgp = DgpSpec::new(ThetaParams::fractional(d0), t);
    let spec = ModelSpec::new(0, 0).centered_at(d0);
    let cfg = EstimatorConfig { compute_cov: false, ..EstimatorConfig::default() };
    let half = 1.959_963_984_540_054 * (6.0 / (std::f64::consts::PI.powi(2) * t as f64)).sqrt();
    let mut hits = 0;
    for r in 0..reps {
        let x = simulate_path(&dgp, replication_seed(16_384, 0, r)).unwrap();
        let fit = estimate_with(EstimatorKind::CssKnownMu(0.0), &spec, &x, &cfg).unwrap();
        if (fit.theta_hat.d - d0).abs() <= half {
            hits += 1;
        }
    }
    let cov = hits as f64 / reps as f64;
    let ok = (0.90..=0.99).contains(&cov);
    report(6, "asymptotic coverage", ok, &format!("{hits}/{reps} = {cov:.3}"));
    assert!(ok);
}

fn nile_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("MCSS_NILE_CSV") {
        return Some(PathBuf::from(p));
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/nile.csv");
    p.exists().then_some(p)
}

#[test]
fn criterion_7_nile() {
    let Some(path) = nile_path() else {
        println!("SKIP [7] Nile: no data file (set MCSS_NILE_CSV)");
        return;
    };
    let data = mcss_cli::dataset::load(&path, &mcss_cli::dataset::ColumnSel::Last, mcss_cli::dataset::Transform::None).unwrap();
    let b = break_filter(&data.values, DEFAULT_TRIM).unwrap();
    let fit = estimate(EstimatorKind::Mcss, &ModelSpec::new(0, 1), &b.filtered).unwrap();
    let se = fit.se.clone().unwrap();
    let (d, ma) = (fit.theta_hat.d, fit.theta_hat.ma[0]);
    let ok = (b.tau_hat - 0.27).abs() < 1e-12
        && (d + 0.12).abs() <= 0.02
        && (ma - 0.26).abs() <= 0.02
        && se.iter().all(|s| (s - 0.14).abs() <= 0.02);
    report(
        7,
        "Nile",
        ok,
        &format!(
            "tau {} (mu {:.2}, beta {:.2}), d {d:.4}, ma {ma:.4}, se [{:.4}, {:.4}]",
            b.tau_hat, b.mu_hat, b.beta_hat, se[0], se[1]
        ),
    );
    assert!(ok);
}
