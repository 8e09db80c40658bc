use std::path::Path;
use std::process::{Command, Output};

use mcss_cli::commands::{bias_table_csv, d_grid, mc_csv, BiasTableArgs, VariantArg, ArmaArgs};
use mcss_cli::dataset::{parse_csv, ColumnSel, Transform};
use mcss_core::bias::{bias_table, BiasConfig, BiasVariant};
use mcss_core::arma_poly::ArmaParams;
use mcss_core::model::ThetaParams;
use mcss_core::simulate::{innovations, DgpSpec};

fn mcss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcss")).args(args).output().expect("running mcss")
}

fn ok(args: &[&str]) -> String {
    let out = mcss(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn records(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn csv_header_is_optional() {
    let (name, v) = parse_csv("year,flow\n1,2.5\n2,3.5\n", &ColumnSel::Last).unwrap();
    assert_eq!(name, "flow");
    assert_eq!(v, vec![2.5, 3.5]);
    let (_, v) = parse_csv("2.5\n3.5\n", &ColumnSel::Last).unwrap();
    assert_eq!(v, vec![2.5, 3.5]);
    let (name, v) = parse_csv("year,flow\n1,2.5\n2,3.5\n", &ColumnSel::Name("year".into())).unwrap();
    assert_eq!(name, "year");
    assert_eq!(v, vec![1.0, 2.0]);
    let (_, v) = parse_csv("1,2.5\n2,3.5\n", &ColumnSel::Index(1)).unwrap();
    assert_eq!(v, vec![1.0, 2.0]);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let err = parse_csv("x\n1\n2\nabc\n4\n", &ColumnSel::Last).unwrap_err();
    assert!(err.to_string().contains("line 4"), "{err}");
    let err = parse_csv("x\n1\nNaN\n", &ColumnSel::Last).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    assert!(parse_csv("x\n", &ColumnSel::Last).is_err());
    assert!(parse_csv("a,b\n1,2\n", &ColumnSel::Name("c".into())).is_err());
}

#[test]
fn transforms() {
    let x = [1.0, std::f64::consts::E, 10.0];
    assert_eq!(Transform::None.apply(&x).unwrap(), x.to_vec());
    assert_eq!(Transform::Diff.apply(&x).unwrap().len(), 2);
    let ld = Transform::Logdiff.apply(&x).unwrap();
    assert!((ld[0] - 1.0).abs() < 1e-15);
    assert!((ld[1] - (10f64.ln() - 1.0)).abs() < 1e-15);
    assert!(Transform::Log.apply(&[1.0, 0.0]).is_err());
}

#[test]
fn bias_table_round_trips_exactly() {
    let args = BiasTableArgs {
        t: vec![32, 100],
        d0: vec![-0.2, 0.5, 0.75],
        arma: ArmaArgs { ar: vec![0.3], ma: vec![] },
        variant: VariantArg::Approximate,
        out: None,
    };
    let text = bias_table_csv(&args).unwrap();
    assert!(!text.contains('\r'));
    let rows = records(&text);
    let lib = bias_table(&[32, 100], &[-0.2, 0.5, 0.75], &ArmaParams::new(vec![0.3], vec![]).unwrap(), BiasVariant::Approximate, &BiasConfig::default()).unwrap();
    assert_eq!(rows.len(), lib.len());
    for (r, l) in rows.iter().zip(&lib) {
        if l.d0 == 0.5 {
            assert!(r[2..].iter().all(|c| c.is_empty()));
            continue;
        }
        assert_eq!(r[2].parse::<f64>().unwrap().to_bits(), l.css.unwrap().to_bits());
        assert_eq!(r[3].parse::<f64>().unwrap().to_bits(), l.css_known_mu.unwrap().to_bits());
        assert_eq!(r[4].parse::<f64>().unwrap().to_bits(), l.mcss.unwrap().to_bits());
    }
}

#[test]
fn modterm_curve_reference_values() {
    let text = ok(&["modterm-curve", "--t", "2,32,64,256", "--d-range", "0:1:0.5"]);
    let rows = records(&text);
    let m = |t: &str, d: &str| -> f64 { rows.iter().find(|r| r[0] == t && r[1] == d).unwrap()[2].parse().unwrap() };
    assert_eq!(m("2", "0"), 2.0);
    assert!((m("64", "1") - 1.0).abs() < 1e-15);
    assert!(m("32", "0") > m("256", "0"));
}

#[test]
fn d_grid_is_clean() {
    let g = d_grid(-1.0, 2.0, 0.1);
    assert_eq!(g.len(), 31);
    assert_eq!(g[13], 0.3);
    assert_eq!(*g.last().unwrap(), 2.0);
}

#[test]
fn simulate_white_noise_is_the_innovation_stream() {
    let text = ok(&["simulate", "--d0", "0", "--t", "50", "--seed", "9"]);
    let rows = records(&text);
    let eps = innovations(&DgpSpec::new(ThetaParams::fractional(0.0), 50), 9);
    for (r, e) in rows.iter().zip(&eps) {
        assert_eq!(r[1].parse::<f64>().unwrap(), *e);
    }
}

#[test]
fn estimate_is_deterministic_and_echoes_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let sim = ok(&["simulate", "--d0", "0.3", "--ar", "0.2", "--mu0", "5", "--t", "300", "--seed", "1"]);
    let data = write(dir.path(), "x.csv", &sim);
    let j = dir.path().join("a.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let table = ok(&["estimate", &data, "--p1", "1", "--estimator", "mcss", "--out", j.to_str().unwrap()]);
        assert!(table.contains("ar1"));
        runs.push(std::fs::read(&j).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let a = runs.remove(0);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "estimate");
    assert_eq!(v["inputs"]["p1"], 1);
    assert_eq!(v["result"]["fit"]["param_names"][1], "ar1");
    assert!((v["result"]["fit"]["mu_hat"].as_f64().unwrap() - 5.0).abs() < 2.0);
}

#[test]
fn constant_series_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "c.csv", &"4.25\n".repeat(40));
    let out = dir.path().join("c.json");
    let table = ok(&["estimate", &data, "--estimator", "css", "--out", out.to_str().unwrap()]);
    assert!(table.contains("degenerate"));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(v["result"]["fit"]["mu_hat"], 4.25);
    assert_eq!(v["result"]["fit"]["sigma2_hat"], 0.0);
    assert_eq!(v["result"]["fit"]["diagnostics"]["degenerate"], true);
}

#[test]
fn estimator_flag_validation() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.csv", &ok(&["simulate", "--d0", "0.2", "--t", "64"]));
    assert!(!mcss(&["estimate", &data, "--estimator", "css-mu0"]).status.success());
    assert!(!mcss(&["estimate", &data, "--estimator", "mcss", "--mu0", "1"]).status.success());
    assert!(mcss(&["estimate", &data, "--estimator", "css-mu0", "--mu0", "0", "--d-box", "-1:2"]).status.success());
    let bad = write(dir.path(), "bad.csv", "x\n1\n2\noops\n");
    let out = mcss(&["estimate", &bad]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn break_filter_command() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = (0..100).map(|t| format!("{}\n", if t <= 50 { 2.0 } else { 1.0 })).collect();
    let data = write(dir.path(), "s.csv", &body);
    let json = dir.path().join("b.json");
    let filt = dir.path().join("f.csv");
    ok(&["break-filter", &data, "--out", json.to_str().unwrap(), "--filtered-out", filt.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
    assert_eq!(v["result"]["fit"]["tau_hat"], 0.5);
    assert_eq!(v["result"]["fit"]["beta_hat"], 1.0);
    let rows = records(&std::fs::read_to_string(filt).unwrap());
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
}

const MC_CONFIG: &str = r#"{
  "d0": [0.4],
  "arma0": [{"ar": [-0.5], "ma": []}],
  "t": [40],
  "estimators": ["css", "css-mu0", "mcss", "bcm"],
  "reps": 12,
  "base_seed": 3
}"#;

#[test]
fn mc_outputs_are_consistent_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mc.json", MC_CONFIG);
    let p1 = dir.path().join("one");
    let p2 = dir.path().join("two");
    for (p, threads) in [(&p1, "1"), (&p2, "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_mcss"))
            .args(["mc", &cfg, "--out", p.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv1 = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(csv1, std::fs::read_to_string(dir.path().join("two.csv")).unwrap());
    let rows = records(&csv1);
    assert_eq!(rows.len(), 4 * 2);
    let css_d = rows.iter().find(|r| r[5] == "css" && r[6] == "d").unwrap();
    let mcss_d = rows.iter().find(|r| r[5] == "mcss" && r[6] == "d").unwrap();
    let (bc, bm): (f64, f64) = (css_d[8].parse().unwrap(), mcss_d[8].parse().unwrap());
    let delta: f64 = css_d[13].parse().unwrap();
    assert_eq!(delta, 100.0 * (bc.abs() - bm.abs()) / bm.abs());
    assert!(mcss_d[13].is_empty());

    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("one.json")).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["inputs"]["reps"], 12);
    let json_bias = v["result"]["cells"][0]["estimators"][0]["params"][0]["bias_x100"].as_f64().unwrap();
    assert_eq!(json_bias, bc);

    let res: mcss_core::simulate::McResult = serde_json::from_value(v["result"].clone()).unwrap();
    assert_eq!(mc_csv(&res).unwrap(), csv1);
}

#[test]
fn mc_rejects_zero_reps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mc.json", MC_CONFIG);
    let out = mcss(&["mc", &cfg, "--reps", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reps"));
}

#[test]
fn mc_start_rule_is_read_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mc.json", &MC_CONFIG.replace("\"reps\": 12", "\"reps\": 4, \"start\": \"true-value\""));
    let out = dir.path().join("tv");
    ok(&["mc", &cfg, "--out", out.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("tv.json")).unwrap()).unwrap();
    assert_eq!(v["inputs"]["start"], "true-value");
    let bad = write(dir.path(), "bad.json", &MC_CONFIG.replace("\"reps\": 12", "\"reps\": 4, \"start\": \"nearby\""));
    assert!(!mcss(&["mc", &bad]).status.success());
}
