use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use mcss_cli::commands::{self, BiasTableArgs, BreakFilterArgs, EstimateArgs, McArgs, ModtermArgs, SimulateArgs};
use mcss_cli::output::{emit, json};

/// Estimation and bias analysis of ARFIMA models with an unknown constant.
#[derive(Debug, Parser)]
#[command(name = "mcss", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Fit an ARFIMA(p1,d,p2) model to a CSV column.
    Estimate(EstimateArgs),
    /// Least-squares level-break filter.
    BreakFilter(BreakFilterArgs),
    /// Theoretical bias (×100) of the memory estimates over a (d0, T) grid.
    BiasTable(BiasTableArgs),
    /// Monte Carlo study from a JSON configuration.
    Mc(McArgs),
    /// Pure fractional modification term m(d) for plotting.
    ModtermCurve(ModtermArgs),
    /// Simulate a type-II ARFIMA path.
    Simulate(SimulateArgs),
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Estimate(a) => {
            let out = commands::estimate(&a)?;
            print!("{}", commands::estimate_table(&out));
            if let Some(p) = &a.out {
                emit(Some(p), &commands::estimate_json(&a, &out)?)?;
            }
        }
        Cmd::BreakFilter(a) => {
            let out = commands::break_filter_cmd(&a)?;
            let b = &out.fit;
            println!(
                "{}: tau = {} (obs {} of {}), mu = {}, beta = {}, ssr = {}",
                out.dataset.name,
                b.tau_hat,
                b.break_index,
                out.dataset.t,
                b.mu_hat,
                b.beta_hat,
                b.ssr
            );
            if let Some(p) = &a.out {
                emit(Some(p), &json("break-filter", &a, &out)?)?;
            }
            if let Some(p) = &a.filtered_out {
                emit(Some(p), &commands::series_csv(&b.filtered)?)?;
            }
        }
        Cmd::BiasTable(a) => emit(a.out.as_deref(), &commands::bias_table_csv(&a)?)?,
        Cmd::Mc(a) => {
            let cfg = commands::load_mc_config(&a)?;
            let res = commands::run_mc_cmd(&cfg)?;
            let csv = commands::mc_csv(&res)?;
            match &a.out {
                Some(prefix) => {
                    emit(Some(&with_ext(prefix, "csv")), &csv)?;
                    emit(Some(&with_ext(prefix, "json")), &json("mc", &cfg, &res)?)?;
                }
                None => emit(None, &csv)?,
            }
        }
        Cmd::ModtermCurve(a) => emit(a.out.as_deref(), &commands::modterm_csv(&a)?)?,
        Cmd::Simulate(a) => emit(a.out.as_deref(), &commands::simulate_csv(&a)?)?,
    }
    Ok(())
}

fn with_ext(prefix: &Path, ext: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    s.into()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
