//! `timebell`: reproduce and explore time-resolved Bell experiment analyses.
//!
//! Every subcommand reads an optional JSON scenario (`--config`), applies
//! flag overrides, and emits a report as an aligned table, JSON or CSV.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Emission, Format, ModelKind, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "timebell", version, about = "Time-resolved Bell inequality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum predictions, CH sum and CHSH value for a settings quad.
    QmTable {
        /// Emit CH and S over this many station-B offsets in [0, π/2].
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Monte Carlo run of a local model with binomial error bars.
    Simulate {
        /// Write the per-pair audit record to this file.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// CH and CHSH under the four counterfactual worlds.
    Worlds,
    /// Identity sampling and deterministic-strategy enumeration.
    Oracle,
    /// Refuted or not-yet-refuted verdict for a local model.
    Admissibility {
        /// Measured data file; always refused.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the full reproduction checklist.
    Repro,
}

#[derive(Args)]
struct Opts {
    /// JSON scenario file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Settings as a,a',b,b' in radians.
    #[arg(long, global = true, value_parser = config::parse_quad, allow_hyphen_values = true)]
    quad: Option<[f64; 4]>,
    #[arg(long, global = true)]
    total_time: Option<f64>,
    /// qm, malus, constant or clock.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Model parameter as key=value; repeatable.
    #[arg(long = "param", global = true, value_parser = config::parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long, global = true)]
    pairs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// A, B, C or D.
    #[arg(long, global = true)]
    world: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Initial quadrature cells per quarter and per λ range.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true, value_enum)]
    emission: Option<Emission>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Random points for the identity check.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

impl Opts {
    fn into_config(self, sweep: Option<usize>) -> ScenarioConfig {
        ScenarioConfig {
            quad: self.quad,
            total_time: self.total_time,
            model: self.model,
            params: (!self.params.is_empty()).then(|| self.params.into_iter().collect()),
            pairs: self.pairs,
            seed: self.seed,
            world: self.world,
            format: self.format,
            tol: self.tol,
            resolution: self.resolution,
            emission: self.emission,
            workers: self.workers,
            samples: self.samples,
            sweep,
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.opts.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let sweep = match &cli.command {
        Command::QmTable { sweep } => *sweep,
        _ => None,
    };
    let merged = file.overlay(cli.opts.into_config(sweep));
    let default_model = match cli.command {
        Command::Simulate { .. } => ModelKind::Malus,
        _ => ModelKind::Qm,
    };
    let sc = Scenario::resolve(merged, default_model)?;

    let mut ok = true;
    let report = match &cli.command {
        Command::QmTable { .. } => commands::qm_table(&sc)?,
        Command::Simulate { record } => commands::simulate(&sc, record.as_deref())?,
        Command::Worlds => commands::worlds(&sc)?,
        Command::Oracle => commands::oracle(&sc)?,
        Command::Admissibility { data } => commands::admissibility(&sc, data.as_deref())?,
        Command::Repro => {
            let (r, all) = commands::repro(&sc)?;
            ok = all;
            r
        }
    };
    let text = match sc.format {
        Format::Table => output::to_table(&report),
        Format::Json => output::to_json(&report) + "\n",
        Format::Csv => output::to_csv(&report),
    };
    print!("{text}");
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
