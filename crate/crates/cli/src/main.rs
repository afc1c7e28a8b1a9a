//! `lopsim` experiment runner.

// negated comparisons double as NaN rejection
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{parse_pair, ConfigError, ExperimentConfig, Format, Overrides, Params};
use experiments::RunError;
use output::Provenance;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "lopsim", version, about = "Run a named linear-optics experiment and emit its data")]
struct Cli {
    /// Experiment name; `--list` prints the choices.
    #[arg(long)]
    experiment: Option<String>,
    /// Plain-text file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "jsonl"])]
    format: Option<String>,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// List experiments with their parameters and defaults.
    #[arg(long)]
    list: bool,
}

fn list() {
    for e in experiments::EXPERIMENTS {
        let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let seed = if e.stochastic { " [seed required]" } else { "" };
        println!("{:<20} {}{seed}", e.name, params.join(" "));
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let params = cli.params.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>, _>>()?;
    let format = cli.format.as_deref().map(str::parse::<Format>).transpose()?;
    let overrides = Overrides { experiment: cli.experiment, seed: cli.seed, out: cli.out, format, params };
    let cfg = ExperimentConfig::build(cli.config.as_deref(), overrides)?;
    let exp = experiments::find(&cfg.experiment).ok_or_else(|| {
        let names: Vec<&str> = experiments::EXPERIMENTS.iter().map(|e| e.name).collect();
        ConfigError(format!("unknown experiment '{}'; choose one of {}", cfg.experiment, names.join(", ")))
    })?;
    let params = Params::new(&cfg.params, exp.params)?;
    if exp.stochastic && cfg.seed.is_none() {
        return Err(ConfigError(format!("experiment '{}' needs --seed", exp.name)).into());
    }
    let table = (exp.run)(&params, cfg.seed)?;
    let prov = Provenance { experiment: exp.name, params: params.all(), seed: cfg.seed };
    let io_err = |e: io::Error| RunError::Runtime(format!("writing output: {e}"));
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| RunError::Runtime(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            output::write(&mut w, &prov, &table, cfg.format).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            output::write(&mut w, &prov, &table, cfg.format).map_err(io_err)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        list();
        return ExitCode::SUCCESS;
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(e)) => {
            eprintln!("lopsim: config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("lopsim: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
