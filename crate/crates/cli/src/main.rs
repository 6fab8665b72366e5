//! `midcurve`: price midcurve swaptions, extract correlation skews,
//! calibrate annuity loadings and dump marginals, all as CSV.

mod commands;
mod config;
mod csv;
mod error;
mod strikes;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use midcurve_core::{Method, ModelKind};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::strikes::StrikeSpec;

#[derive(Parser)]
#[command(name = "midcurve", version, about = "Midcurve swaption pricing with stochastic annuity ratios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one strike: `strike,side,model,method,price,stderr`.
    Price(Options),
    /// Implied correlation by strike: `strike,price,implied_normal_vol,implied_corr,flag`.
    Skew(Options),
    /// Estimate the annuity loadings: `sigma_e,sigma_s,cov_e,cov_s`.
    Calibrate(Options),
    /// Natural and tilted marginals of both legs.
    MarginalDump(Options),
}

#[derive(clap::Args)]
struct Options {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Annuity model: deterministic, linear or loglinear.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Pricing method: quadrature or mc.
    #[arg(long)]
    method: Option<Method>,
    /// Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Strikes, e.g. `atm`, `2%`, `1%:3%:25bp` or `atm±150bp:25bp`.
    #[arg(long)]
    strikes: Option<StrikeSpec>,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Options {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(kind) = self.model {
            config.model_kind = kind;
        }
        if let Some(method) = self.method {
            config.engine.method = method;
        }
        if let Some(paths) = self.paths {
            config.engine.paths = paths;
        }
        if let Some(seed) = self.seed {
            config.engine.seed = seed;
        }
        if let Some(spec) = self.strikes {
            config.strikes = Some(spec);
        }
        Ok(config)
    }
}

type Handler = fn(&RunConfig) -> Result<String, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (options, command): (&Options, Handler) = match &cli.command {
        Command::Price(o) => (o, commands::price),
        Command::Skew(o) => (o, commands::skew),
        Command::Calibrate(o) => (o, commands::calibrate),
        Command::MarginalDump(o) => (o, commands::marginal_dump),
    };
    let config = options.load()?;
    let text = command(&config)?;
    match &options.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write `{}`: {e}", path.display()))),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(CliError::input(format!("cannot write to standard output: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
