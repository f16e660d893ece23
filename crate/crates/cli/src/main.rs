//! `asianrec`: Asian option prices by recursion, with Monte Carlo and
//! European cross-checks.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{OutputFormat, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "asianrec",
    version,
    about = "Arithmetic Asian option prices by backward recursion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// TOML run configuration; defaults reproduce the 90-fixing
    /// Black-Scholes table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Single strike (price), or the only strike of the run.
    #[arg(long, global = true)]
    strike: Option<f64>,

    /// Comma-separated strikes, replacing the configured list.
    #[arg(long, global = true, value_delimiter = ',')]
    strikes: Option<Vec<f64>>,

    /// Add Monte Carlo columns (table, european).
    #[arg(long, global = true)]
    with_mc: bool,

    /// Also print the spot delta (price).
    #[arg(long, global = true)]
    delta: bool,

    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Monte Carlo worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Recursion price for one strike.
    Price,
    /// Recursion prices and deltas for every strike.
    Table,
    /// Monte Carlo prices for every strike.
    Mc,
    /// European calls and puts expiring at the last fixing.
    European,
    /// Print the effective configuration as TOML.
    Config,
}

fn load(opts: &Opts) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(k) = &opts.strikes {
        cfg.strikes = k.clone();
    }
    if let Some(k) = opts.strike {
        cfg.strikes = vec![k];
    }
    if let Some(f) = opts.output {
        cfg.output = f;
    }
    if let Some(p) = &opts.out {
        cfg.output_path = Some(p.clone());
    }
    if let Some(s) = opts.seed {
        cfg.mc.seed = s;
    }
    if let Some(n) = opts.paths {
        cfg.mc.n_paths = n;
    }
    if let Some(w) = opts.workers {
        cfg.mc.workers = w;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(&cli.opts)?;
    let text = match cli.command {
        Command::Price => {
            let strike = match cfg.strikes.as_slice() {
                [k] => *k,
                [] => return Err(CliError::Config("no strike given".into())),
                _ => {
                    return Err(CliError::Config(
                        "price takes one strike; use --strike or the table command".into(),
                    ))
                }
            };
            let row = commands::price(&cfg, strike, cli.opts.delta)?;
            output::price(&row, cfg.output)
        }
        Command::Table => output::table(&commands::table(&cfg, cli.opts.with_mc)?, cfg.output),
        Command::Mc => output::monte_carlo(&commands::monte_carlo(&cfg)?, cfg.output),
        Command::European => {
            output::european(&commands::european(&cfg, cli.opts.with_mc)?, cfg.output)
        }
        Command::Config => cfg.effective().to_toml(),
    };
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
