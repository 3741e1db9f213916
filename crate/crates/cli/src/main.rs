//! `minvar` command line: run backtests, generate synthetic markets and
//! re-emit reports from a previous run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use minvar::backtest::{
    generate_synthetic, reemit_reports, run_and_emit, write_synthetic, BacktestConfig, MarketInputs,
    SyntheticMarketSpec,
};
use minvar::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "minvar", version, about = "Minimum-variance backtests on realized covariances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the rolling backtest described by a config file.
    Backtest {
        #[arg(long)]
        config: PathBuf,
        /// Precomputed covariance series; skips tick processing.
        #[arg(long)]
        from_cov: Option<PathBuf>,
        /// Output directory, overriding `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write a synthetic tick, bar and covariance dataset.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit the report tables of a finished run.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn backtest(config: &Path, from_cov: Option<&Path>, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = BacktestConfig::load(config)?;
    let out = out
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `output`".into()))?;
    info!("loading market data for {} assets", cfg.data.assets.len());
    let inputs = MarketInputs::load(&cfg, from_cov)?;
    info!("running backtest over {} days", inputs.series.len());
    let output = run_and_emit(&cfg, &inputs, &out)?;
    info!(
        "{} windows, {} strategy/constraint cells written to {}",
        output.report.windows.len(),
        output.report.cells.len(),
        out.display()
    );
    Ok(())
}

fn synth(spec: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", spec.display())))?;
    let spec = SyntheticMarketSpec::from_toml_str(&text)?;
    let market = generate_synthetic(&spec)?;
    write_synthetic(&market, out)?;
    info!("{} ticks for {} assets written to {}", market.ticks.len(), market.tickers.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Backtest {
            config,
            from_cov,
            out,
            threads,
        } => backtest(&config, from_cov.as_deref(), out, threads),
        Command::Synth { spec, out } => synth(&spec, &out),
        Command::Report { input, out } => {
            let out = out.unwrap_or_else(|| input.clone());
            let manifest = reemit_reports(&input, &out)?;
            info!("{} files re-emitted to {}", manifest.files.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
