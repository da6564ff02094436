use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stormgen::config::{CalibrationSource, Overrides, PSource, PipelineConfig};
use stormgen::pipeline::{cmd_evaluate, cmd_fit, cmd_generate, cmd_report};
use stormgen::{PipelineError, Result};
use stormgen_core::Period;

/// Conditioned stochastic daily-precipitation scenarios.
#[derive(Parser, Debug)]
#[command(name = "stormgen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for the ensemble.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Generate even if the bundle was fitted on different input.
    #[arg(long, global = true)]
    force: bool,
    /// Model bundle path (default <out>/bundle.json).
    #[arg(long, global = true)]
    bundle: Option<PathBuf>,
    /// Historical daily CSV.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Held-out daily CSV for CRPS and Brier scores.
    #[arg(long, global = true)]
    holdout: Option<PathBuf>,
    /// Generation threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Number of scenarios.
    #[arg(long = "scenarios", global = true)]
    n_scenarios: Option<usize>,
    /// Extreme-scenario probability: a number, from:empirical, from:gpd or from:gev.
    #[arg(long = "p-extreme", global = true, value_parser = parse_text::<PSource>)]
    p_extreme: Option<PSource>,
    /// Target period: YYYY, YYYY-MM or --MM.
    #[arg(long, global = true, value_parser = parse_period)]
    period: Option<Period>,
    /// none, climatology, ar_model or tercile:<below|near|above>.
    #[arg(long, global = true, value_parser = parse_text::<CalibrationSource>)]
    calibration: Option<CalibrationSource>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit all model components and write the bundle.
    Fit,
    /// Generate the conditioned ensemble from a bundle.
    Generate,
    /// Score scenarios against the historical record.
    Evaluate,
    /// Summarise evaluation outputs as text.
    Report,
}

fn parse_text<T: std::str::FromStr<Err = String>>(s: &str) -> std::result::Result<T, String> {
    s.parse()
}

fn parse_period(s: &str) -> std::result::Result<Period, String> {
    s.parse().map_err(|e: stormgen_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    config.apply(Overrides {
        input: cli.input,
        holdout: cli.holdout,
        seed: cli.seed,
        out: cli.out,
        bundle: cli.bundle,
        workers: cli.workers,
        n_scenarios: cli.n_scenarios,
        p_extreme: cli.p_extreme,
        target_period: cli.period,
        calibration: cli.calibration,
    });
    match cli.command {
        Command::Fit => {
            let bundle = cmd_fit(&config)?;
            println!("bundle {} ({})", config.bundle_path().display(), bundle.fingerprint);
            for w in &bundle.warnings {
                println!("warning: {w}");
            }
        }
        Command::Generate => {
            let out = cmd_generate(&config, cli.force)?;
            println!(
                "{} scenarios: {} with an extreme day, {} without -> {}",
                out.set.len(),
                out.extreme_count,
                out.set.len() - out.extreme_count,
                config.scenario_path().display()
            );
        }
        Command::Evaluate => {
            let evaluation = cmd_evaluate(&config)?;
            println!(
                "KS {} -> {}",
                stormgen::output::sig9(evaluation.summary.ks),
                config.evaluation_dir().display()
            );
        }
        Command::Report => print!("{}", cmd_report(&config)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STORMGEN_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let line = first.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let line = line.trim_start_matches("error: ");
            eprintln!("{}", PipelineError::Usage(line.to_string()).diagnostic());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
