//! Command-line front end: config-driven sensitivity estimation, parameter
//! sweeps, Monte Carlo simulation, and the identified-regime estimators.
//!
//! Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O. Failures
//! print a machine-readable JSON error record to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ivsens::identified::WeightMode;
use ivsens_cli::commands::{self, CommonArgs};
use ivsens_cli::config::FileConfig;
use ivsens_cli::error::{io_err, CliError, Result};
use ivsens_cli::output::{self, render, write_output, OutputFormat, Provenance};

#[derive(Parser)]
#[command(
    name = "ivsens",
    version,
    about = "Sensitivity analysis for two-treatment IV comparisons with a third arm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Master seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Bootstrap replicates (overrides the config).
    #[arg(long, global = true)]
    boot: Option<usize>,

    /// Step-3 weighting for the identified a2 estimator.
    #[arg(long, global = true, value_enum, default_value_t = WeightsArg::Inverse)]
    weights: WeightsArg,

    /// Worker threads (defaults to the number of cores). Outputs are
    /// byte-identical across settings.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Calibrate the selection-model intercepts on an arm sample.
    Calibrate,
    /// Point estimate with bootstrap SE and Wald test.
    Estimate,
    /// Evaluate the estimator over a sensitivity-parameter grid.
    Sweep,
    /// Monte Carlo power/bias replication of a scenario.
    Simulate,
    /// Identified-regime estimators on a full dataset.
    Identified,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::Estimate => "estimate",
            Command::Sweep => "sweep",
            Command::Simulate => "simulate",
            Command::Identified => "identified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightsArg {
    Inverse,
    Literal,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = serde_json::json!({
                "error": { "code": err.code(), "message": err.to_string() }
            });
            eprintln!("{record}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let config_bytes = std::fs::read(config_path)
        .map_err(|e| io_err(&format!("reading {}", config_path.display()), e))?;
    let config_text = String::from_utf8(config_bytes.clone())
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", config_path.display())))?;
    let mut config = FileConfig::parse(&config_text)?;
    if let Some(base) = config_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        config.resolve_relative_to(base);
    }

    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let args = CommonArgs {
        seed,
        boot: cli.boot,
        weights: match cli.weights {
            WeightsArg::Inverse => WeightMode::Inverse,
            WeightsArg::Literal => WeightMode::Literal,
        },
    };
    let provenance = Provenance::new(cli.command.name(), seed, &config_bytes);

    let table = match cli.command {
        Command::Calibrate => commands::calibrate(&config, &args)?,
        Command::Estimate => commands::estimate(&config, &args)?,
        Command::Sweep => commands::sweep(&config, &args)?,
        Command::Simulate => {
            let result = commands::simulate(&config, &args)?;
            if let Some((path, heatmap)) = result.heatmap {
                let content = render(&provenance, &heatmap, cli.format);
                output::write_atomic(&path, content.as_bytes())?;
            }
            result.summary
        }
        Command::Identified => commands::identified_cmd(&config, &args)?,
    };

    let content = render(&provenance, &table, cli.format);
    write_output(cli.out.as_deref(), &content)
}
