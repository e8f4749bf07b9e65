use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvloop::runner;
use cvloop::{CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "cvloop", version, about = "Loop-based squeezing-gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config Fock cutoff.
    #[arg(long)]
    cutoff: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config)?.with_overrides(self.seed, self.cutoff)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured analysis and write report.json.
    Run(Common),
    /// Repeat a gate run for each value of one config parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path into the config, e.g. analysis.programs.0.squeezing.0
        #[arg(long)]
        param: String,
        /// JSON array of values.
        #[arg(long)]
        values: String,
    },
    /// Compile control schedules and check the timing budget.
    Schedule(Common),
    /// Fit the temporal mode function.
    FitMode(Common),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => {
            runner::run_experiment(&c.load()?, &c.out)?;
            println!("{}", c.out.join("report.json").display());
        }
        Command::Sweep { common, param, values } => {
            let values: Vec<serde_json::Value> =
                serde_json::from_str(&values).map_err(|e| CliError::config(format!("--values must be a JSON array: {e}")))?;
            let path = runner::run_sweep(&common.load()?, &param, &values, &common.out)?;
            println!("{}", path.display());
        }
        Command::Schedule(c) => {
            for p in runner::run_schedule(&c.load()?, &c.out)? {
                println!("{}", p.display());
            }
        }
        Command::FitMode(c) => {
            runner::run_fit_mode(&c.load()?, &c.out)?;
            println!("{}", c.out.join("report.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvloop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
