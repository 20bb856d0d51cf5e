use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ifolio_cli::commands;
use ifolio_cli::config::RunConfig;
use ifolio_cli::CliError;

/// Multicriteria portfolio selection with intuitionistic fuzzy goals.
#[derive(Parser)]
#[command(name = "ifolio", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-criterion aspiration bounds (y1, y0).
    Bounds(CommonArgs),
    /// Solve the crisp or fuzzy compromise problem.
    Solve(CommonArgs),
    /// Brute-force sweep of an objective; emits a JSON fixture.
    Oracle(CommonArgs),
    /// Re-run the bundled reference experiment and compare against its
    /// published values.
    ReproducePaper(ReproduceArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file with `key = value` lines (same keys as the flags).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model file path.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Return-series CSV (header = asset labels, rows = period returns).
    #[arg(long)]
    returns: Option<PathBuf>,
    /// Risk-free rate, required with --returns.
    #[arg(long)]
    rf: Option<f64>,
    /// Problem: mv (return/risk) or mvs (adds the Sharpe ratio).
    #[arg(long)]
    problem: Option<String>,
    /// Mode: crisp (Chebyshev baseline) or fuzzy.
    #[arg(long)]
    mode: Option<String>,
    /// Membership shape: linear | exp:<k> | table:<s:v,...>.
    #[arg(long)]
    mu: Option<String>,
    /// Non-membership shape: linear | exp:<k> | table:<s:v,...>.
    #[arg(long)]
    nu: Option<String>,
    /// Seed for starting points and sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of solver starts.
    #[arg(long)]
    starts: Option<usize>,
    /// Write the JSON report/fixture here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-check the solution against the sampling oracle.
    #[arg(long)]
    oracle_check: bool,
    /// Use a composition grid of this resolution for the oracle.
    #[arg(long)]
    grid: Option<usize>,
    /// Dirichlet sample count for the oracle.
    #[arg(long)]
    samples: Option<usize>,
    /// Oracle objective: e | v | sr | phi.
    #[arg(long)]
    objective: Option<String>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Write the comparison report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config file: {e}")))?;
            cfg.apply_file(&text)?;
        }
        // Flags override config-file values.
        if let Some(v) = self.model {
            cfg.set("model", &v.display().to_string())?;
        }
        if let Some(v) = self.returns {
            cfg.set("returns", &v.display().to_string())?;
        }
        if let Some(v) = self.rf {
            cfg.set("rf", &v.to_string())?;
        }
        if let Some(v) = self.problem {
            cfg.set("problem", &v)?;
        }
        if let Some(v) = self.mode {
            cfg.set("mode", &v)?;
        }
        if let Some(v) = self.mu {
            cfg.set("mu", &v)?;
        }
        if let Some(v) = self.nu {
            cfg.set("nu", &v)?;
        }
        if let Some(v) = self.seed {
            cfg.set("seed", &v.to_string())?;
        }
        if let Some(v) = self.starts {
            cfg.set("starts", &v.to_string())?;
        }
        if let Some(v) = self.out {
            cfg.set("out", &v.display().to_string())?;
        }
        if self.oracle_check {
            cfg.set("oracle-check", "true")?;
        }
        if let Some(v) = self.grid {
            cfg.set("grid", &v.to_string())?;
        }
        if let Some(v) = self.samples {
            cfg.set("samples", &v.to_string())?;
        }
        if let Some(v) = self.objective {
            cfg.set("objective", &v)?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bounds(args) => commands::cmd_bounds(&args.into_config()?),
        Command::Solve(args) => commands::cmd_solve(&args.into_config()?),
        Command::Oracle(args) => commands::cmd_oracle(&args.into_config()?),
        Command::ReproducePaper(args) => {
            let report = commands::cmd_reproduce(args.out.as_deref())?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
