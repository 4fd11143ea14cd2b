//! `shortfall`: solve, tabulate and check optimal portfolios under shortfall constraints.

// NaN must fail range checks, so `!(a < b)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shortfall::Kind;

use config::{GridSpec, Overrides, Parsed};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "shortfall",
    version,
    about = "Optimal portfolios under VaR, expected-loss and expected-utility-loss limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the static problem and print its multipliers and residuals.
    Solve {
        /// Print the effective scenario as a config file instead of solving.
        #[arg(long)]
        dump_config: bool,
    },
    /// Strategy at time t over a stock-price grid, as CSV.
    Curve {
        /// Add bond, stock and normal-strategy fraction columns.
        #[arg(long)]
        benchmarks: bool,
    },
    /// Terminal-wealth density table plus an atom/gap summary.
    Density,
    /// Closed forms against Monte Carlo; exits 5 if any check fails.
    Verify {
        /// Scale the budget multiplier before checking.
        #[arg(long, hide = true)]
        perturb_multiplier: Option<f64>,
    },
    /// Reference values next to their computed counterparts.
    PaperReport,
}

#[derive(Debug, Args)]
struct Opts {
    /// Scenario file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log-spaced grid lo:hi:n (stock prices for curve, wealth for density).
    #[arg(long, global = true, value_parser = clap::value_parser!(GridSpec))]
    grid: Option<GridSpec>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    r: Option<f64>,
    /// Horizon.
    #[arg(long = "T", global = true, allow_hyphen_values = true)]
    horizon: Option<f64>,
    /// Initial wealth.
    #[arg(long, global = true, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// unconstrained, var, el, eul, bond or stock.
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<Kind>,
    /// Absolute shortfall level.
    #[arg(long, global = true, allow_hyphen_values = true, conflicts_with = "q_frac")]
    q: Option<f64>,
    /// Shortfall level as a fraction of x·e^{rT}.
    #[arg(long, global = true, allow_hyphen_values = true)]
    q_frac: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Evaluation time.
    #[arg(long = "t", global = true, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Monte Carlo sample size.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Replication paths for verify (0 skips replication).
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Rebalancing dates per replication path.
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    antithetic: bool,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|e: shortfall::Error| e.to_string())
}

impl Opts {
    fn overrides(&self) -> Overrides {
        Overrides {
            mu: self.mu,
            sigma: self.sigma,
            r: self.r,
            horizon: self.horizon,
            x: self.x,
            gamma: self.gamma,
            kind: self.kind,
            q: self.q,
            q_frac: self.q_frac,
            eps: self.eps,
            t: self.t,
            grid: self.grid,
            samples: self.samples,
            paths: self.paths,
            steps: self.steps,
            seed: self.seed,
            antithetic: self.antithetic,
        }
    }

    fn scenario(&self) -> Result<Parsed, CliError> {
        let mut parsed = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                config::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => Parsed::default(),
        };
        parsed.apply(&self.overrides());
        Ok(parsed)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let parsed = cli.opts.scenario()?;
    let out = cli.opts.out.as_deref();
    if let Command::Solve { dump_config: true } = cli.command {
        parsed.validate()?;
        return emit(out, &parsed.scenario.dump());
    }
    let setup = parsed.validate()?;
    let scenario = &parsed.scenario;
    match &cli.command {
        Command::Solve { .. } => {
            let p = commands::profile(&setup, None)?;
            emit(out, &commands::solve_record(&setup, &p)?)
        }
        Command::Curve { benchmarks } => {
            let p = commands::profile(&setup, None)?;
            emit(out, &commands::curve_csv(&setup, &p, scenario.grid, *benchmarks)?)
        }
        Command::Density => {
            let p = commands::profile(&setup, None)?;
            let (table, summary) = commands::density_outputs(&p, scenario.grid)?;
            emit(out, &table)?;
            match out {
                Some(path) => emit(Some(&path.with_extension("summary")), &summary),
                None => {
                    eprint!("{summary}");
                    Ok(())
                }
            }
        }
        Command::Verify { perturb_multiplier } => {
            let p = commands::profile(&setup, *perturb_multiplier)?;
            let checks = commands::verify_checks(&setup, &p, scenario.paths)?;
            emit(out, &commands::verify_table(&checks))?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(failed.join(", ")))
            }
        }
        Command::PaperReport => emit(out, &commands::report_table(&commands::report_rows(&setup)?)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shortfall: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
