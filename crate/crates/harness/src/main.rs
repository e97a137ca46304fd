use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lite_harness::checks::{checks_table, dynamics_checks};
use lite_harness::reports::{coverage_table, quadratic_report, run_alignment};
use lite_harness::{load_config, run_experiment, HarnessError, EXIT_DIVERGED};

#[derive(Parser)]
#[command(name = "lite", about = "Flat-direction optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training experiment and write its trajectory CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Per-curvature recurrence coefficients, regime and dominant root modulus.
    QuadraticReport {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        eta: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda_max: f64,
        #[arg(long)]
        points: usize,
    },
    /// Gram/Hessian eigenspace coverage curves.
    Align {
        #[arg(long)]
        config: PathBuf,
    },
    /// Flow discretization, Nesterov and AdEMAMix consistency checks.
    DynamicsCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the version.
    Version,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let f = File::create(p).map_err(|e| HarnessError::Io {
                path: p.display().to_string(),
                msg: e.to_string(),
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), HarnessError> {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::Io {
            path: path.map(|p| p.display().to_string()).unwrap_or_else(|| "stdout".into()),
            msg: e.to_string(),
        })
}

fn execute(command: Command) -> Result<i32, HarnessError> {
    match command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let mut out = open_output(cfg.output.as_deref())?;
            let summary = run_experiment(&cfg, &mut out)?;
            drop(out);
            eprintln!("{}", summary.line());
            Ok(if summary.diverged_at.is_some() { EXIT_DIVERGED } else { 0 })
        }
        Command::QuadraticReport {
            alpha,
            beta,
            eta,
            lambda_min,
            lambda_max,
            points,
        } => {
            let t = quadratic_report(alpha, beta, eta, lambda_min, lambda_max, points)?;
            emit(&t.to_csv(), None)?;
            Ok(0)
        }
        Command::Align { config } => {
            let cfg = load_config(&config)?;
            let curves = run_alignment(&cfg)?;
            emit(&coverage_table(&curves).to_csv(), cfg.output.as_deref())?;
            Ok(0)
        }
        Command::DynamicsCheck { seed } => {
            let checks = dynamics_checks(seed)?;
            emit(&checks_table(&checks).to_csv(), None)?;
            Ok(if checks.iter().all(|c| c.passed()) { 0 } else { 4 })
        }
        Command::Version => {
            println!("lite {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
