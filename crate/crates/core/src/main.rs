use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use cbf_core::harness::{self, exit, RunConfig};
use cbf_core::CbfError;

#[derive(Parser)]
#[command(
    name = "cbf",
    version,
    about = "Convective Brinkman-Forchheimer solver and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory, writing the ledger and checkpoints.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every (mu, beta) cell at exponent r and write a CSV summary.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the weighted gradient inequalities on random fields.
    CheckInequalities {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,7")]
        r: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        fields: usize,
    },
    /// Verify the parabolic rescaling identity of the right-hand side.
    RescaleTest {
        #[arg(long, default_value_t = 2)]
        lambda: usize,
        #[arg(long, default_value_t = 3.0)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Recompute ledger columns from a checkpoint directory.
    EnergyAudit { dir: PathBuf },
}

fn load_config(path: Option<PathBuf>) -> cbf_core::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(&p),
        None => Ok(RunConfig::default()),
    }
}

fn print<T: Serialize>(report: &T) -> cbf_core::Result<()> {
    println!("{}", serde_json::to_string_pretty(report)?);
    Ok(())
}

fn run(cli: Cli) -> cbf_core::Result<i32> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load_config(config)?;
            let summary = harness::cmd_run(&cfg, &out)?;
            print(&summary)?;
            Ok(if summary.blowup {
                exit::BLOWUP
            } else if !summary.monotonicity.passed() {
                exit::ASSERTION
            } else {
                exit::SUCCESS
            })
        }
        Command::Sweep {
            config,
            mu,
            beta,
            r,
            out,
        } => {
            let cfg = load_config(config)?;
            let rows = harness::cmd_sweep(&cfg, &mu, &beta, r, harness::worker_count())?;
            harness::write_sweep_csv(&rows, &out)?;
            print(&rows)?;
            Ok(if rows.iter().all(|r| r.passed()) {
                exit::SUCCESS
            } else {
                exit::ASSERTION
            })
        }
        Command::CheckInequalities { seed, r, fields } => {
            let report = harness::cmd_check_inequalities(seed, &r, fields)?;
            print(&report)?;
            Ok(if report.passed() {
                exit::SUCCESS
            } else {
                exit::ASSERTION
            })
        }
        Command::RescaleTest { lambda, r, alpha, seed } => {
            let report = harness::cmd_rescale_test(lambda, r, alpha, seed)?;
            print(&report)?;
            Ok(if report.passed() {
                exit::SUCCESS
            } else {
                exit::ASSERTION
            })
        }
        Command::EnergyAudit { dir } => {
            let report = harness::cmd_energy_audit(&dir)?;
            print(&report)?;
            Ok(if report.passed() {
                exit::SUCCESS
            } else {
                exit::ASSERTION
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CbfError::Config { .. } => exit::CONFIG,
                CbfError::BlowUp { .. } => exit::BLOWUP,
                _ => exit::FAILURE,
            }
        }
    };
    ExitCode::from(code as u8)
}
