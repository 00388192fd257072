use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cle_harness::checks::Kernel;
use cle_harness::emit::emit;
use cle_harness::run::run_path;
use cle_harness::selftest::run_selftest;
use cle_harness::{Failure, EXIT_ACCEPTANCE, EXIT_PASS, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "cle", version, about = "Stress-tensor estimators for lattice loop ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic identities, event geometry and a tiny-lattice oracle.
    Selftest {
        /// Flip the pole-branch sign of the Schwarzian; the run must fail.
        #[arg(long)]
        canary: bool,
    },
    /// Run one experiment from a TOML config.
    #[command(after_help = format!("Without --output or an `output` key, results go to ${OUTPUT_ROOT_ENV}/<experiment> (default results/<experiment>)."))]
    Run {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rewrite the CSV plot data of a results directory.
    Emit { dir: PathBuf },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn fail(e: &Failure) -> ExitCode {
    eprintln!("{e}");
    code(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Selftest { canary } => {
            let kernel = if canary { Kernel::canary() } else { Kernel::default() };
            if run_selftest(&kernel) {
                code(EXIT_PASS)
            } else {
                code(EXIT_ACCEPTANCE)
            }
        }
        Command::Run { config, output } => match run_path(&config, output.as_deref()).and_then(|o| o.into_result()) {
            Ok(o) => {
                for c in &o.summary.checks {
                    println!("PASS {}: {}", c.name, c.detail);
                }
                println!("results in {}", o.dir.display());
                code(EXIT_PASS)
            }
            Err(e) => fail(&e),
        },
        Command::Emit { dir } => match emit(&dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", dir.join(f).display());
                }
                code(EXIT_PASS)
            }
            Err(e) => fail(&e),
        },
    }
}
