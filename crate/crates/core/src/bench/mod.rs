//! Command-line front end.
//!
//! ```text
//! comono run <config.json>
//! comono verify --problem <spec.json> --samples N --seed S [--eta η] [--out file]
//! comono budget --alg <algorithm> --eta-l X --k-max K
//! ```
//!
//! `COMONO_THREADS` caps the worker pool.

pub mod budget;
pub mod config;
pub mod run;
pub mod trace;
pub mod verify_cmd;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::outer::Algorithm;

pub const EXIT_OK: i32 = 0;
/// A verification property failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "comono",
    version,
    about = "Inexact Halpern and KM solvers for comonotone inclusions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the problem described by a JSON run configuration.
    Run { config: PathBuf },
    /// Sample operator properties of a problem specification.
    Verify {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the inner-loop budget per outer iteration.
    Budget {
        #[arg(long)]
        alg: Algorithm,
        #[arg(long = "eta-l")]
        eta_l: f64,
        #[arg(long = "k-max")]
        k_max: u64,
    },
}

fn init_pool() {
    let threads = std::env::var("COMONO_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    if let Some(n) = threads {
        // Fails only if a pool already exists, which is then used as is.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_pool();
    match cli.command {
        Command::Run { config } => run::cmd_run(&config),
        Command::Verify {
            problem,
            samples,
            seed,
            eta,
            out,
        } => verify_cmd::cmd_verify(&problem, samples, seed, eta, out.as_deref()),
        Command::Budget { alg, eta_l, k_max } => {
            let stdout = std::io::stdout();
            match budget::write_budget_table(stdout.lock(), alg, eta_l, k_max) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("config error: {e}");
                    EXIT_CONFIG
                }
            }
        }
    }
}
