//! Command-line front end for `chaosync`: scenario files in, CSV and JSON out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
//! 4 internal error. Errors are also written to stderr as one JSON object.

pub mod bench;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

use std::ffi::OsString;
use std::path::PathBuf;

use chaosync::BuiltinSystem;
use clap::{Parser, Subcommand};

use crate::config::{resolve_output_dir, Scenario};
use crate::error::{CliError, EXIT_CONFIG, EXIT_OK};
use crate::sweep::SweepParam;

#[derive(Debug, Parser)]
#[command(name = "chaosync", version, about = "Leader-follower chaotic synchronization lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write trajectory, error and summary files.
    Simulate {
        config: PathBuf,
        /// Keep every recorded sample in the trajectory CSV.
        #[arg(long)]
        full_resolution: bool,
    },
    /// Evaluate the stability certificates without integrating.
    Certify { config: PathBuf },
    /// Run the scenario once per parameter value.
    Sweep {
        config: PathBuf,
        /// alpha, sigma2, epsilon or tau_a
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Time the certification pipeline for several network sizes.
    Bench {
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = vec![5usize, 10, 20])]
        sizes: Vec<usize>,
        #[arg(long, default_value = "lu")]
        system: String,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Send a masked message over a synchronized pair.
    Securecomm { config: PathBuf },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Simulate {
            config,
            full_resolution,
        } => {
            let mut sc = Scenario::load(&config)?;
            sc.output.full_resolution |= full_resolution;
            let report = run::simulate_scenario(&sc, &sc.output_dir())?;
            report.status()?;
            Ok(format!("wrote {}", report.output_dir.display()))
        }
        Command::Certify { config } => {
            let sc = Scenario::load(&config)?;
            let report = run::certify_scenario(&sc, &sc.output_dir())?;
            Ok(format!("wrote {}", report.output_dir.display()))
        }
        Command::Sweep {
            config,
            param,
            values,
            workers,
        } => {
            let sc = Scenario::load(&config)?;
            let param: SweepParam = param.parse()?;
            let out = resolve_output_dir(
                sc.output.dir.clone().map(|d| d.join(format!("sweep_{}", param.name()))),
                &format!("{}_sweep_{}", sc.name, param.name()),
            );
            let report = sweep::run_sweep(&sc, param, &values, workers, &out, false)?;
            Ok(format!(
                "wrote {} ({} runs)",
                report.output_dir.display(),
                report.rows.len()
            ))
        }
        Command::Bench {
            sizes,
            system,
            alpha,
            repeats,
            out,
        } => {
            let which: BuiltinSystem = system
                .parse()
                .map_err(|e: chaosync::Error| CliError::Config(e.to_string()))?;
            let out = resolve_output_dir(out, "bench");
            let report = bench::run_bench(which, alpha, &sizes, repeats, &out)?;
            let mut text = format!("wrote {}\nN,seconds", report.output_dir.display());
            for r in &report.rows {
                text.push_str(&format!("\n{},{}", r.agents, r.seconds));
            }
            Ok(text)
        }
        Command::Securecomm { config } => {
            let sc = Scenario::load(&config)?;
            let report = run::securecomm_scenario(&sc, &sc.output_dir())?;
            Ok(format!("wrote {}", report.output_dir.display()))
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                print!("{e}");
                return EXIT_OK;
            }
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return EXIT_CONFIG;
        }
    };
    match execute(cli.command) {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
