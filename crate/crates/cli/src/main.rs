//! `scramble`: reproducible scrambling experiments with CSV + JSON output.
//!
//! Exit codes: 0 success, 2 configuration error, 3 resource cap, 4 numerical
//! failure.

mod commands;
mod output;

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "scramble", version, about = "Operator spreading and scrambling experiments")]
struct Cli {
    /// Directory for CSV and JSON outputs
    #[arg(long, global = true, env = "SCRAMBLE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Basename of the output files (defaults to the subcommand name)
    #[arg(long, global = true)]
    name: Option<String>,
    /// Worker threads; 0 uses every logical core
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Base seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: commands::Command,
}

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<scramble_core::Error> for Failure {
    fn from(e: scramble_core::Error) -> Self {
        use scramble_core::Error as E;
        let code = match e {
            E::InvalidInput(_) | E::DimensionMismatch(_) => 2,
            E::ResourceLimit(_) => 3,
            E::Numerical(_) | E::PostSelection(_) | E::FitFailure(_) => 4,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("output: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::config(format!("csv: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context { out_dir: cli.out_dir, name: cli.name, seed: cli.seed };
    match commands::run(&ctx, cli.command) {
        Ok(meta) => {
            println!("{}", serde_json::to_string_pretty(&meta).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
