//! `homcorr`: property verification, data generation, training, evaluation,
//! permutation testing and benchmarking.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage error, 3 I/O error.

mod bench;
mod commands;
mod config;

use clap::{Parser, Subcommand};
use homcorr::data::Regime;
use homcorr::verify::Suite;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// A checked property did not hold.
    Failure(String),
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Failure(m) | CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<homcorr::error::Error> for CliError {
    fn from(e: homcorr::error::Error) -> Self {
        use homcorr::error::Error;
        match e {
            Error::Io(_) | Error::Corrupt(_) | Error::Version { .. } => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "homcorr", version, about = "Equivariant correlation networks on the sphere and rotation group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run numerical property suites; exit 1 naming the first failing property.
    Verify {
        #[arg(long, default_value = "all", value_parser = ["all", "transforms", "equivariance", "volterra", "gradients", "dilated"])]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Corrupt Wigner matrices to demonstrate that the suites catch it.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Generate a synthetic dataset file.
    #[command(subcommand)]
    GenData(GenData),
    /// Train the model described by a TOML config; writes a checkpoint.
    Train {
        config: PathBuf,
        /// Also write the per-epoch metrics to this file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Accuracy of a checkpoint on a dataset, optionally under fresh random rotations.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "NR")]
        regime: Regime,
        /// Seed of the per-example rotations in the R regime.
        #[arg(long, default_value_t = 0)]
        rotation_seed: u64,
    },
    /// Permutation test of the two-class null hypothesis on a sequence dataset.
    Permtest {
        config: PathBuf,
        /// Override the configured number of permutations.
        #[arg(long)]
        n_perm: Option<usize>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wall times of spectral against brute-force S² correlation, as CSV.
    Bench {
        #[arg(long, default_value_t = 2)]
        min_b: usize,
        #[arg(long, default_value_t = 8)]
        max_b: usize,
        /// Repetitions per band limit; the minimum time is reported.
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conventions, thread count, and the contents of a config or checkpoint.
    Info {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenData {
    /// Labelled single-shell spherical signals (class = bump layout).
    Blobs {
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 10)]
        bandwidth: usize,
        #[arg(long, default_value_t = 0.4)]
        noise: f64,
        #[arg(long, default_value = "NR")]
        regime: Regime,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        template_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-class multi-shell voxel sequences.
    Sequences {
        #[arg(long, default_value_t = 10)]
        per_class: usize,
        #[arg(long, default_value_t = 12)]
        length: usize,
        #[arg(long, default_value_t = 4)]
        bandwidth: usize,
        #[arg(long, default_value_t = 2)]
        shells: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 1.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("HOMCORR_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("HOMCORR_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Verify { suite, seed, report, inject_fault } => {
            let suite: Suite = suite.parse().map_err(|e: homcorr::error::Error| CliError::Usage(e.to_string()))?;
            commands::verify(suite, seed, report.as_deref(), inject_fault.as_deref())
        }
        Command::GenData(GenData::Blobs { classes, per_class, bandwidth, noise, regime, seed, template_seed, out }) => {
            let p = homcorr::data::BlobParams { classes, per_class, bandwidth, noise, regime, seed, template_seed };
            commands::gen_blobs(&p, &out)
        }
        Command::GenData(GenData::Sequences { per_class, length, bandwidth, shells, noise, separation, seed, out }) => {
            let p = homcorr::data::SequenceParams { per_class, length, bandwidth, shells, noise, separation, seed };
            commands::gen_sequences(&p, &out)
        }
        Command::Train { config, log } => commands::train(&config, log.as_deref()),
        Command::Eval { checkpoint, dataset, regime, rotation_seed } => {
            commands::eval(&checkpoint, &dataset, regime, rotation_seed)
        }
        Command::Permtest { config, n_perm, out } => commands::permtest(&config, n_perm, out.as_deref()),
        Command::Bench { min_b, max_b, reps, seed, out } => bench::bench(min_b, max_b, reps, seed, out.as_deref()),
        Command::Info { config, checkpoint } => commands::info(config.as_deref(), checkpoint.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
