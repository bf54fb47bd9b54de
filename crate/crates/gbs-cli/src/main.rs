//! `gbs`: desk-scale Gaussian boson sampling laboratory.
//!
//! Subcommands: `simulate` (exhaustive distributions), `sample` (ideal and
//! adversarial samplers), `validate` (hypothesis-test suite), `bench`
//! (kernel scaling and classical-cost tables), `haar` (random
//! interferometers and their checks), `report` (static SVG rendering).
//!
//! Exit codes: 0 success, 2 configuration error, 3 scale refusal,
//! 4 numerical-validity failure.

mod commands;
mod config;
mod errors;
mod svg;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gbs", version, about = "Gaussian boson sampling laboratory")]
pub struct Cli {
    /// Worker threads for kernel chunking and enumeration (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Optional run-configuration file with [kernels]/[sampler]/[validation]
    /// sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base random seed, recorded in every artifact.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Refuse Torontonians above this click count.
    #[arg(long, global = true)]
    kernel_max_clicks: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Write the exhaustive click distribution of one or more devices.
    Simulate {
        /// Experiment description file(s).
        #[arg(long, required = true, num_args = 1..)]
        spec: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw click samples under the ideal model and the adversarial mocks.
    Sample {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of samples per model.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Comma-separated models: ideal, thermal, distinguishable, uniform.
        #[arg(long, default_value = "ideal,thermal,distinguishable,uniform")]
        models: String,
        /// Click band (LO..HI) for the uniform sampler and band-filtered
        /// statistics.
        #[arg(long)]
        clicks_band: Option<String>,
        /// Ideal sampler: auto, enum, chain or mcmc.
        #[arg(long, default_value = "auto")]
        ideal_sampler: String,
    },
    /// Run the hypothesis-test suite on recorded sample files.
    Validate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sample files produced by `gbs sample`.
        #[arg(required = true, num_args = 1..)]
        samples: Vec<PathBuf>,
        #[arg(long)]
        clicks_band: Option<String>,
    },
    /// Measure kernel scaling and produce the classical-cost table.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        kmin: usize,
        #[arg(long, default_value_t = 16)]
        kmax: usize,
        /// Timing repetitions per click count (median is reported).
        #[arg(long, default_value_t = 3)]
        reps: u32,
        /// Reuse a previous bench.csv instead of measuring.
        #[arg(long)]
        bench_input: Option<PathBuf>,
        /// Cost model: "fitted" (local measurements) or "anchor"
        /// (published two-point supercomputer benchmark).
        #[arg(long, default_value = "fitted")]
        cost_model: String,
        /// Click histogram for the cost table: a click_hist.csv produced by
        /// validate, or "reference" for the synthetic published-shape
        /// histogram.
        #[arg(long, default_value = "reference")]
        hist: String,
        /// Kernel evaluations per retained sample in the cost accounting.
        #[arg(long, default_value_t = 100.0)]
        tps: f64,
    },
    /// Generate a Haar-random interferometer and check its statistics.
    Haar {
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the CSV artifacts in a directory to static SVG plots.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("gbs: failed to configure {workers} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("gbs: {err}");
            ExitCode::from(err.code())
        }
    }
}
