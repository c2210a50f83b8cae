//! twinbeam: model evaluation, coincidence histogramming, Mandel-Q analysis,
//! stream synthesis, and squeezing spectra from one binary.
//!
//! Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical
//! convergence error.

mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "twinbeam", version, about = "Twin-beam photon statistics toolkit")]
struct Cli {
    /// Worker threads (default: TWINBEAM_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the coincidence-profile model C(tau) from a parameter file.
    Model(commands::ModelArgs),
    /// Histogram coincidences between the two channels of a tag file.
    Coincide(commands::CoincideArgs),
    /// Mandel-Q with bootstrap uncertainty, per channel.
    Mandel(commands::MandelArgs),
    /// Generate synthetic two-channel photon streams.
    Simulate(commands::SimulateArgs),
    /// Intensity-difference squeezing spectrum from simulated twin traces.
    Squeeze(commands::SqueezeArgs),
}

fn main() {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("TWINBEAM_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap_or_else(|e| {
            eprintln!("error: cannot build thread pool: {e}");
            std::process::exit(2);
        });

    let result = pool.install(|| match cli.command {
        Command::Model(args) => commands::run_model(args),
        Command::Coincide(args) => commands::run_coincide(args),
        Command::Mandel(args) => commands::run_mandel(args),
        Command::Simulate(args) => commands::run_simulate(args),
        Command::Squeeze(args) => commands::run_squeeze(args),
    });

    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.exit_code);
    }
}
