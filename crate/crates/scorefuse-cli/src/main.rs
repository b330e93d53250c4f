//! Batch front end: score-matrix ingestion, transform fitting, combining,
//! conformal calibration, detection, evaluation, and simulation.
//!
//! Exit codes: 0 success, 2 usage/config/schema error, 3 data/numeric error.

mod artifacts;
mod commands;
mod config;
mod errors;
mod io;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "scorefuse",
    version,
    about = "Fuse per-sample inlier scores into out-of-distribution decisions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the per-column z-transform (plus optional CSI weights and
    /// covariance) on inlier training scores
    Fit(commands::fit::FitArgs),
    /// Combine test scores into one statistic per sample under a rule
    Combine(commands::combine::CombineArgs),
    /// Calibrate a conformal detector on an independent validation set
    #[command(name = "calibrate-conformal")]
    CalibrateConformal(commands::calibrate::CalibrateArgs),
    /// Apply a calibrated detector to a test file
    Detect(commands::detect::DetectArgs),
    /// Compute AUROC and DR@FAR from labeled statistics
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Run seeded synthetic negative-means benchmarks
    Simulate(commands::simulate::SimulateArgs),
    /// Eigen-score analysis of the GLRT on labeled test scores
    Eigen(commands::eigen::EigenArgs),
    /// Emit calibrated statistic-curve plot data for scalar rules
    Curve(commands::curve::CurveArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => commands::fit::run(args),
        Command::Combine(args) => commands::combine::run(args),
        Command::CalibrateConformal(args) => commands::calibrate::run(args),
        Command::Detect(args) => commands::detect::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Eigen(args) => commands::eigen::run(args),
        Command::Curve(args) => commands::curve::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
