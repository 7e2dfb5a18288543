//! Boundary-warping label augmentation and bias-aware segmentation scoring,
//! as a batch command-line tool.
//!
//! Five subcommands cover the two pipelines: `warp` distorts label-map
//! boundaries for augmented training sets; `perturb`, `evaluate`,
//! `bias-split` and `report` probe which classes a segmenter still scores
//! after their content is destroyed, and present split metrics. Every run
//! is deterministic under (config, inputs): worker counts never change
//! output bytes, and each run dumps its effective config for replay.

mod commands;
mod config;
mod manifest;
mod pairing;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonOpts, ToolConfig};

#[derive(Parser)]
#[command(
    name = "warpeval",
    version,
    about = "Warp label-map boundaries, probe segmentation bias, report split metrics"
)]
struct Cli {
    #[command(flatten)]
    common: CommonOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Warp label-map boundaries with seeded thin-plate splines.
    Warp(commands::warp::WarpArgs),
    /// Replace class segments in images with statistics-derived fills.
    Perturb(commands::perturb::PerturbArgs),
    /// Score predictions against ground truth (PA, MA, mIoU, confusion).
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Partition classes into biased and unbiased sides.
    BiasSplit(commands::bias_split::BiasSplitArgs),
    /// Render metric JSONs as a text or CSV table.
    Report(commands::report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("error: {n} input(s) failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<usize> {
    let cfg = ToolConfig::resolve(&cli.common)?;
    config::with_worker_pool(cfg.io.workers, || match &cli.command {
        Command::Warp(args) => commands::warp::run(args, cfg.clone()),
        Command::Perturb(args) => commands::perturb::run(args, cfg.clone()),
        Command::Evaluate(args) => commands::evaluate::run(args, cfg.clone()),
        Command::BiasSplit(args) => commands::bias_split::run(args, cfg.clone()),
        Command::Report(args) => commands::report::run(args, cfg.clone()),
    })?
}
