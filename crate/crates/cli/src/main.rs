//! `bfly`: functional checks, accelerator simulation, layout verification,
//! FLOP accounting and design-space exploration from one binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error.

mod check;
mod dse;
mod flops;
mod manifest;
mod output;
mod sim;

use std::path::PathBuf;
use std::process::ExitCode;

use bfly_core::butterfly::Precision;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bfly", version, about = "Butterfly accelerator laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// FFT against a direct DFT and butterfly against its dense expansion.
    FftCheck(check::FftCheckArgs),
    /// FLOP and parameter counts per model family.
    Flops(flops::FlopsArgs),
    /// Per-layer latency of a model on one accelerator.
    Simulate(sim::SimulateArgs),
    /// Latency over a list of off-chip bandwidths.
    BandwidthSweep(sim::SweepArgs),
    /// Bank conflicts of the butterfly memory layout.
    VerifyLayout(check::LayoutArgs),
    /// Grid search over model and hardware parameters.
    Dse(dse::DseArgs),
    /// Accelerator against a dense MAC-array baseline.
    BaselineCompare(sim::BaselineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Fp16,
    Fp64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Fp16 => Precision::Fp16,
            PrecisionArg::Fp64 => Precision::Fp64,
        }
    }
}

/// Report destination and format, shared by most subcommands.
#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    report: ReportFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Outcome of a subcommand that ran to completion.
enum Status {
    Pass,
    VerifyFailed,
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::FftCheck(a) => check::fft_check(&a),
        Command::Flops(a) => flops::run(&a),
        Command::Simulate(a) => sim::simulate(&a),
        Command::BandwidthSweep(a) => sim::sweep(&a),
        Command::VerifyLayout(a) => check::verify_layout(&a),
        Command::Dse(a) => dse::run(&a),
        Command::BaselineCompare(a) => sim::baseline_compare(&a),
    }
}

fn main() -> ExitCode {
    // clap itself exits with 2 on malformed arguments
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::VerifyFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
