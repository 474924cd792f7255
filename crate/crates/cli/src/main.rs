//! `wfpc` command line: voting-power analysis, fairness checks, message-
//! complexity reports, seeded consensus runs and parameter sweeps.
//!
//! Every value has three layers: built-in default, optional `--config`
//! file (flat `key = value` lines), then explicit flags. Whatever a run
//! resolves to is echoed into the output directory as `config.txt`, so any
//! output can be reproduced from its artifacts alone. All randomness hangs
//! off `--seed`.

mod commands;
mod layers;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use layers::{AxisArg, F64List, MethodArg, U64List, WeightFnArg};

#[derive(Parser)]
#[command(
    name = "wfpc",
    version,
    about = "Weighted fast probabilistic consensus: simulator and analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-node voting power of a weight distribution under a scheme
    Power(PowerArgs),
    /// Voting-power change from splitting one node's weight
    Fairness(FairnessArgs),
    /// Repeated seeded consensus runs at a fixed configuration
    Simulate(SimulateArgs),
    /// Failure-rate sweep along one axis (q, k or s)
    Sweep(SweepArgs),
    /// Analytic query-load profile, optionally checked against telemetry
    Complexity(ComplexityArgs),
    /// Fit a Zipf exponent to a value file by log-log regression
    FitZipf(FitZipfArgs),
}

#[derive(Args)]
struct IoArgs {
    /// Flat key = value config file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV results and the resolved config echo
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WeightSourceArgs {
    /// Zipf exponent for generated weights [default: 1]
    #[arg(long = "zipf-s")]
    zipf_s: Option<f64>,
    /// Node count for generated weights [default: 100]
    #[arg(long)]
    n: Option<usize>,
    /// Weight file, one weight per line; overrides --zipf-s/--n
    #[arg(long = "weights-file")]
    weights_file: Option<PathBuf>,
    /// Sampling weight map: id | const | pow:<alpha> [default: id]
    #[arg(long)]
    f: Option<WeightFnArg>,
    /// Opinion weight map: id | const | pow:<alpha> [default: const]
    #[arg(long)]
    g: Option<WeightFnArg>,
    /// Quorum size [default: 20]
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct PowerArgs {
    #[command(flatten)]
    weights: WeightSourceArgs,
    /// Computation method: exact | mc [default: exact]
    #[arg(long)]
    method: Option<MethodArg>,
    /// Monte-Carlo sample count [default: 100000]
    #[arg(long)]
    samples: Option<u64>,
    /// Seed for all randomness [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct FairnessArgs {
    #[command(flatten)]
    weights: WeightSourceArgs,
    /// Node (identity index) to split [default: 0]
    #[arg(long)]
    node: Option<usize>,
    /// Comma-separated split ratios in (0,1) [default: 0.1,0.25,0.5]
    #[arg(long = "split-ratios")]
    split_ratios: Option<F64List>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct ProtocolArgs {
    /// Total node count, honest plus adversarial [default: 100]
    #[arg(long)]
    n: Option<usize>,
    /// Quorum size [default: 20]
    #[arg(long)]
    k: Option<usize>,
    /// First-round threshold [default: 0.66]
    #[arg(long)]
    tau: Option<f64>,
    /// Random-threshold bound; U_t is uniform on [beta, 1-beta] [default: 0.3]
    #[arg(long)]
    beta: Option<f64>,
    /// Consecutive stable rounds required to finalize [default: 10]
    #[arg(long)]
    l: Option<u32>,
    /// Hard cap on rounds [default: 50]
    #[arg(long = "max-it")]
    max_it: Option<u32>,
    /// Adversary weight fraction in [0,1) [default: 0]
    #[arg(long)]
    q: Option<f64>,
    /// Zipf exponent of the honest weights [default: 1]
    #[arg(long)]
    s: Option<f64>,
    /// Initial average opinion target [default: 0.66]
    #[arg(long)]
    p0: Option<f64>,
    /// Repetitions per configuration [default: 300]
    #[arg(long)]
    reps: Option<u32>,
    /// Probability that a queried reply goes missing [default: 0]
    #[arg(long = "reply-drop")]
    reply_drop: Option<f64>,
    /// Sampling weight map: id | const | pow:<alpha> [default: id]
    #[arg(long)]
    f: Option<WeightFnArg>,
    /// Opinion weight map: id | const | pow:<alpha> [default: const]
    #[arg(long)]
    g: Option<WeightFnArg>,
    /// Seed for all randomness [default: 1]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Axis to sweep: q | k | s
    #[arg(long)]
    axis: Option<AxisArg>,
    /// Comma-separated axis values
    #[arg(long)]
    values: Option<F64List>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Node count [default: 100]
    #[arg(long)]
    n: Option<usize>,
    /// Zipf exponent [default: 1]
    #[arg(long)]
    s: Option<f64>,
    /// Quorum size [default: 20]
    #[arg(long)]
    k: Option<usize>,
    /// Telemetry rounds to simulate; 0 emits the analytic profile only [default: 0]
    #[arg(long)]
    rounds: Option<u64>,
    /// Seed for telemetry sampling [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct FitZipfArgs {
    /// Input file: one positive decimal value per line
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated explicit ranks, paired with the values as given
    #[arg(long)]
    ranks: Option<U64List>,
    /// Fit only the largest max-rank values
    #[arg(long = "max-rank")]
    max_rank: Option<usize>,
    #[command(flatten)]
    io: IoArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Power(args) => commands::power(args),
        Command::Fairness(args) => commands::fairness(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Complexity(args) => commands::complexity(args),
        Command::FitZipf(args) => commands::fit_zipf(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
