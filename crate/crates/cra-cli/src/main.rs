mod bench;
mod runner;
mod selfcheck;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cra_core::error::Error;

#[derive(Parser)]
#[command(
    name = "cra",
    version,
    about = "Exact integer results from modular residues: determinants and characteristic polynomials by Chinese remaindering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the exact result for one input and print it
    Solve(SolveArgs),
    /// Run the built-in oracle suites at desk scale
    Selfcheck(SelfcheckArgs),
    /// Run the task across strategies and worker counts, reporting counts and timings
    Bench(BenchArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum Task {
    /// Determinant of a square integer matrix
    Det,
    /// Characteristic polynomial coefficients, constant term first
    Charpoly,
    /// Reconstruct fixed integers read from the input (a test harness)
    Fixed,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum Strategy {
    /// Stack residues until the modulus product clears the precomputed bound
    Deterministic,
    /// Stop after ET consecutive agreeing residues (vector tasks fall back to early-multi)
    Early,
    /// Early termination of a vector via one random linear combination
    EarlyMulti,
    /// Probabilistic test only at power-of-two residue counts
    Balanced,
    /// Probabilistic test on a sub-geometric schedule of counts
    Amortized,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Deterministic => "deterministic",
            Strategy::Early => "early",
            Strategy::EarlyMulti => "early-multi",
            Strategy::Balanced => "balanced",
            Strategy::Amortized => "amortized",
        }
    }

    pub fn all() -> [Strategy; 5] {
        [
            Strategy::Deterministic,
            Strategy::Early,
            Strategy::EarlyMulti,
            Strategy::Balanced,
            Strategy::Amortized,
        ]
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum ParallelMode {
    /// Single-threaded control loop
    Off,
    /// Work-stealing victim/thief loop with cooperative preemption
    Adaptive,
    /// Blocks of parallel applies with a barrier and test after each block
    Naive,
}

impl ParallelMode {
    pub fn name(self) -> &'static str {
        match self {
            ParallelMode::Off => "off",
            ParallelMode::Adaptive => "adaptive",
            ParallelMode::Naive => "naive",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    /// Sparse triplets: header "n m tag", 1-indexed "i j v" lines, "0 0 0" end
    Sms,
    /// First token n, then n*n whitespace-separated signed integers
    Dense,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum Output {
    Plain,
    Json,
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value_t = Task::Det)]
    pub task: Task,

    /// Reconstruction strategy (solve default: deterministic; bench default: all)
    #[arg(long, value_enum)]
    pub strategy: Option<Strategy>,

    /// Early-termination threshold: consecutive agreeing residues required
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub et: u32,

    /// Prime modulus bit size (matrix tasks need <= 31)
    #[arg(long, default_value_t = 29, value_parser = clap::value_parser!(u32).range(8..=62))]
    pub prime_bits: u32,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = ParallelMode::Off)]
    pub parallel: ParallelMode,

    /// Worker threads (default: $CRA_WORKERS, else all cores in parallel modes)
    #[arg(long)]
    pub workers: Option<usize>,

    /// Moduli per synchronization epoch in adaptive mode (default: 4 * workers)
    #[arg(long)]
    pub sync_every: Option<u64>,

    /// Input matrix format
    #[arg(long, value_enum, default_value_t = Format::Dense)]
    pub format: Format,

    #[arg(long, value_enum, default_value_t = Output::Plain)]
    pub output: Output,

    /// Log one line per steal/grant/preempt/sync event to stderr
    #[arg(long)]
    pub trace: bool,
}

impl CommonArgs {
    pub fn resolve_workers(&self) -> usize {
        if let Some(w) = self.workers {
            return w.max(1);
        }
        if let Ok(env) = std::env::var("CRA_WORKERS") {
            if let Ok(w) = env.trim().parse::<usize>() {
                return w.max(1);
            }
        }
        match self.parallel {
            ParallelMode::Off => 1,
            _ => std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1),
        }
    }

    pub fn resolve_sync_every(&self, workers: usize) -> u64 {
        self.sync_every.unwrap_or(4 * workers as u64).max(1)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Input path, or '-' for standard input
    input: String,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[command(flatten)]
    common: CommonArgs,

    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Input path, or '-' for standard input (alternative: --random)
    input: Option<String>,

    /// Generate a seeded random n x n matrix with entries in [-2^bits, 2^bits]
    #[arg(long, value_name = "N,BITS", conflicts_with = "input")]
    random: Option<String>,

    /// Comma-separated worker counts for the grid
    #[arg(long, value_name = "LIST", default_value = "1")]
    workers_list: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => runner::cmd_solve(&args.common, &args.input),
        Command::Selfcheck(args) => selfcheck::cmd_selfcheck(&args.common, args.inject_fault),
        Command::Bench(args) => bench::cmd_bench(
            &args.common,
            args.input.as_deref(),
            args.random.as_deref(),
            &args.workers_list,
        ),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => 2,
        Error::Step { source, .. } => exit_code_for(source),
        _ => 1,
    }
}
