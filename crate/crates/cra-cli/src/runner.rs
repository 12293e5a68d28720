//! Wiring from CLI options to black boxes, builders and control loops.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::process::ExitCode;

use cra_core::blackbox::{
    read_matrix, BlackBox, CharpolyBlackBox, DetBlackBox, FixedOracle, IntMatrix, MatrixFormat,
};
use cra_core::builder::{
    AmortizedBuilder, BalancedBuilder, Builder, DeterministicBuilder, EarlyMultiBuilder,
    EarlySingleBuilder,
};
use cra_core::controller::RunStats;
use cra_core::error::{Error, Result};
use cra_core::parallel::TraceLog;
use cra_core::primes::{GeneratorMode, ModulusGenerator};
use cra_core::{BigInt, BigUint};

use crate::{CommonArgs, Format, Output, ParallelMode, Strategy, Task};

pub enum TaskInput {
    Matrix(IntMatrix),
    Fixed(Vec<BigInt>),
}

pub fn open_input(path: &str) -> Result<Box<dyn BufRead>> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(Box::new(std::io::Cursor::new(buf)))
    } else {
        Ok(Box::new(BufReader::new(File::open(path)?)))
    }
}

pub fn load_input(task: Task, format: Format, path: &str) -> Result<TaskInput> {
    let reader = open_input(path)?;
    match task {
        Task::Det | Task::Charpoly => {
            let fmt = match format {
                Format::Sms => MatrixFormat::Sms,
                Format::Dense => MatrixFormat::Dense,
            };
            Ok(TaskInput::Matrix(read_matrix(reader, fmt)?))
        }
        Task::Fixed => {
            let mut values = Vec::new();
            for line in reader.lines() {
                for token in line?.split_whitespace() {
                    let v: BigInt = token
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad integer: {token:?}")))?;
                    values.push(v);
                }
            }
            if values.is_empty() {
                return Err(Error::Parse("no integers in input".into()));
            }
            Ok(TaskInput::Fixed(values))
        }
    }
}

/// A black box plus the bit bound its deterministic strategy needs.
pub struct Job {
    pub blackbox: Box<dyn BlackBox>,
    pub bound_bits: u64,
    pub dimension: usize,
}

pub fn make_job(task: Task, input: TaskInput) -> Result<Job> {
    match (task, input) {
        (Task::Det, TaskInput::Matrix(m)) => {
            let bb = DetBlackBox::new(m);
            let bound = bb.bound_bits();
            Ok(Job {
                blackbox: Box::new(bb),
                bound_bits: bound,
                dimension: 1,
            })
        }
        (Task::Charpoly, TaskInput::Matrix(m)) => {
            let bb = CharpolyBlackBox::new(m);
            let bound = bb.bound_bits();
            let dimension = bb.matrix().n() + 1;
            Ok(Job {
                blackbox: Box::new(bb),
                bound_bits: bound,
                dimension,
            })
        }
        (Task::Fixed, TaskInput::Fixed(values)) => {
            let bound = values.iter().map(|v| v.magnitude().bits()).max().unwrap_or(0);
            let dimension = values.len();
            Ok(Job {
                blackbox: Box::new(FixedOracle::new(values)),
                bound_bits: bound,
                dimension,
            })
        }
        _ => unreachable!("task/input mismatch"),
    }
}

fn generator(bits: u32, seed: u64, mode: GeneratorMode) -> Result<ModulusGenerator> {
    ModulusGenerator::new(bits, seed, mode)
}

pub fn make_builder(
    strategy: Strategy,
    job: &Job,
    et: u32,
    prime_bits: u32,
    seed: u64,
) -> Result<Box<dyn Builder>> {
    let d = job.dimension;
    let probe_seed = seed ^ 0x70726f6265; // disjoint stream for probe draws
    Ok(match strategy {
        Strategy::Deterministic => Box::new(DeterministicBuilder::new(
            d,
            job.bound_bits,
            generator(prime_bits, seed, GeneratorMode::Descending)?,
        )),
        Strategy::Early if d == 1 => Box::new(EarlySingleBuilder::new(
            et,
            generator(prime_bits, seed, GeneratorMode::Random)?,
        )),
        // Single-residue early termination is scalar; vector tasks run the
        // linear-combination builder instead.
        Strategy::Early | Strategy::EarlyMulti => Box::new(EarlyMultiBuilder::new(
            d,
            et,
            generator(prime_bits, seed, GeneratorMode::Random)?,
        )),
        Strategy::Balanced => Box::new(BalancedBuilder::new(
            d,
            et,
            generator(prime_bits, seed, GeneratorMode::Descending)?,
            generator(prime_bits, probe_seed, GeneratorMode::Random)?,
        )),
        Strategy::Amortized => Box::new(AmortizedBuilder::new(
            d,
            et,
            generator(prime_bits, seed, GeneratorMode::Descending)?,
            generator(prime_bits, probe_seed, GeneratorMode::Random)?,
        )),
    })
}

pub struct RunPlan {
    pub parallel: ParallelMode,
    pub workers: usize,
    pub sync_every: u64,
    pub trace: bool,
}

pub fn execute(builder: &mut dyn Builder, job: &Job, plan: &RunPlan) -> Result<(Vec<BigInt>, RunStats)> {
    let bb: &dyn BlackBox = job.blackbox.as_ref();
    match plan.parallel {
        ParallelMode::Off => cra_core::controller::run(builder, bb),
        ParallelMode::Adaptive => {
            let log = plan.trace.then(TraceLog::new);
            let out = cra_core::parallel::run_adaptive(
                builder,
                bb,
                plan.workers,
                plan.sync_every,
                log.as_ref(),
            )?;
            if let Some(log) = &log {
                for event in log.events() {
                    eprintln!("{event}");
                }
            }
            Ok(out)
        }
        ParallelMode::Naive => {
            cra_core::parallel::run_block_naive(builder, bb, plan.workers, plan.workers)
        }
    }
}

pub fn run_once(common: &CommonArgs, job: &Job, strategy: Strategy) -> Result<(Vec<BigInt>, RunStats)> {
    let workers = common.resolve_workers();
    let plan = RunPlan {
        parallel: common.parallel,
        workers,
        sync_every: common.resolve_sync_every(workers),
        trace: common.trace,
    };
    let mut builder = make_builder(strategy, job, common.et, common.prime_bits, common.seed)?;
    execute(builder.as_mut(), job, &plan)
}

pub fn stats_json(stats: &RunStats) -> serde_json::Value {
    serde_json::json!({
        "applies": stats.applies,
        "probes": stats.probes,
        "primes_used": stats.primes_used,
        "reconstruct_combines": stats.reconstruct_combines,
        "wall_time_s": stats.wall_time.as_secs_f64(),
    })
}

pub fn print_stats(stats: &RunStats) {
    eprintln!(
        "primes_used={} applies={} probes={} combines={} wall_time={:.6}s",
        stats.primes_used,
        stats.applies,
        stats.probes,
        stats.reconstruct_combines,
        stats.wall_time.as_secs_f64()
    );
}

pub fn cmd_solve(common: &CommonArgs, input: &str) -> Result<ExitCode> {
    let strategy = common.strategy.unwrap_or(Strategy::Deterministic);
    let parsed = load_input(common.task, common.format, input)?;
    let job = make_job(common.task, parsed)?;
    let (result, stats) = run_once(common, &job, strategy)?;
    match common.output {
        Output::Plain => {
            for value in &result {
                println!("{value}");
            }
            print_stats(&stats);
        }
        Output::Json => {
            let json = serde_json::json!({
                "task": format!("{:?}", common.task).to_lowercase(),
                "strategy": strategy.name(),
                "result": result.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "stats": stats_json(&stats),
            });
            println!("{json}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Entries in [-2^bits, 2^bits], reproducible from the seed.
pub fn random_matrix(n: usize, bits: u32, seed: u64) -> IntMatrix {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let bound = BigInt::from(BigUint::from(1u32) << bits) + 1;
    let entries: Vec<BigInt> = (0..n * n)
        .map(|_| {
            let magnitude: BigInt = BigInt::from(BigUint::from_bytes_le(
                &(0..bits.div_ceil(8)).map(|_| rng.random::<u8>()).collect::<Vec<_>>(),
            )) % &bound;
            if rng.random_bool(0.5) {
                -magnitude
            } else {
                magnitude
            }
        })
        .collect();
    IntMatrix::new(n, entries).expect("square by construction")
}
