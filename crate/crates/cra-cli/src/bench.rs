//! Strategy/worker grid on a single input, reporting counts and wall time,
//! with a cross-strategy equality check on the results.

use std::process::ExitCode;

use cra_core::error::{Error, Result};
use cra_core::BigInt;

use crate::runner::{self, Job, RunPlan};
use crate::{CommonArgs, Output, ParallelMode, Strategy, Task};

struct Row {
    strategy: Strategy,
    parallel: ParallelMode,
    workers: usize,
    result: Vec<BigInt>,
    stats: cra_core::controller::RunStats,
}

fn parse_workers_list(list: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for token in list.split(',') {
        let w: usize = token
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad worker count: {token:?}")))?;
        if w == 0 {
            return Err(Error::Parse("worker counts must be positive".into()));
        }
        out.push(w);
    }
    if out.is_empty() {
        return Err(Error::Parse("empty workers list".into()));
    }
    Ok(out)
}

fn parse_random_spec(spec: &str) -> Result<(usize, u32)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!("--random wants \"n,bits\", got {spec:?}")));
    }
    let n = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension: {:?}", parts[0])))?;
    let bits = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad bit size: {:?}", parts[1])))?;
    Ok((n, bits))
}

pub fn cmd_bench(
    common: &CommonArgs,
    input: Option<&str>,
    random: Option<&str>,
    workers_list: &str,
) -> Result<ExitCode> {
    let workers = parse_workers_list(workers_list)?;
    let strategies: Vec<Strategy> = match common.strategy {
        Some(s) => vec![s],
        None => Strategy::all().to_vec(),
    };
    let job = load_job(common, input, random)?;

    let mut rows = Vec::new();
    for &strategy in &strategies {
        for &w in &workers {
            let parallel = if w == 1 {
                ParallelMode::Off
            } else if common.parallel == ParallelMode::Off {
                ParallelMode::Adaptive
            } else {
                common.parallel
            };
            let plan = RunPlan {
                parallel,
                workers: w,
                sync_every: common.resolve_sync_every(w),
                trace: false,
            };
            let mut builder =
                runner::make_builder(strategy, &job, common.et, common.prime_bits, common.seed)?;
            let (result, stats) = runner::execute(builder.as_mut(), &job, &plan)?;
            rows.push(Row {
                strategy,
                parallel,
                workers: w,
                result,
                stats,
            });
        }
    }

    // Every cell must agree on the exact result.
    if let Some(first) = rows.first() {
        for row in &rows[1..] {
            if row.result != first.result {
                return Err(Error::Parse(format!(
                    "strategy {} at {} workers disagreed with {}",
                    row.strategy.name(),
                    row.workers,
                    first.strategy.name()
                )));
            }
        }
    }

    match common.output {
        Output::Plain => print_table(&rows),
        Output::Json => print_json(&rows),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_job(common: &CommonArgs, input: Option<&str>, random: Option<&str>) -> Result<Job> {
    if let Some(spec) = random {
        if common.task == Task::Fixed {
            return Err(Error::Parse("--random generates matrices, not fixed values".into()));
        }
        let (n, bits) = parse_random_spec(spec)?;
        let matrix = runner::random_matrix(n, bits, common.seed);
        return runner::make_job(common.task, runner::TaskInput::Matrix(matrix));
    }
    let path = input.ok_or_else(|| Error::Parse("bench needs an input path or --random".into()))?;
    let parsed = runner::load_input(common.task, common.format, path)?;
    runner::make_job(common.task, parsed)
}

fn print_table(rows: &[Row]) {
    println!(
        "{:<14} {:<9} {:>7} {:>12} {:>9} {:>7} {:>12}",
        "strategy", "parallel", "workers", "wall_s", "applies", "probes", "primes_used"
    );
    for row in rows {
        println!(
            "{:<14} {:<9} {:>7} {:>12.6} {:>9} {:>7} {:>12}",
            row.strategy.name(),
            row.parallel.name(),
            row.workers,
            row.stats.wall_time.as_secs_f64(),
            row.stats.applies,
            row.stats.probes,
            row.stats.primes_used
        );
    }
    if let Some(first) = rows.first() {
        let rendered: Vec<String> = first.result.iter().map(|v| v.to_string()).collect();
        eprintln!("result (all cells agree): {}", rendered.join(" "));
    }
}

fn print_json(rows: &[Row]) {
    let cells: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            serde_json::json!({
                "strategy": row.strategy.name(),
                "parallel": row.parallel.name(),
                "workers": row.workers,
                "result": row.result.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "stats": runner::stats_json(&row.stats),
            })
        })
        .collect();
    println!("{}", serde_json::Value::Array(cells));
}
