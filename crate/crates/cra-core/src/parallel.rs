//! Adaptive parallel control loop plus the naive block-synchronous baseline.
//!
//! The victim thread owns the builder, the generator and the termination
//! decision. Idle workers post steal requests; the victim (and working
//! thieves, recursively) answer them with finite budgets of fresh moduli, so
//! coprimality across workers holds by construction. Thieves only apply the
//! black box; their (residue, modulus) lists flow back over a channel and are
//! folded in by the victim, which makes the final value equal to a sequential
//! fold of the same multiset. Preemption is cooperative: a per-worker flag
//! polled between applies.

use std::cell::Cell;
use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{Receiver, Sender};
use std::sync::{mpsc, Arc, Mutex};
use std::time::Instant;

use num_bigint::BigInt;

use crate::blackbox::BlackBox;
use crate::builder::{Builder, ModulusBudget};
use crate::controller::{self, RunStats};
use crate::error::{Error, Result};

/// Cooperative preemption flag a thief polls between applies.
#[derive(Debug, Clone, Default)]
pub struct PreemptionToken(Arc<AtomicBool>);

impl PreemptionToken {
    pub fn new() -> PreemptionToken {
        PreemptionToken::default()
    }

    pub fn raise(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn lower(&self) {
        self.0.store(false, Ordering::SeqCst);
    }

    pub fn is_raised(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// What a thief ships back: residues and the moduli they were computed under,
/// plus whether the budget ran to completion or was cut short by preemption.
#[derive(Debug, Clone, Default)]
pub struct ThiefResult {
    pub residues: Vec<Vec<u64>>,
    pub moduli: Vec<u64>,
    pub completed: bool,
}

/// One structured line per scheduling event, for debugging and the
/// wasted-work measurements.
#[derive(Debug, Clone)]
pub struct TraceEvent {
    pub event: &'static str,
    pub worker: usize,
    pub iteration: u64,
    pub primes_held: usize,
}

impl std::fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "event={} worker={} iteration={} primes_held={}",
            self.event, self.worker, self.iteration, self.primes_held
        )
    }
}

#[derive(Debug, Default)]
pub struct TraceLog {
    events: Mutex<Vec<TraceEvent>>,
}

impl TraceLog {
    pub fn new() -> TraceLog {
        TraceLog::default()
    }

    fn record(&self, event: &'static str, worker: usize, iteration: u64, primes_held: usize) {
        self.events.lock().unwrap().push(TraceEvent {
            event,
            worker,
            iteration,
            primes_held,
        });
    }

    pub fn events(&self) -> Vec<TraceEvent> {
        self.events.lock().unwrap().clone()
    }
}

fn trace(log: Option<&TraceLog>, event: &'static str, worker: usize, iteration: u64, held: usize) {
    if let Some(log) = log {
        log.record(event, worker, iteration, held);
    }
}

/// ceil(total / parties)
fn even_split(total: usize, parties: usize) -> usize {
    if parties == 0 {
        total
    } else {
        total.div_ceil(parties)
    }
}

/// Answer `n_requests` simultaneous steal requests with disjoint budgets of
/// fresh moduli, sized by the remaining-work estimate for bound-driven
/// strategies and by the synchronization budget for early-terminated ones
/// (each party, the victim included, gets `ceil(pool / (n_requests + 1))`).
pub fn splitter<B: Builder + ?Sized>(
    builder: &mut B,
    n_requests: usize,
    sync_every: u64,
) -> Result<Vec<ModulusBudget>> {
    if n_requests == 0 {
        return Ok(Vec::new());
    }
    let pool = builder.remaining_hint().unwrap_or(sync_every) as usize;
    let per = even_split(pool, n_requests + 1);
    let mut left = pool; // thieves draw first; the victim keeps the remainder
    let mut budgets = Vec::with_capacity(n_requests);
    for _ in 0..n_requests {
        let size = per.min(left);
        budgets.push(builder.subgenerator(size)?);
        left -= size;
    }
    Ok(budgets)
}

/// Work through a budget, polling for preemption before every apply.
/// Preempted mid-budget, the partial lists come back with `completed = false`.
pub fn thief_entrypoint<X: BlackBox + ?Sized>(
    budget: &mut ModulusBudget,
    bb: &X,
    preempt: &PreemptionToken,
) -> Result<ThiefResult> {
    thief_loop(budget, bb, preempt, None, 0)
}

struct StealContext<'a> {
    requests: &'a Mutex<Vec<StealRequest>>,
    outstanding: &'a AtomicUsize,
    applies: &'a AtomicU64,
    trace: Option<&'a TraceLog>,
}

fn thief_loop<X: BlackBox + ?Sized>(
    budget: &mut ModulusBudget,
    bb: &X,
    preempt: &PreemptionToken,
    steal: Option<&StealContext<'_>>,
    worker: usize,
) -> Result<ThiefResult> {
    let mut out = ThiefResult {
        completed: true,
        ..ThiefResult::default()
    };
    loop {
        if budget.is_empty() {
            break;
        }
        if preempt.is_raised() {
            out.completed = false;
            break;
        }
        // Steal section: a working thief may serve a pending request by
        // splitting off half of what it still holds.
        if let Some(ctx) = steal {
            if budget.remaining() >= 2 {
                if let Ok(mut queue) = ctx.requests.try_lock() {
                    if let Some(req) = queue.pop() {
                        let half = budget.split_half();
                        trace(ctx.trace, "substeal", worker, 0, half.remaining());
                        ctx.outstanding.fetch_add(1, Ordering::SeqCst);
                        if req.reply.send(Grant::Budget(half)).is_err() {
                            ctx.outstanding.fetch_sub(1, Ordering::SeqCst);
                        }
                    }
                }
            }
        }
        let p = budget.next().expect("checked non-empty");
        let values = bb.apply(p)?;
        if let Some(ctx) = steal {
            ctx.applies.fetch_add(1, Ordering::SeqCst);
        }
        out.moduli.push(p);
        out.residues.push(values);
    }
    Ok(out)
}

enum Grant {
    Budget(ModulusBudget),
    Shutdown,
}

struct StealRequest {
    worker: usize,
    reply: Sender<Grant>,
}

/// Adaptive work-stealing run (the victim loop).
///
/// `sync_every` is the modulus budget of one synchronization epoch, shared by
/// the victim and the thieves it grants to; bound-driven builders size epochs
/// from their remaining-work estimate instead. Results are exact for any
/// interleaving; counts may vary run to run.
pub fn run_adaptive<B, X>(
    builder: &mut B,
    bb: &X,
    workers: usize,
    sync_every: u64,
    log: Option<&TraceLog>,
) -> Result<(Vec<BigInt>, RunStats)>
where
    B: Builder + ?Sized,
    X: BlackBox + Sync + ?Sized,
{
    assert!(workers >= 1, "worker count must be positive");
    assert!(sync_every >= 1, "sync_every must be positive");
    if !bb.reentrant() {
        return Err(Error::NotReentrant);
    }
    if bb.dimension() != builder.dimension() {
        return Err(Error::DimensionMismatch {
            expected: builder.dimension(),
            got: bb.dimension(),
        });
    }
    if workers == 1 {
        return controller::run(builder, bb);
    }

    let start = Instant::now();
    builder.initialize();
    let n_thieves = workers - 1;
    let tokens: Vec<PreemptionToken> = (0..n_thieves).map(|_| PreemptionToken::new()).collect();
    let requests: Mutex<Vec<StealRequest>> = Mutex::new(Vec::new());
    let outstanding = AtomicUsize::new(0);
    let thief_applies = AtomicU64::new(0);
    let (results_tx, results_rx) = mpsc::channel::<(usize, Result<ThiefResult>)>();

    let mut grant_txs = Vec::with_capacity(n_thieves);
    let mut grant_rxs = VecDeque::with_capacity(n_thieves);
    for _ in 0..n_thieves {
        let (tx, rx) = mpsc::channel::<Grant>();
        grant_txs.push(tx);
        grant_rxs.push_back(rx);
    }

    let mut victim_applies = 0u64;
    let probes = Cell::new(0u64);

    let result: Result<Vec<BigInt>> = std::thread::scope(|scope| {
        for w in 0..n_thieves {
            let grant_rx = grant_rxs.pop_front().expect("one receiver per thief");
            let grant_tx = grant_txs[w].clone();
            let results_tx = results_tx.clone();
            let token = tokens[w].clone();
            let ctx = StealContext {
                requests: &requests,
                outstanding: &outstanding,
                applies: &thief_applies,
                trace: log,
            };
            scope.spawn(move || {
                worker_loop(w + 1, bb, grant_rx, grant_tx, results_tx, token, ctx);
            });
        }
        drop(results_tx); // workers hold the only senders now

        let mut body = |builder: &mut B| -> Result<Vec<BigInt>> {
            let mut share: VecDeque<u64> = VecDeque::new();
            loop {
                let more = builder
                    .not_terminated(&mut |p| {
                        probes.set(probes.get() + 1);
                        bb.apply(p)
                    })
                    .map_err(|e| e.at_iteration(victim_applies))?;
                if !more {
                    break;
                }
                if share.is_empty() {
                    drain_and_fold(builder, &tokens, &outstanding, &results_rx, log, victim_applies)?;
                    let more = builder
                        .not_terminated(&mut |p| {
                            probes.set(probes.get() + 1);
                            bb.apply(p)
                        })
                        .map_err(|e| e.at_iteration(victim_applies))?;
                    if !more {
                        break;
                    }
                    let epoch = builder.remaining_hint().unwrap_or(sync_every).max(1);
                    for _ in 0..epoch {
                        share.push_back(builder.next_coprime()?);
                    }
                    trace(log, "sync", 0, victim_applies, share.len());
                }
                // Steal section: answer every pending request out of the
                // victim's own work list before the next apply.
                serve_requests(&requests, &mut share, &tokens, &outstanding, log, victim_applies);
                let p = match share.pop_front() {
                    Some(p) => p,
                    None => continue, // everything granted away; synchronize
                };
                let values = bb.apply(p).map_err(|e| e.at_iteration(victim_applies))?;
                victim_applies += 1;
                builder
                    .update(&values, p)
                    .map_err(|e| e.at_iteration(victim_applies))?;
            }
            // Global termination: recall outstanding thieves and fold their
            // partial results before reconstructing.
            drain_and_fold(builder, &tokens, &outstanding, &results_rx, log, victim_applies)?;
            builder.reconstruct()
        };
        let out = body(builder);

        // Shutdown path runs whether the victim succeeded or not: recall any
        // stragglers, discard what cannot be folded, and release the workers.
        for t in &tokens {
            t.raise();
        }
        while outstanding.load(Ordering::SeqCst) > 0 {
            match results_rx.recv() {
                Ok(_) => {
                    outstanding.fetch_sub(1, Ordering::SeqCst);
                }
                Err(_) => break,
            }
        }
        for tx in &grant_txs {
            let _ = tx.send(Grant::Shutdown);
        }
        out
    });

    let values = result?;
    let stats = RunStats {
        applies: victim_applies + thief_applies.load(Ordering::SeqCst),
        probes: probes.get(),
        primes_used: builder.update_count(),
        reconstruct_combines: builder.combine_count(),
        wall_time: start.elapsed(),
    };
    Ok((values, stats))
}

/// Grant pending steal requests slices of the victim's work list:
/// each thief gets `ceil(len / (pending + 1))` moduli off the back.
fn serve_requests(
    requests: &Mutex<Vec<StealRequest>>,
    share: &mut VecDeque<u64>,
    tokens: &[PreemptionToken],
    outstanding: &AtomicUsize,
    log: Option<&TraceLog>,
    iteration: u64,
) {
    if share.len() < 2 {
        return;
    }
    let pending: Vec<StealRequest> = {
        let mut queue = requests.lock().unwrap();
        if queue.is_empty() {
            return;
        }
        std::mem::take(&mut *queue)
    };
    let per = even_split(share.len(), pending.len() + 1);
    let mut pending = pending.into_iter();
    for req in pending.by_ref() {
        let take = per.min(share.len().saturating_sub(1));
        if take == 0 {
            // Nothing left to give; the request waits for the next epoch.
            requests.lock().unwrap().push(req);
            break;
        }
        let primes: Vec<u64> = (0..take).filter_map(|_| share.pop_back()).collect();
        trace(log, "grant", req.worker, iteration, primes.len());
        tokens[req.worker - 1].lower();
        outstanding.fetch_add(1, Ordering::SeqCst);
        if req.reply.send(Grant::Budget(ModulusBudget::new(primes))).is_err() {
            outstanding.fetch_sub(1, Ordering::SeqCst);
        }
    }
    let mut queue = requests.lock().unwrap();
    queue.extend(pending);
}

/// Preempt all thieves, wait for every outstanding budget's result, and fold
/// the returned residues into the builder.
fn drain_and_fold<B: Builder + ?Sized>(
    builder: &mut B,
    tokens: &[PreemptionToken],
    outstanding: &AtomicUsize,
    results_rx: &Receiver<(usize, Result<ThiefResult>)>,
    log: Option<&TraceLog>,
    iteration: u64,
) -> Result<()> {
    if outstanding.load(Ordering::SeqCst) == 0 {
        return Ok(());
    }
    for t in tokens {
        t.raise();
    }
    trace(log, "preempt", 0, iteration, 0);
    let mut failure: Option<Error> = None;
    while outstanding.load(Ordering::SeqCst) > 0 {
        let (worker, res) = results_rx.recv().map_err(|_| Error::WorkerFailure {
            worker: 0,
            message: "all workers exited with budgets outstanding".into(),
        })?;
        outstanding.fetch_sub(1, Ordering::SeqCst);
        match res {
            Ok(tr) => {
                trace(log, "drain", worker, iteration, tr.moduli.len());
                if failure.is_none() {
                    if let Err(e) = builder.update_batch(&tr.residues, &tr.moduli) {
                        failure = Some(e);
                    }
                }
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some(Error::WorkerFailure {
                        worker,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    for t in tokens {
        t.lower();
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn worker_loop<X: BlackBox + Sync + ?Sized>(
    worker: usize,
    bb: &X,
    grant_rx: Receiver<Grant>,
    grant_tx: Sender<Grant>,
    results_tx: Sender<(usize, Result<ThiefResult>)>,
    token: PreemptionToken,
    ctx: StealContext<'_>,
) {
    loop {
        {
            let mut queue = ctx.requests.lock().unwrap();
            queue.push(StealRequest {
                worker,
                reply: grant_tx.clone(),
            });
        }
        trace(ctx.trace, "steal", worker, 0, 0);
        match grant_rx.recv() {
            Ok(Grant::Budget(mut budget)) => {
                let held = budget.remaining();
                let res = catch_unwind(AssertUnwindSafe(|| {
                    thief_loop(&mut budget, bb, &token, Some(&ctx), worker)
                }))
                .unwrap_or_else(|_| {
                    Err(Error::WorkerFailure {
                        worker,
                        message: "worker panicked".into(),
                    })
                });
                trace(ctx.trace, "return", worker, 0, held - budget.remaining());
                if results_tx.send((worker, res)).is_err() {
                    return; // controller gone
                }
            }
            Ok(Grant::Shutdown) | Err(_) => return,
        }
    }
}

/// Naive block-synchronous baseline: rounds of `block` parallel applies over
/// fresh primes, a barrier, one batched update, then the termination test.
pub fn run_block_naive<B, X>(
    builder: &mut B,
    bb: &X,
    workers: usize,
    block: usize,
) -> Result<(Vec<BigInt>, RunStats)>
where
    B: Builder + ?Sized,
    X: BlackBox + Sync + ?Sized,
{
    assert!(workers >= 1, "worker count must be positive");
    assert!(block >= 1, "block size must be positive");
    if !bb.reentrant() {
        return Err(Error::NotReentrant);
    }
    if bb.dimension() != builder.dimension() {
        return Err(Error::DimensionMismatch {
            expected: builder.dimension(),
            got: bb.dimension(),
        });
    }
    let start = Instant::now();
    builder.initialize();
    let probes = Cell::new(0u64);
    let mut applies = 0u64;
    loop {
        let more = builder
            .not_terminated(&mut |p| {
                probes.set(probes.get() + 1);
                bb.apply(p)
            })
            .map_err(|e| e.at_iteration(applies))?;
        if !more {
            break;
        }
        let mut primes = Vec::with_capacity(block);
        for _ in 0..block {
            primes.push(builder.next_coprime()?);
        }
        let residues = apply_block(bb, &primes, workers)?;
        applies += primes.len() as u64;
        builder.update_batch(&residues, &primes)?;
    }
    let values = builder.reconstruct()?;
    let stats = RunStats {
        applies,
        probes: probes.get(),
        primes_used: builder.update_count(),
        reconstruct_combines: builder.combine_count(),
        wall_time: start.elapsed(),
    };
    Ok((values, stats))
}

/// One parallel round over `workers` threads, results in prime order.
fn apply_block<X: BlackBox + Sync + ?Sized>(
    bb: &X,
    primes: &[u64],
    workers: usize,
) -> Result<Vec<Vec<u64>>> {
    if workers == 1 || primes.len() == 1 {
        return primes.iter().map(|&p| bb.apply(p)).collect();
    }
    let chunk = primes.len().div_ceil(workers);
    let mut out: Vec<Result<Vec<Vec<u64>>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = primes
            .chunks(chunk)
            .map(|ps| scope.spawn(move || ps.iter().map(|&p| bb.apply(p)).collect::<Result<Vec<_>>>()))
            .collect();
        for h in handles {
            out.push(h.join().unwrap_or_else(|_| {
                Err(Error::WorkerFailure {
                    worker: 0,
                    message: "block worker panicked".into(),
                })
            }));
        }
    });
    let mut residues = Vec::with_capacity(primes.len());
    for chunk in out {
        residues.extend(chunk?);
    }
    Ok(residues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::FixedOracle;
    use crate::builder::{DeterministicBuilder, EarlySingleBuilder};
    use crate::primes::{GeneratorMode, ModulusGenerator};

    fn random29(seed: u64) -> ModulusGenerator {
        ModulusGenerator::new(29, seed, GeneratorMode::Random).unwrap()
    }

    #[test]
    fn thief_entrypoint_runs_budget_to_completion() {
        let oracle = FixedOracle::from_i64(&[42]);
        let mut budget = ModulusBudget::new(vec![1009, 1013, 1019]);
        let token = PreemptionToken::new();
        let res = thief_entrypoint(&mut budget, &oracle, &token).unwrap();
        assert!(res.completed);
        assert_eq!(res.moduli, vec![1009, 1013, 1019]);
        assert_eq!(res.residues, vec![vec![42]; 3]); // 42 is below every modulus
    }

    #[test]
    fn thief_entrypoint_honors_preemption() {
        let oracle = FixedOracle::from_i64(&[7]);
        let mut budget = ModulusBudget::new(vec![1009, 1013]);
        let token = PreemptionToken::new();
        token.raise();
        let res = thief_entrypoint(&mut budget, &oracle, &token).unwrap();
        assert!(!res.completed);
        assert!(res.moduli.is_empty());
        assert_eq!(budget.remaining(), 2);
    }

    #[test]
    fn splitter_sizes() {
        // Early strategy: ceil(sync_every / (n + 1)) each.
        let mut b = EarlySingleBuilder::new(2, random29(1));
        let budgets = splitter(&mut b, 3, 8).unwrap();
        assert_eq!(budgets.len(), 3);
        assert!(budgets.iter().all(|bu| bu.remaining() == 2));

        // Bound-driven: ceil(remaining / 2) to the thief, the rest stays.
        let gen = ModulusGenerator::new(29, 1, GeneratorMode::Descending).unwrap();
        let mut d = DeterministicBuilder::new(1, 130, gen);
        assert_eq!(d.remaining_hint(), Some(5)); // ceil(132 / 28)
        let budgets = splitter(&mut d, 1, 8).unwrap();
        assert_eq!(budgets[0].remaining(), 3);

        let mut b = EarlySingleBuilder::new(2, random29(1));
        assert!(splitter(&mut b, 0, 8).unwrap().is_empty());
    }

    #[test]
    fn adaptive_single_worker_matches_sequential() {
        let oracle = FixedOracle::from_i64(&[123_456_789]);
        let mut b = EarlySingleBuilder::new(2, random29(9));
        let (seq, seq_stats) = controller::run(&mut b, &oracle).unwrap();
        let (par, par_stats) = run_adaptive(&mut b, &oracle, 1, 8, None).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq_stats.applies, par_stats.applies);
    }

    #[test]
    fn adaptive_matches_sequential_result() {
        let oracle = FixedOracle::from_i64(&[-987_654_321_987]);
        for workers in [2usize, 4] {
            let mut b = EarlySingleBuilder::new(2, random29(5));
            let (seq, _) = controller::run(&mut b, &oracle).unwrap();
            let (par, stats) = run_adaptive(&mut b, &oracle, workers, 4 * workers as u64, None).unwrap();
            assert_eq!(seq, par, "workers = {workers}");
            assert!(stats.primes_used >= 3);
        }
    }

    #[test]
    fn adaptive_rejects_non_reentrant() {
        let oracle = FixedOracle::from_i64(&[5]).non_reentrant();
        let mut b = EarlySingleBuilder::new(2, random29(5));
        assert!(matches!(
            run_adaptive(&mut b, &oracle, 2, 8, None),
            Err(Error::NotReentrant)
        ));
        assert!(matches!(
            run_block_naive(&mut b, &oracle, 2, 2),
            Err(Error::NotReentrant)
        ));
    }

    #[test]
    fn naive_blocks_quantize_applies() {
        let oracle = FixedOracle::from_i64(&[42]);
        let mut b = EarlySingleBuilder::new(2, random29(3));
        let (seq, seq_stats) = controller::run(&mut b, &oracle).unwrap();
        let block = 4usize;
        let (par, par_stats) = run_block_naive(&mut b, &oracle, 2, block).unwrap();
        assert_eq!(seq, par);
        // Rounds of `block`: overshoot is strictly below one block.
        assert_eq!(par_stats.applies % block as u64, 0);
        assert!(par_stats.applies < seq_stats.applies + block as u64);
    }

    #[test]
    fn adaptive_trace_records_scheduling_events() {
        let oracle = FixedOracle::from_i64(&[1_000_000_007]).with_delay(std::time::Duration::from_millis(1));
        let log = TraceLog::new();
        let mut b = EarlySingleBuilder::new(3, random29(17));
        let (_, _) = run_adaptive(&mut b, &oracle, 4, 16, Some(&log)).unwrap();
        let events = log.events();
        assert!(events.iter().any(|e| e.event == "steal"));
        assert!(events.iter().any(|e| e.event == "sync"));
        let line = events[0].to_string();
        assert!(line.contains("event=") && line.contains("worker="));
    }

    #[test]
    fn deterministic_adaptive_equals_sequential_value() {
        let oracle = FixedOracle::from_i64(&[i64::MIN + 1]);
        let gen = ModulusGenerator::new(29, 21, GeneratorMode::Descending).unwrap();
        let mut b = DeterministicBuilder::new(1, 63, gen);
        let (seq, seq_stats) = controller::run(&mut b, &oracle).unwrap();
        let (par, par_stats) = run_adaptive(&mut b, &oracle, 4, 16, None).unwrap();
        assert_eq!(seq, par);
        // Over-issue is bounded by the final in-flight batch (workers * budget).
        assert!(par_stats.primes_used >= seq_stats.primes_used);
        assert!(par_stats.primes_used <= seq_stats.primes_used + 8);
    }
}
