//! The sequential control loop: generator -> black box -> builder until the
//! builder's termination strategy says stop.

use std::cell::Cell;
use std::time::{Duration, Instant};

use num_bigint::BigInt;

use crate::blackbox::BlackBox;
use crate::builder::Builder;
use crate::error::{Error, Result};

/// Instrumentation collected by a run.
///
/// `applies` counts loop invocations of the black box; confirmation probes
/// are counted separately in `probes` (total black-box calls are the sum).
/// `primes_used` is the number of residues the builder folded in, probe
/// recycling included.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub applies: u64,
    pub probes: u64,
    pub primes_used: u64,
    pub reconstruct_combines: u64,
    pub wall_time: Duration,
}

/// Drive `builder` over `bb` to the exact reconstructed values.
pub fn run<B, X>(builder: &mut B, bb: &X) -> Result<(Vec<BigInt>, RunStats)>
where
    B: Builder + ?Sized,
    X: BlackBox + ?Sized,
{
    let start = Instant::now();
    builder.initialize();
    if bb.dimension() != builder.dimension() {
        return Err(Error::DimensionMismatch {
            expected: builder.dimension(),
            got: bb.dimension(),
        });
    }
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
        let p = builder.next_coprime().map_err(|e| e.at_iteration(applies))?;
        let values = bb.apply(p).map_err(|e| e.at_iteration(applies))?;
        applies += 1;
        builder
            .update(&values, p)
            .map_err(|e| e.at_iteration(applies))?;
    }
    let result = builder.reconstruct()?;
    let stats = RunStats {
        applies,
        probes: probes.get(),
        primes_used: builder.update_count(),
        reconstruct_combines: builder.combine_count(),
        wall_time: start.elapsed(),
    };
    Ok((result, stats))
}
