use num_bigint::{BigInt, BigUint};

use crate::builder::balanced::confirm;
use crate::builder::{Builder, Probe};
use crate::error::{Error, Result};
use crate::ladder::RadixLadder;
use crate::primes::ModulusGenerator;

/// Sub-geometric schedule of termination-test points.
///
/// Tests run at counts 2, 3, 4, ..., spaced by
/// `max(1, floor(s / (1 + floor(log2 s))))`, so the gap is o(s) while only
/// O(log s) tests fall between consecutive powers of two. `rho` names the
/// geometric family the schedule stands in for; the spacing rule above is
/// what is executed.
#[derive(Debug, Clone)]
pub struct AmortizedSchedule {
    rho: f64,
    next_test_at: u64,
    tests_done: u64,
    last_seen: u64,
}

impl AmortizedSchedule {
    pub fn new() -> AmortizedSchedule {
        AmortizedSchedule::with_rho(1.5)
    }

    pub fn with_rho(rho: f64) -> AmortizedSchedule {
        assert!(rho > 1.0, "amortization factor must exceed 1");
        AmortizedSchedule {
            rho,
            next_test_at: 2,
            tests_done: 0,
            last_seen: 0,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn next_test_at(&self) -> u64 {
        self.next_test_at
    }

    pub fn tests_done(&self) -> u64 {
        self.tests_done
    }

    pub fn reset(&mut self) {
        self.next_test_at = 2;
        self.tests_done = 0;
        self.last_seen = 0;
    }

    /// Gap from test point `s` to the next one.
    pub fn spacing(s: u64) -> u64 {
        debug_assert!(s >= 1);
        let log = 63 - s.leading_zeros() as u64;
        (s / (1 + log)).max(1)
    }

    /// Present iteration counts in increasing order; returns whether
    /// `iteration` is a test point, advancing the schedule when it is.
    pub fn next_test(&mut self, iteration: u64) -> Result<bool> {
        if iteration < self.last_seen {
            return Err(Error::OutOfOrderIteration {
                expected: self.last_seen,
                got: iteration,
            });
        }
        self.last_seen = iteration;
        if iteration != self.next_test_at {
            return Ok(false);
        }
        self.tests_done += 1;
        self.next_test_at += Self::spacing(self.next_test_at);
        Ok(true)
    }
}

impl Default for AmortizedSchedule {
    fn default() -> Self {
        AmortizedSchedule::new()
    }
}

/// Amortized termination: like the balanced strategy but the confirmation
/// test runs on the schedule above instead of at powers of two, trading a few
/// extra tests for a much smaller apply overshoot past the true answer.
#[derive(Debug)]
pub struct AmortizedBuilder {
    ladder: RadixLadder,
    schedule: AmortizedSchedule,
    threshold: u32,
    main: ModulusGenerator,
    probe_gen: ModulusGenerator,
    probes_drawn: u64,
    test_pending: bool,
    terminated: bool,
}

impl AmortizedBuilder {
    pub fn new(
        dimension: usize,
        threshold: u32,
        main: ModulusGenerator,
        probe_gen: ModulusGenerator,
    ) -> Self {
        assert!(threshold >= 1, "early termination threshold must be >= 1");
        AmortizedBuilder {
            ladder: RadixLadder::new(dimension),
            schedule: AmortizedSchedule::new(),
            threshold,
            main,
            probe_gen,
            probes_drawn: 0,
            test_pending: false,
            terminated: false,
        }
    }

    pub fn schedule(&self) -> &AmortizedSchedule {
        &self.schedule
    }

    pub fn probes_drawn(&self) -> u64 {
        self.probes_drawn
    }

    pub fn ladder(&self) -> &RadixLadder {
        &self.ladder
    }

    fn insert(&mut self, values: &[u64], p: u64) -> Result<()> {
        if values.len() != self.ladder.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.ladder.dimension(),
                got: values.len(),
            });
        }
        let vector = values.iter().map(|&v| BigUint::from(v)).collect();
        self.ladder.insert(vector, BigUint::from(p))?;
        if self.schedule.next_test(self.ladder.residue_count())? {
            self.test_pending = true;
        }
        Ok(())
    }
}

impl Builder for AmortizedBuilder {
    fn initialize(&mut self) {
        self.ladder.clear();
        self.schedule.reset();
        self.main.reset();
        self.probe_gen.reset();
        self.probes_drawn = 0;
        self.test_pending = false;
        self.terminated = false;
    }

    fn dimension(&self) -> usize {
        self.ladder.dimension()
    }

    fn not_terminated(&mut self, probe: Probe<'_>) -> Result<bool> {
        if self.terminated {
            return Ok(false);
        }
        // Recycled probes advance the count and may hit the next scheduled
        // point; keep testing until no test is due or we terminate.
        while self.test_pending {
            self.test_pending = false;
            // The ladder may be unbalanced at a schedule point; collapsing
            // leaves it as the single combined shelf, a legal ladder state.
            let lifts = self.ladder.collapse()?.signed_values();
            let (drawn, confirmed) = confirm(
                &lifts,
                self.threshold,
                &mut self.probe_gen,
                &mut self.main,
                probe,
            )?;
            self.probes_drawn += drawn.len() as u64;
            for (values, p) in drawn {
                self.insert(&values, p)?;
            }
            if confirmed {
                self.terminated = true;
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn next_coprime(&mut self) -> Result<u64> {
        let p = self.main.next_modulus()?;
        self.probe_gen.exclude(p);
        Ok(p)
    }

    fn update(&mut self, values: &[u64], p: u64) -> Result<()> {
        self.insert(values, p)
    }

    fn reconstruct(&mut self) -> Result<Vec<BigInt>> {
        Ok(self.ladder.collapse()?.signed_values())
    }

    fn update_count(&self) -> u64 {
        self.ladder.residue_count()
    }

    fn combine_count(&self) -> u64 {
        self.ladder.combine_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::GeneratorMode;

    #[test]
    fn schedule_first_steps() {
        let mut s = AmortizedSchedule::new();
        assert_eq!(s.next_test_at(), 2);
        assert!(!s.next_test(1).unwrap());
        assert!(s.next_test(2).unwrap());
        // spacing(2) = max(1, floor(2/2)) = 1
        assert_eq!(s.next_test_at(), 3);
        assert_eq!(AmortizedSchedule::spacing(8), 2); // floor(8/4)
        assert_eq!(AmortizedSchedule::spacing(3), 1);
    }

    #[test]
    fn schedule_rejects_out_of_order() {
        let mut s = AmortizedSchedule::new();
        assert!(!s.next_test(5).unwrap());
        assert!(matches!(
            s.next_test(4),
            Err(Error::OutOfOrderIteration { .. })
        ));
    }

    #[test]
    fn test_point_density_between_powers_of_two() {
        // Enumerate the schedule to 8192 and count points per dyadic block.
        let mut points = Vec::new();
        let mut s = AmortizedSchedule::new();
        for i in 1..=8192u64 {
            if s.next_test(i).unwrap() {
                points.push(i);
            }
        }
        for k in 1..=12u32 {
            let lo = 1u64 << k;
            let hi = 1u64 << (k + 1);
            let count = points.iter().filter(|&&p| p >= lo && p < hi).count() as u64;
            assert!(
                count >= (k as u64) / 2 && count <= 2 * (k as u64 + 1),
                "block [2^{k}, 2^{}) holds {count} test points",
                k + 1
            );
        }
    }

    #[test]
    fn terminates_at_first_schedule_point_past_t() {
        let main = ModulusGenerator::new(10, 1, GeneratorMode::Descending).unwrap();
        let probes = ModulusGenerator::new(10, 2, GeneratorMode::Random).unwrap();
        let mut b = AmortizedBuilder::new(1, 2, main, probes);
        let r = 1_000_003i64;
        let mut applies = 0u64;
        loop {
            let more = b
                .not_terminated(&mut |p| Ok(vec![r.rem_euclid(p as i64) as u64]))
                .unwrap();
            if !more {
                break;
            }
            let p = b.next_coprime().unwrap();
            b.update(&[r.rem_euclid(p as i64) as u64], p).unwrap();
            applies += 1;
            assert!(applies < 100, "runaway loop");
        }
        assert_eq!(b.reconstruct().unwrap(), vec![BigInt::from(r)]);
    }
}
