use num_bigint::{BigInt, BigUint};

use crate::builder::{Builder, Probe};
use crate::error::{Error, Result};
use crate::ladder::RadixLadder;
use crate::primes::ModulusGenerator;
use crate::residue::{reduce_signed_u64, symmetric_lift};

/// Balanced termination: residues go straight into the ladder and the
/// (probabilistic) termination test runs only when the residue count is a
/// power of two — exactly when a single shelf is occupied — so every combine
/// pairs operands of equal size.
///
/// Main-stream moduli come from a deterministic sequence; only the
/// confirmation probes need randomness. The two generators exclude each
/// other's issues so all moduli stay pairwise coprime. Probe residues are
/// real black-box output and are recycled into the ladder once the
/// confirmation round has concluded.
#[derive(Debug)]
pub struct BalancedBuilder {
    ladder: RadixLadder,
    threshold: u32,
    main: ModulusGenerator,
    probe_gen: ModulusGenerator,
    probes_drawn: u64,
    next_checkpoint: u64,
    terminated: bool,
}

impl BalancedBuilder {
    pub fn new(
        dimension: usize,
        threshold: u32,
        main: ModulusGenerator,
        probe_gen: ModulusGenerator,
    ) -> Self {
        assert!(threshold >= 1, "early termination threshold must be >= 1");
        BalancedBuilder {
            ladder: RadixLadder::new(dimension),
            threshold,
            main,
            probe_gen,
            probes_drawn: 0,
            next_checkpoint: 1,
            terminated: false,
        }
    }

    pub fn ladder(&self) -> &RadixLadder {
        &self.ladder
    }

    /// Confirmation probes drawn so far.
    pub fn probes_drawn(&self) -> u64 {
        self.probes_drawn
    }

    fn insert(&mut self, values: &[u64], p: u64) -> Result<()> {
        if values.len() != self.ladder.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.ladder.dimension(),
                got: values.len(),
            });
        }
        let vector = values.iter().map(|&v| BigUint::from(v)).collect();
        self.ladder.insert(vector, BigUint::from(p))
    }
}

/// Residue/modulus pairs drawn by a confirmation round.
pub(crate) type DrawnProbes = Vec<(Vec<u64>, u64)>;

/// Up to `threshold` rounds: draw a fresh random prime, compare the lifted
/// candidate against the probe residues. Returns the drawn (residues, prime)
/// pairs and whether every round agreed.
pub(crate) fn confirm(
    lifts: &[BigInt],
    threshold: u32,
    probe_gen: &mut ModulusGenerator,
    main: &mut ModulusGenerator,
    probe: Probe<'_>,
) -> Result<(DrawnProbes, bool)> {
    let mut drawn = Vec::new();
    for _ in 0..threshold {
        let p = probe_gen.next_modulus()?;
        main.exclude(p);
        let got = probe(p)?;
        let agrees = got.len() == lifts.len()
            && lifts
                .iter()
                .zip(&got)
                .all(|(lift, &g)| reduce_signed_u64(lift, p) == g);
        drawn.push((got, p));
        if !agrees {
            return Ok((drawn, false));
        }
    }
    Ok((drawn, true))
}

impl Builder for BalancedBuilder {
    fn initialize(&mut self) {
        self.ladder.clear();
        self.main.reset();
        self.probe_gen.reset();
        self.probes_drawn = 0;
        self.next_checkpoint = 1;
        self.terminated = false;
    }

    fn dimension(&self) -> usize {
        self.ladder.dimension()
    }

    fn not_terminated(&mut self, probe: Probe<'_>) -> Result<bool> {
        if self.terminated {
            return Ok(false);
        }
        // Recycled probes can land the count on the next power of two, so
        // keep testing until the count is below the checkpoint or we stop.
        loop {
            let count = self.ladder.residue_count();
            if count < self.next_checkpoint {
                return Ok(true);
            }
            // Sequential updates arrive one at a time and hit the checkpoint
            // exactly: a single shelf is occupied and no combine is needed.
            // Batched updates can jump past it; then the candidate is the
            // collapse of whatever the ladder holds.
            let lifts: Vec<BigInt> = match self.ladder.single_shelf() {
                Some(shelf) => shelf
                    .values
                    .iter()
                    .map(|v| symmetric_lift(v, &shelf.modulus))
                    .collect(),
                None => self.ladder.collapse()?.signed_values(),
            };
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
            self.next_checkpoint = (count + 1).next_power_of_two();
        }
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
