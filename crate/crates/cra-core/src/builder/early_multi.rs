use num_bigint::{BigInt, BigUint};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::builder::{Builder, EarlyState, Probe};
use crate::error::{Error, Result};
use crate::ladder::RadixLadder;
use crate::primes::ModulusGenerator;

/// Early termination for a vector of residues.
///
/// The full vector goes into a shared-moduli ladder while a single random
/// linear combination `sum(lambda_j * v_j) mod p` feeds a scalar early state;
/// the scalar's stabilization decides termination for the whole vector.
/// Coefficients are 16-bit, fixed at construction from the generator seed.
#[derive(Debug)]
pub struct EarlyMultiBuilder {
    ladder: RadixLadder,
    scalar: EarlyState,
    lambdas: Vec<u64>,
    generator: ModulusGenerator,
}

impl EarlyMultiBuilder {
    pub fn new(dimension: usize, threshold: u32, generator: ModulusGenerator) -> Self {
        let lambdas = draw_lambdas(dimension, generator.seed());
        Self::with_lambdas(dimension, threshold, generator, lambdas)
    }

    /// Fix the combination coefficients explicitly (tests, reproducing runs).
    pub fn with_lambdas(
        dimension: usize,
        threshold: u32,
        generator: ModulusGenerator,
        lambdas: Vec<u64>,
    ) -> Self {
        assert_eq!(lambdas.len(), dimension);
        assert!(
            lambdas.iter().any(|&l| l != 0),
            "all-zero combination cannot witness stabilization"
        );
        EarlyMultiBuilder {
            ladder: RadixLadder::new(dimension),
            scalar: EarlyState::new(threshold),
            lambdas,
            generator,
        }
    }

    pub fn lambdas(&self) -> &[u64] {
        &self.lambdas
    }

    /// The internal scalar early-termination state (the combination trace).
    pub fn scalar_state(&self) -> &EarlyState {
        &self.scalar
    }

    pub fn ladder(&self) -> &RadixLadder {
        &self.ladder
    }

    fn combine_residues(&self, values: &[u64], p: u64) -> u64 {
        let mut acc: u128 = 0;
        for (&l, &v) in self.lambdas.iter().zip(values) {
            acc += (l as u128 * v as u128) % p as u128;
        }
        (acc % p as u128) as u64
    }
}

fn draw_lambdas(dimension: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    loop {
        let lambdas: Vec<u64> = (0..dimension).map(|_| rng.random_range(0..1u64 << 16)).collect();
        if lambdas.iter().any(|&l| l != 0) {
            return lambdas;
        }
    }
}

impl Builder for EarlyMultiBuilder {
    fn initialize(&mut self) {
        self.ladder.clear();
        self.scalar.reset();
        self.generator.reset();
    }

    fn dimension(&self) -> usize {
        self.ladder.dimension()
    }

    fn not_terminated(&mut self, _probe: Probe<'_>) -> Result<bool> {
        Ok(self.scalar.not_terminated())
    }

    fn next_coprime(&mut self) -> Result<u64> {
        self.generator.next_modulus()
    }

    fn update(&mut self, values: &[u64], p: u64) -> Result<()> {
        if values.len() != self.ladder.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.ladder.dimension(),
                got: values.len(),
            });
        }
        let combined = self.combine_residues(values, p);
        let vector = values.iter().map(|&v| BigUint::from(v)).collect();
        self.ladder.insert(vector, BigUint::from(p))?;
        self.scalar.update(combined, p)
    }

    fn reconstruct(&mut self) -> Result<Vec<BigInt>> {
        Ok(self.ladder.collapse()?.signed_values())
    }

    fn update_count(&self) -> u64 {
        self.ladder.residue_count()
    }

    fn combine_count(&self) -> u64 {
        self.ladder.combine_count() + self.scalar.combine_count()
    }
}
