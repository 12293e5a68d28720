use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::builder::{Builder, Probe};
use crate::error::{Error, Result};
use crate::primes::ModulusGenerator;
use crate::residue::{reconstruct_pair, reduce_signed_u64, Residue};

/// Running scalar reconstruction with a stabilization counter.
///
/// Starts at the empty reconstruction (value 0 under the empty modulus
/// product), so a first residue of 0 already counts as agreement. Each update
/// compares the incoming residue against the symmetric lift of the current
/// state reduced mod p — the raw comparison would be wrong for negative
/// results. On agreement the modulus is extended by p without recombining; on
/// disagreement the counter resets and the pair is lifted.
#[derive(Debug, Clone)]
pub struct EarlyState {
    current: Option<Residue>,
    stabilization: u32,
    threshold: u32,
    combines: u64,
    updates: u64,
}

impl EarlyState {
    /// `threshold` is the early-termination threshold ET (>= 1).
    pub fn new(threshold: u32) -> EarlyState {
        assert!(threshold >= 1, "early termination threshold must be >= 1");
        EarlyState {
            current: None,
            stabilization: 0,
            threshold,
            combines: 0,
            updates: 0,
        }
    }

    pub fn reset(&mut self) {
        self.current = None;
        self.stabilization = 0;
        self.combines = 0;
        self.updates = 0;
    }

    pub fn stabilization(&self) -> u32 {
        self.stabilization
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn current(&self) -> Option<&Residue> {
        self.current.as_ref()
    }

    pub fn combine_count(&self) -> u64 {
        self.combines
    }

    pub fn update_count(&self) -> u64 {
        self.updates
    }

    pub fn not_terminated(&self) -> bool {
        self.stabilization < self.threshold
    }

    /// Fold in `v ≡ R (mod p)`.
    pub fn update(&mut self, v: u64, p: u64) -> Result<()> {
        self.updates += 1;
        match self.current.take() {
            None => {
                if v == 0 {
                    self.stabilization += 1;
                } else {
                    self.stabilization = 0;
                }
                self.current = Some(Residue::new(v, p)?);
            }
            Some(cur) => {
                if (cur.modulus() % p).is_zero() {
                    return Err(Error::NonCoprime {
                        a: cur.modulus().clone(),
                        b: BigUint::from(p),
                    });
                }
                let lift = cur.symmetric_lift();
                let u = reduce_signed_u64(&lift, p);
                if u == v {
                    self.stabilization += 1;
                    let extended = cur.modulus() * p;
                    self.current = Some(Residue::from_signed(&lift, extended)?);
                } else {
                    self.stabilization = 0;
                    let incoming = Residue::new(v, p)?;
                    self.current = Some(reconstruct_pair(&cur, &incoming)?);
                    self.combines += 1;
                }
            }
        }
        Ok(())
    }

    /// Symmetric lift of the current state. Errors before any update.
    pub fn reconstruct(&self) -> Result<BigInt> {
        self.current
            .as_ref()
            .map(|r| r.symmetric_lift())
            .ok_or(Error::NoUpdates)
    }
}

/// Earliest termination for a single residue: stop after ET consecutive
/// agreeing updates. Wants random moduli so stabilization is a probabilistic
/// witness of correctness.
#[derive(Debug)]
pub struct EarlySingleBuilder {
    state: EarlyState,
    generator: ModulusGenerator,
}

impl EarlySingleBuilder {
    pub fn new(threshold: u32, generator: ModulusGenerator) -> Self {
        EarlySingleBuilder {
            state: EarlyState::new(threshold),
            generator,
        }
    }

    pub fn state(&self) -> &EarlyState {
        &self.state
    }
}

impl Builder for EarlySingleBuilder {
    fn initialize(&mut self) {
        self.state.reset();
        self.generator.reset();
    }

    fn dimension(&self) -> usize {
        1
    }

    fn not_terminated(&mut self, _probe: Probe<'_>) -> Result<bool> {
        Ok(self.state.not_terminated())
    }

    fn next_coprime(&mut self) -> Result<u64> {
        self.generator.next_modulus()
    }

    fn update(&mut self, values: &[u64], p: u64) -> Result<()> {
        if values.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: values.len(),
            });
        }
        self.state.update(values[0], p)
    }

    fn reconstruct(&mut self) -> Result<Vec<BigInt>> {
        Ok(vec![self.state.reconstruct()?])
    }

    fn update_count(&self) -> u64 {
        self.state.update_count()
    }

    fn combine_count(&self) -> u64 {
        self.state.combine_count()
    }
}
