//! Strategy builders: each owns the termination state and the reconstruction
//! storage, behind one interface the controllers drive.

mod amortized;
mod balanced;
mod deterministic;
mod early;
mod early_multi;

pub use amortized::{AmortizedBuilder, AmortizedSchedule};
pub use balanced::BalancedBuilder;
pub use deterministic::DeterministicBuilder;
pub use early::{EarlySingleBuilder, EarlyState};
pub use early_multi::EarlyMultiBuilder;

use num_bigint::BigInt;

use crate::error::Result;

/// Callback a controller hands to termination checks that need fresh
/// black-box residues (the balanced and amortized confirmation rounds).
pub type Probe<'a> = &'a mut dyn FnMut(u64) -> Result<Vec<u64>>;

/// The builder interface the control loop drives: keep going while
/// `not_terminated`, feed residues through `update`, read the answer with
/// `reconstruct`.
pub trait Builder {
    /// Reset all reconstruction and termination state, including the
    /// generator, so a run is reproducible from the seed.
    fn initialize(&mut self);

    /// Vector dimension of the residues this builder expects.
    fn dimension(&self) -> usize;

    /// Whether the loop should continue. `probe` supplies black-box residues
    /// for fresh random primes; builders that do not confirm ignore it.
    fn not_terminated(&mut self, probe: Probe<'_>) -> Result<bool>;

    /// Fresh modulus for the next iteration.
    fn next_coprime(&mut self) -> Result<u64>;

    /// Fold one residue vector (entries in `[0, p)`) under modulus `p`.
    fn update(&mut self, values: &[u64], p: u64) -> Result<()>;

    /// Fold a batch of residues; observationally a sequence of `update`s.
    fn update_batch(&mut self, residues: &[Vec<u64>], moduli: &[u64]) -> Result<()> {
        debug_assert_eq!(residues.len(), moduli.len());
        for (v, &p) in residues.iter().zip(moduli) {
            self.update(v, p)?;
        }
        Ok(())
    }

    /// The reconstructed signed values. Errors before any update.
    fn reconstruct(&mut self) -> Result<Vec<BigInt>>;

    /// Carve a finite budget of fresh moduli out of this builder's generator
    /// for another worker. Disjointness from everything else the builder will
    /// issue is by construction.
    fn subgenerator(&mut self, count: usize) -> Result<ModulusBudget> {
        let mut primes = Vec::with_capacity(count);
        for _ in 0..count {
            primes.push(self.next_coprime()?);
        }
        Ok(ModulusBudget::new(primes))
    }

    /// Number of residues folded in so far.
    fn update_count(&self) -> u64;

    /// Pairwise reconstruction combines performed so far.
    fn combine_count(&self) -> u64;

    /// For bound-driven strategies, an estimate of how many more moduli are
    /// needed; drives work splitting. `None` for early-terminated strategies.
    fn remaining_hint(&self) -> Option<u64> {
        None
    }
}

/// A finite allotment of fresh moduli handed to a worker.
#[derive(Debug, Clone, Default)]
pub struct ModulusBudget {
    primes: std::collections::VecDeque<u64>,
}

impl ModulusBudget {
    pub fn new(primes: Vec<u64>) -> ModulusBudget {
        ModulusBudget {
            primes: primes.into(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Give away the later half of the remaining moduli (the recursive split
    /// used when a working thief serves a steal request).
    pub fn split_half(&mut self) -> ModulusBudget {
        let keep = self.primes.len() - self.primes.len() / 2;
        ModulusBudget {
            primes: self.primes.split_off(keep),
        }
    }
}

impl Iterator for ModulusBudget {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        self.primes.pop_front()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.primes.len(), Some(self.primes.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_split_gives_half_away() {
        let mut b = ModulusBudget::new(vec![3, 5, 7, 11, 13]);
        let stolen = b.split_half();
        assert_eq!(b.remaining(), 3);
        assert_eq!(stolen.remaining(), 2);

        let mut one = ModulusBudget::new(vec![3]);
        let none = one.split_half();
        assert_eq!(one.remaining(), 1);
        assert_eq!(none.remaining(), 0);
    }
}
