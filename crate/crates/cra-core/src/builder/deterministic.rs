use num_bigint::{BigInt, BigUint};

use crate::builder::{Builder, Probe};
use crate::error::Result;
use crate::ladder::RadixLadder;
use crate::primes::ModulusGenerator;

/// Deterministic strategy: stack residues in the ladder until the modulus
/// product provably exceeds twice the result bound, then stop.
///
/// The extra bit over `bound_bits` covers the sign: the symmetric lift is
/// exact once `2|R| < product`, and an odd product of bit length
/// `bound_bits + 2` is strictly above `2^(bound_bits+1) >= 2|R|`.
#[derive(Debug)]
pub struct DeterministicBuilder {
    ladder: RadixLadder,
    bound_bits: u64,
    generator: ModulusGenerator,
}

impl DeterministicBuilder {
    pub fn new(dimension: usize, bound_bits: u64, generator: ModulusGenerator) -> Self {
        DeterministicBuilder {
            ladder: RadixLadder::new(dimension),
            bound_bits,
            generator,
        }
    }

    pub fn bound_bits(&self) -> u64 {
        self.bound_bits
    }

    pub fn ladder(&self) -> &RadixLadder {
        &self.ladder
    }
}

impl Builder for DeterministicBuilder {
    fn initialize(&mut self) {
        self.ladder.clear();
        self.generator.reset();
    }

    fn dimension(&self) -> usize {
        self.ladder.dimension()
    }

    fn not_terminated(&mut self, _probe: Probe<'_>) -> Result<bool> {
        Ok(self.ladder.product_bits() <= self.bound_bits + 1)
    }

    fn next_coprime(&mut self) -> Result<u64> {
        self.generator.next_modulus()
    }

    fn update(&mut self, values: &[u64], p: u64) -> Result<()> {
        let values = values.iter().map(|&v| BigUint::from(v)).collect();
        self.ladder.insert(values, BigUint::from(p))
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

    fn remaining_hint(&self) -> Option<u64> {
        let have = self.ladder.product_bits();
        let need = self.bound_bits + 2;
        if have >= need {
            return Some(0);
        }
        // Every issued prime contributes at least bit_size - 1 bits.
        let per_prime = (self.generator.bit_size() - 1) as u64;
        Some((need - have).div_ceil(per_prime))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::primes::GeneratorMode;

    fn gen29() -> ModulusGenerator {
        ModulusGenerator::new(29, 1, GeneratorMode::Random).unwrap()
    }

    fn noop_probe(_: u64) -> Result<Vec<u64>> {
        panic!("deterministic strategy never probes");
    }

    #[test]
    fn update_stacks_into_ladder() {
        let mut b = DeterministicBuilder::new(1, 10, gen29());
        b.update(&[5], 7).unwrap();
        assert_eq!(b.ladder().product_bits(), 3);
        b.update(&[5], 11).unwrap();
        assert_eq!(b.ladder().product_bits(), 7); // bitlen(77)
        assert!(matches!(b.update(&[1], 7), Err(Error::NonCoprime { .. })));
    }

    #[test]
    fn termination_boundary() {
        // bound_bits = 10: continue while product_bits <= 11, stop at 12.
        let mut b = DeterministicBuilder::new(1, 10, gen29());
        b.update(&[1], 251).unwrap(); // 8 bits
        assert!(b.not_terminated(&mut noop_probe).unwrap());
        let mut b = DeterministicBuilder::new(1, 10, gen29());
        b.update(&[1], 2039).unwrap(); // 11 bits
        assert!(b.not_terminated(&mut noop_probe).unwrap());
        let mut b = DeterministicBuilder::new(1, 10, gen29());
        b.update(&[1], 4093).unwrap(); // 12 bits
        assert!(!b.not_terminated(&mut noop_probe).unwrap());
        // Signed-range oracle: at the stopping point the product strictly
        // exceeds 2 * 2^bound.
        assert!(BigUint::from(4093u32) > BigUint::from(2u32) * BigUint::from(1u32 << 10));
    }

    #[test]
    fn reconstruct_signed_vector() {
        let mut b = DeterministicBuilder::new(2, 6, gen29());
        for p in [101u64, 103] {
            b.update(&[42 % p, p - 1], p).unwrap();
        }
        assert_eq!(b.reconstruct().unwrap(), vec![BigInt::from(42), BigInt::from(-1)]);
    }

    #[test]
    fn remaining_hint_shrinks_to_zero() {
        let mut gen = ModulusGenerator::new(8, 3, GeneratorMode::Descending).unwrap();
        let mut b = DeterministicBuilder::new(1, 20, gen.clone());
        let first = b.remaining_hint().unwrap();
        assert!(first >= 3); // 22 bits needed, 7 bits guaranteed per prime
        for _ in 0..4 {
            let p = gen.next_modulus().unwrap();
            b.update(&[1 % p], p).unwrap();
        }
        assert!(b.remaining_hint().unwrap() < first);
    }
}
