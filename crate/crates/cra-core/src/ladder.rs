//! The radix ladder: a linear array of shelves holding partially combined
//! residues, behaving as a binary counter under insertion.
//!
//! Each occupied shelf carries the combination of `base_count` original
//! moduli and sits at level `floor(log2(base_count))`. Inserting a residue
//! climbs the ladder, absorbing equal-level occupants pairwise, so combines
//! stay balanced and total storage stays linear. Vector-valued shelves share
//! one modulus across all coordinates and the modular inverse of each combine
//! is computed once, not once per coordinate.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::One;

use crate::error::{Error, Result};
use crate::residue::{mod_inverse, symmetric_lift};

/// One ladder slot: `base_count` original moduli combined into `modulus`,
/// with one value per vector coordinate, each in `[0, modulus)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shelf {
    pub modulus: BigUint,
    pub values: Vec<BigUint>,
    pub base_count: u64,
}

impl Shelf {
    fn level(&self) -> usize {
        (63 - self.base_count.leading_zeros()) as usize
    }
}

/// A fully collapsed ladder: one common modulus for all coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorResidue {
    pub values: Vec<BigUint>,
    pub modulus: BigUint,
}

impl VectorResidue {
    /// Symmetric lifts of every coordinate.
    pub fn signed_values(&self) -> Vec<BigInt> {
        self.values
            .iter()
            .map(|v| symmetric_lift(v, &self.modulus))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RadixLadder {
    shelves: Vec<Option<Shelf>>,
    dimension: usize,
    residue_count: u64,
    combines: u64,
    inverses: u64,
}

impl RadixLadder {
    pub fn new(dimension: usize) -> RadixLadder {
        assert!(dimension >= 1, "ladder dimension must be positive");
        RadixLadder {
            shelves: Vec::new(),
            dimension,
            residue_count: 0,
            combines: 0,
            inverses: 0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of original moduli inserted so far (sum of shelf base counts).
    pub fn residue_count(&self) -> u64 {
        self.residue_count
    }

    pub fn is_empty(&self) -> bool {
        self.residue_count == 0
    }

    /// Number of occupied shelves.
    pub fn occupied_count(&self) -> usize {
        self.shelves.iter().filter(|s| s.is_some()).count()
    }

    pub fn shelf(&self, level: usize) -> Option<&Shelf> {
        self.shelves.get(level).and_then(|s| s.as_ref())
    }

    /// The single occupied shelf, when the residue count is a power of two.
    pub fn single_shelf(&self) -> Option<&Shelf> {
        let mut found = None;
        for s in self.shelves.iter().flatten() {
            if found.is_some() {
                return None;
            }
            found = Some(s);
        }
        found
    }

    /// Pairwise combines performed so far (insert climbs and collapses).
    pub fn combine_count(&self) -> u64 {
        self.combines
    }

    /// Modular inverses computed so far; exactly one per combine, whatever
    /// the vector dimension.
    pub fn inverse_count(&self) -> u64 {
        self.inverses
    }

    /// Exact bit length of the product of all occupied shelf moduli (0 when empty).
    pub fn product_bits(&self) -> u64 {
        let mut prod = BigUint::one();
        let mut any = false;
        for s in self.shelves.iter().flatten() {
            prod *= &s.modulus;
            any = true;
        }
        if any {
            prod.bits()
        } else {
            0
        }
    }

    pub fn clear(&mut self) {
        self.shelves.clear();
        self.residue_count = 0;
        self.combines = 0;
        self.inverses = 0;
    }

    /// Insert one residue vector under a fresh modulus.
    ///
    /// `m` must be coprime to every modulus already held and every value must
    /// be reduced into `[0, m)`.
    pub fn insert(&mut self, values: Vec<BigUint>, m: BigUint) -> Result<()> {
        if m < BigUint::from(2u32) {
            return Err(Error::ModulusTooSmall(m));
        }
        for v in &values {
            if *v >= m {
                return Err(Error::ResidueOutOfRange {
                    value: v.clone(),
                    modulus: m,
                });
            }
        }
        self.insert_shelf(Shelf {
            modulus: m,
            values,
            base_count: 1,
        })
    }

    /// Insert a pre-combined pair of any size; entry point shared with merge.
    pub fn insert_shelf(&mut self, shelf: Shelf) -> Result<()> {
        if shelf.values.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: shelf.values.len(),
            });
        }
        for occ in self.shelves.iter().flatten() {
            let g = shelf.modulus.gcd(&occ.modulus);
            if !g.is_one() {
                return Err(Error::NonCoprime {
                    a: shelf.modulus,
                    b: occ.modulus.clone(),
                });
            }
        }
        self.residue_count += shelf.base_count;
        self.climb(shelf)
    }

    /// Carry propagation: combine with each occupied shelf on the way up and
    /// settle in the first empty one. Combining two entries of level `i`
    /// always lands at level `i + 1` because base counts add.
    fn climb(&mut self, mut entry: Shelf) -> Result<()> {
        let mut level = entry.level();
        loop {
            if self.shelves.len() <= level {
                self.shelves.resize_with(level + 1, || None);
            }
            match self.shelves[level].take() {
                Some(occupant) => {
                    entry = self.combine(occupant, entry)?;
                    level += 1;
                }
                None => {
                    self.shelves[level] = Some(entry);
                    return Ok(());
                }
            }
        }
    }

    /// Coordinate-wise lift of `incoming` onto `occupant`. The inverse
    /// `M^-1 mod N` is computed once and reused for all coordinates.
    fn combine(&mut self, occupant: Shelf, incoming: Shelf) -> Result<Shelf> {
        let m = &occupant.modulus;
        let n = &incoming.modulus;
        let inv = mod_inverse(m, n)?;
        self.inverses += 1;
        self.combines += 1;
        let mn = m * n;
        let values = occupant
            .values
            .iter()
            .zip(&incoming.values)
            .map(|(u, v)| {
                let u_mod_n = u % n;
                let diff = if *v >= u_mod_n {
                    v - &u_mod_n
                } else {
                    n + v - &u_mod_n
                };
                let t = diff * &inv % n;
                let mut r = u + t * m;
                if r >= mn {
                    r -= &mn;
                }
                r
            })
            .collect();
        Ok(Shelf {
            modulus: mn,
            values,
            base_count: occupant.base_count + incoming.base_count,
        })
    }

    /// Drain `other` into `self`, bottom shelf first. `other` is left empty.
    pub fn merge(&mut self, other: &mut RadixLadder) -> Result<()> {
        if other.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        for level in 0..other.shelves.len() {
            if let Some(shelf) = other.shelves[level].take() {
                other.residue_count -= shelf.base_count;
                self.insert_shelf(shelf)?;
            }
        }
        Ok(())
    }

    /// Combine everything bottom-up into the full reconstruction modulo the
    /// product of all inserted moduli. The ladder keeps the single top entry.
    pub fn collapse(&mut self) -> Result<VectorResidue> {
        let mut acc: Option<Shelf> = None;
        for level in 0..self.shelves.len() {
            if let Some(shelf) = self.shelves[level].take() {
                acc = Some(match acc {
                    None => shelf,
                    Some(lower) => self.combine(lower, shelf)?,
                });
            }
        }
        let top = acc.ok_or(Error::EmptyLadder)?;
        let out = VectorResidue {
            values: top.values.clone(),
            modulus: top.modulus.clone(),
        };
        let level = top.level();
        if self.shelves.len() <= level {
            self.shelves.resize_with(level + 1, || None);
        }
        self.shelves[level] = Some(top);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    const PRIMES: [u64; 12] = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

    fn insert_scalar(l: &mut RadixLadder, v: u64, m: u64) {
        l.insert(vec![BigUint::from(v)], BigUint::from(m)).unwrap();
    }

    /// Naive left-fold oracle over the same residues.
    fn fold_oracle(pairs: &[(u64, u64)]) -> (BigUint, BigUint) {
        use crate::residue::{reconstruct_pair, Residue};
        let mut acc = Residue::new(pairs[0].0, pairs[0].1).unwrap();
        for &(v, m) in &pairs[1..] {
            acc = reconstruct_pair(&acc, &Residue::new(v, m).unwrap()).unwrap();
        }
        (acc.value().clone(), acc.modulus().clone())
    }

    #[test]
    fn binary_counter_occupancy() {
        let mut l = RadixLadder::new(1);
        for &m in PRIMES.iter().take(4) {
            insert_scalar(&mut l, 1, m);
        }
        assert!(l.shelf(0).is_none());
        assert!(l.shelf(1).is_none());
        assert_eq!(l.shelf(2).unwrap().base_count, 4);

        let mut l = RadixLadder::new(1);
        for &m in PRIMES.iter().take(3) {
            insert_scalar(&mut l, 1, m);
        }
        assert_eq!(l.shelf(0).unwrap().base_count, 1);
        assert_eq!(l.shelf(1).unwrap().base_count, 2);
        assert_eq!(l.occupied_count(), 2);
    }

    #[test]
    fn collapse_recovers_value() {
        // Residues of R = 8 modulo 3, 5, 7.
        let mut l = RadixLadder::new(1);
        for m in [3u64, 5, 7] {
            insert_scalar(&mut l, 8 % m, m);
        }
        let out = l.collapse().unwrap();
        assert_eq!(out.modulus, BigUint::from(105u32));
        assert_eq!(out.values[0], BigUint::from(8u32));
        // Uniqueness by scan.
        let hits: Vec<u64> = (0..105).filter(|x| x % 3 == 2 && x % 5 == 3 && x % 7 == 1).collect();
        assert_eq!(hits, vec![8]);
    }

    #[test]
    fn collapse_single_shelf_is_identity() {
        let mut l = RadixLadder::new(1);
        insert_scalar(&mut l, 4, 9);
        let out = l.collapse().unwrap();
        assert_eq!(out.values[0], BigUint::from(4u32));
        assert_eq!(out.modulus, BigUint::from(9u32));
    }

    #[test]
    fn collapse_level_zero_and_one() {
        // (1 mod 7) at level 0, (8 mod 15) at level 1.
        let mut l = RadixLadder::new(1);
        insert_scalar(&mut l, 2, 3);
        insert_scalar(&mut l, 3, 5); // combines into 8 mod 15 at level 1
        insert_scalar(&mut l, 1, 7);
        assert_eq!(l.shelf(0).unwrap().modulus, BigUint::from(7u32));
        assert_eq!(l.shelf(1).unwrap().values[0], BigUint::from(8u32));
        let out = l.collapse().unwrap();
        // Scan oracle: the unique x in 0..105 with x = 1 (7) and x = 8 (15).
        let want: Vec<u64> = (0..105).filter(|x| x % 7 == 1 && x % 15 == 8).collect();
        assert_eq!(want.len(), 1);
        assert_eq!(out.values[0], BigUint::from(want[0]));
        assert_eq!(out.modulus, BigUint::from(105u32));
    }

    #[test]
    fn collapse_empty_errors() {
        let mut l = RadixLadder::new(1);
        assert!(matches!(l.collapse(), Err(Error::EmptyLadder)));
    }

    #[test]
    fn merge_examples() {
        // counts {1, 2} + {1} -> single shelf of 4.
        let mut a = RadixLadder::new(1);
        for m in [3u64, 5, 7] {
            insert_scalar(&mut a, 100 % m, m);
        }
        let mut b = RadixLadder::new(1);
        insert_scalar(&mut b, 100 % 11, 11);
        a.merge(&mut b).unwrap();
        assert!(b.is_empty());
        assert_eq!(a.occupied_count(), 1);
        assert_eq!(a.shelf(2).unwrap().base_count, 4);

        // merge with empty is identity.
        let mut empty = RadixLadder::new(1);
        let before = a.clone();
        a.merge(&mut empty).unwrap();
        assert_eq!(a.shelf(2), before.shelf(2));
    }

    #[test]
    fn merge_split_residues_recover_value() {
        // R = 100 split across two ladders: 3 primes in one, 2 in the other.
        let mut a = RadixLadder::new(1);
        for m in [3u64, 5, 7] {
            insert_scalar(&mut a, 100 % m, m);
        }
        let mut b = RadixLadder::new(1);
        for m in [11u64, 13] {
            insert_scalar(&mut b, 100 % m, m);
        }
        a.merge(&mut b).unwrap();
        let out = a.collapse().unwrap();
        assert_eq!(out.values[0], BigUint::from(100u32));
        assert_eq!(a.residue_count(), 5);
    }

    #[test]
    fn product_bits_examples() {
        let mut l = RadixLadder::new(1);
        assert_eq!(l.product_bits(), 0);
        insert_scalar(&mut l, 1, 15);
        assert_eq!(l.product_bits(), 4);
        insert_scalar(&mut l, 1, 7);
        assert_eq!(l.product_bits(), 7); // bitlen(105) = 7
    }

    #[test]
    fn rejects_non_coprime_and_bad_dimension() {
        let mut l = RadixLadder::new(1);
        insert_scalar(&mut l, 1, 15);
        assert!(matches!(
            l.insert(vec![BigUint::from(1u32)], BigUint::from(5u32)),
            Err(Error::NonCoprime { .. })
        ));
        assert!(matches!(
            l.insert(vec![BigUint::from(1u32); 2], BigUint::from(7u32)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            l.insert(vec![BigUint::from(9u32)], BigUint::from(7u32)),
            Err(Error::ResidueOutOfRange { .. })
        ));
    }

    #[test]
    fn one_inverse_per_combine_whatever_the_dimension() {
        for d in [1usize, 4, 9] {
            let mut l = RadixLadder::new(d);
            for m in [3u64, 5, 7, 11] {
                let values = (0..d).map(|j| BigUint::from((j as u64 + 2) % m)).collect();
                l.insert(values, BigUint::from(m)).unwrap();
            }
            assert_eq!(l.combine_count(), 3); // binary counter: 4 inserts, 3 carries
            assert_eq!(l.inverse_count(), l.combine_count());
        }
    }

    #[test]
    fn conservation_of_moduli() {
        let mut l = RadixLadder::new(1);
        let mut product = BigUint::one();
        for &m in &PRIMES {
            insert_scalar(&mut l, 1 % m, m);
            product *= m;
        }
        let mut shelf_product = BigUint::one();
        for level in 0.. {
            if level >= 64 {
                break;
            }
            if let Some(s) = l.shelf(level) {
                shelf_product *= &s.modulus;
            }
        }
        assert_eq!(shelf_product, product);
        assert_eq!(l.residue_count(), PRIMES.len() as u64);
    }

    #[test]
    fn signed_values_lift() {
        let mut l = RadixLadder::new(2);
        // R = (4, -3) over moduli 5, 7, 11.
        for m in [5u64, 7, 11] {
            let neg = (m - 3) % m;
            l.insert(vec![BigUint::from(4u64 % m), BigUint::from(neg)], BigUint::from(m))
                .unwrap();
        }
        let out = l.collapse().unwrap();
        assert_eq!(out.signed_values(), vec![BigInt::from(4), BigInt::from(-3)]);
    }

    proptest! {
        // Insert-order independence and equivalence with the left-fold oracle.
        #[test]
        fn collapse_matches_fold_oracle(perm in proptest::sample::subsequence(&PRIMES[..], 1..PRIMES.len()), r in 0u64..100_000, shuffle_seed in 0u64..1000) {
            let mut pairs: Vec<(u64, u64)> = perm.iter().map(|&m| (r % m, m)).collect();
            let (want_v, want_m) = fold_oracle(&pairs);
            // Deterministic shuffle.
            let mut s = shuffle_seed;
            for i in (1..pairs.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                pairs.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut l = RadixLadder::new(1);
            for &(v, m) in &pairs {
                insert_scalar(&mut l, v, m);
            }
            let out = l.collapse().unwrap();
            prop_assert_eq!(&out.values[0], &want_v);
            prop_assert_eq!(&out.modulus, &want_m);
        }

        // Merging two ladders equals one ladder fed the union.
        #[test]
        fn merge_equals_union(split in 1usize..PRIMES.len(), r in 0u64..1_000_000) {
            let mut a = RadixLadder::new(1);
            let mut b = RadixLadder::new(1);
            let mut union = RadixLadder::new(1);
            for (i, &m) in PRIMES.iter().enumerate() {
                let target = if i < split { &mut a } else { &mut b };
                insert_scalar(target, r % m, m);
                insert_scalar(&mut union, r % m, m);
            }
            a.merge(&mut b).unwrap();
            let merged = a.collapse().unwrap();
            let straight = union.collapse().unwrap();
            prop_assert_eq!(merged, straight);
        }
    }
}
