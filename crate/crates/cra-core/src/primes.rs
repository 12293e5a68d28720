//! Word-size prime moduli: exact primality and a reproducible generator.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

const SMALL_PRIMES: [u64; 18] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
];

/// Witnesses making Miller-Rabin deterministic for every n < 2^64.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Exact (deterministic) primality test for any `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let trailing = (n - 1).trailing_zeros();
    let odd = (n - 1) >> trailing;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, odd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..trailing {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// How fresh moduli are picked from the pool of `bit_size`-bit primes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorMode {
    /// Uniform over the not-yet-issued primes of the configured size (seeded).
    Random,
    /// Strictly decreasing from `2^bit_size - 1` downward.
    Descending,
}

/// Source of pairwise-distinct primes in `(2^(bit_size-1), 2^bit_size)`.
///
/// A generator never issues the same modulus twice, so everything it hands
/// out is pairwise coprime. Equal seed, mode and bit size reproduce the same
/// sequence.
#[derive(Debug, Clone)]
pub struct ModulusGenerator {
    bit_size: u32,
    seed: u64,
    mode: GeneratorMode,
    issued: HashSet<u64>,
    rng: ChaCha12Rng,
    cursor: u64,
}

/// Below this size, failed random sampling falls back to enumerating the
/// whole pool so exhaustion is detected exactly.
const ENUMERABLE_BITS: u32 = 24;
const SAMPLE_ATTEMPTS: u32 = 4096;

impl ModulusGenerator {
    pub fn new(bit_size: u32, seed: u64, mode: GeneratorMode) -> Result<ModulusGenerator> {
        if !(3..=62).contains(&bit_size) {
            return Err(Error::InvalidBitSize(bit_size));
        }
        Ok(ModulusGenerator {
            bit_size,
            seed,
            mode,
            issued: HashSet::new(),
            rng: ChaCha12Rng::seed_from_u64(seed),
            cursor: (1u64 << bit_size) - 1,
        })
    }

    pub fn bit_size(&self) -> u32 {
        self.bit_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> GeneratorMode {
        self.mode
    }

    pub fn issued_count(&self) -> usize {
        self.issued.len()
    }

    /// Forget all issued moduli and rewind to the seeded start state.
    pub fn reset(&mut self) {
        self.issued.clear();
        self.rng = ChaCha12Rng::seed_from_u64(self.seed);
        self.cursor = (1u64 << self.bit_size) - 1;
    }

    /// Mark a modulus as used so this generator will never issue it.
    ///
    /// Lets two generators over the same pool stay disjoint.
    pub fn exclude(&mut self, p: u64) {
        self.issued.insert(p);
    }

    /// Issue a fresh prime in `(2^(bit_size-1), 2^bit_size)`.
    pub fn next_modulus(&mut self) -> Result<u64> {
        match self.mode {
            GeneratorMode::Descending => self.next_descending(),
            GeneratorMode::Random => self.next_random(),
        }
    }

    fn next_descending(&mut self) -> Result<u64> {
        let floor = 1u64 << (self.bit_size - 1);
        while self.cursor > floor {
            let candidate = self.cursor;
            self.cursor -= 2;
            if is_prime(candidate) && !self.issued.contains(&candidate) {
                self.issued.insert(candidate);
                return Ok(candidate);
            }
        }
        Err(Error::PrimePoolExhausted {
            bit_size: self.bit_size,
        })
    }

    fn next_random(&mut self) -> Result<u64> {
        let first = (1u64 << (self.bit_size - 1)) + 1;
        let count = 1u64 << (self.bit_size - 2); // odd candidates in the open interval
        for _ in 0..SAMPLE_ATTEMPTS {
            let k = self.rng.random_range(0..count);
            let candidate = first + 2 * k;
            if is_prime(candidate) && !self.issued.contains(&candidate) {
                self.issued.insert(candidate);
                return Ok(candidate);
            }
        }
        if self.bit_size <= ENUMERABLE_BITS {
            // Small pool nearly drained: enumerate what is left.
            let remaining: Vec<u64> = (0..count)
                .map(|k| first + 2 * k)
                .filter(|&c| is_prime(c) && !self.issued.contains(&c))
                .collect();
            if remaining.is_empty() {
                return Err(Error::PrimePoolExhausted {
                    bit_size: self.bit_size,
                });
            }
            let pick = remaining[self.rng.random_range(0..remaining.len())];
            self.issued.insert(pick);
            return Ok(pick);
        }
        // Pools of 2^24-bit primes and up hold millions of members; this many
        // consecutive misses means the process state is broken, not the pool.
        Err(Error::PrimePoolExhausted {
            bit_size: self.bit_size,
        })
    }
}
