//! Desk-scale oracle suites: brute-force CRT scans, the binary-counter law,
//! and cofactor determinants, all independent of the library's own
//! reconstruction path.

use std::process::ExitCode;

use cra_core::blackbox::{DetBlackBox, IntMatrix};
use cra_core::builder::DeterministicBuilder;
use cra_core::controller::run;
use cra_core::error::Result;
use cra_core::ladder::RadixLadder;
use cra_core::primes::{GeneratorMode, ModulusGenerator};
use cra_core::residue::{mod_inverse, reconstruct_pair, Residue};
use cra_core::{BigInt, BigUint};

use crate::CommonArgs;

struct Suite {
    name: &'static str,
    checks: u64,
    failure: Option<String>,
}

impl Suite {
    fn new(name: &'static str) -> Suite {
        Suite {
            name,
            checks: 0,
            failure: None,
        }
    }

    fn check(&mut self, ok: bool, counterexample: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(counterexample());
        }
    }

    fn report(&self) -> bool {
        match &self.failure {
            None => {
                println!("suite {}: ok ({} checks)", self.name, self.checks);
                true
            }
            Some(cex) => {
                println!("suite {}: FAILED", self.name);
                println!("  counterexample: {cex}");
                false
            }
        }
    }
}

/// Pairwise reconstruction and inverses against exhaustive scans over small
/// moduli. `inject_fault` flips one reconstruction to prove the harness sees
/// wrong answers.
fn crt_bruteforce(seed: u64, inject_fault: bool) -> Suite {
    let mut suite = Suite::new("crt-bruteforce");
    let mut faulted = inject_fault;
    let pairs = [(2u64, 3u64), (3, 5), (4, 9), (5, 7), (8, 9), (7, 12), (11, 13)];
    for &(m, n) in &pairs {
        for a in 0..m {
            for b in 0..n {
                let got = reconstruct_pair(
                    &Residue::new(a, m).unwrap(),
                    &Residue::new(b, n).unwrap(),
                )
                .unwrap();
                let mut value: u64 = got.value().try_into().unwrap();
                if faulted {
                    value = (value + 1) % (m * n);
                    faulted = false;
                }
                let want = (0..m * n).find(|x| x % m == a && x % n == b).unwrap();
                suite.check(value == want, || {
                    format!("reconstruct_pair({a} mod {m}, {b} mod {n}) = {value} mod {}, scan says {want}", m * n)
                });
            }
        }
    }
    for m in 2u64..=40 {
        for x in 1..m {
            let inv = mod_inverse(&BigUint::from(x), &BigUint::from(m));
            let brute = (1..m).find(|y| x * y % m == 1);
            match (inv, brute) {
                (Ok(y), Some(want)) => {
                    let y: u64 = y.try_into().unwrap();
                    suite.check(y == want, || {
                        format!("mod_inverse({x}, {m}) = {y}, scan says {want}")
                    });
                }
                (Err(_), None) => suite.check(true, String::new),
                (got, want) => suite.check(false, || {
                    format!("mod_inverse({x}, {m}): got {got:?}, scan says {want:?}")
                }),
            }
        }
    }
    let _ = seed;
    suite
}

/// Ladder occupancy equals the binary digits of the insert count, and the
/// collapse equals the value the residues were taken from.
fn ladder_binary_counter(seed: u64) -> Suite {
    let mut suite = Suite::new("ladder-binary-counter");
    let mut primes = ModulusGenerator::new(29, seed, GeneratorMode::Random).unwrap();
    let mut ladder = RadixLadder::new(1);
    let r = BigUint::from(0x0123_4567_89ab_cdefu64);
    let mut product = BigUint::from(1u32);
    for n in 1u64..=64 {
        let p = primes.next_modulus().unwrap();
        ladder
            .insert(vec![&r % p], BigUint::from(p))
            .unwrap();
        product *= p;
        for level in 0..=6usize {
            let want = (n >> level) & 1 == 1;
            let got = ladder.shelf(level).is_some();
            suite.check(got == want, || {
                format!("after {n} inserts shelf {level} occupied={got}, binary counter says {want}")
            });
        }
    }
    let out = ladder.collapse().unwrap();
    suite.check(product > &r * 2u32, String::new);
    suite.check(out.values[0] == r, || {
        format!("collapse of 64 residues of {r} gave {}", out.values[0])
    });
    suite
}

fn cofactor_det(a: &IntMatrix) -> BigInt {
    fn minor(rows: &[usize], cols: &[usize], a: &IntMatrix) -> BigInt {
        if rows.is_empty() {
            return BigInt::from(1);
        }
        let mut acc = BigInt::from(0);
        for (idx, &c) in cols.iter().enumerate() {
            let sub: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = a.entry(rows[0], c) * minor(&rows[1..], &sub, a);
            if idx % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }
    let idx: Vec<usize> = (0..a.n()).collect();
    minor(&idx, &idx, a)
}

/// Full pipeline determinants against expansion by minors.
fn cofactor_determinant(seed: u64, prime_bits: u32) -> Suite {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut suite = Suite::new("cofactor-determinant");
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..25u64 {
        let n = rng.random_range(1..=5usize);
        let entries: Vec<i64> = (0..n * n).map(|_| rng.random_range(-99..=99)).collect();
        let a = IntMatrix::from_i64(n, &entries).unwrap();
        let want = cofactor_det(&a);
        let bb = DetBlackBox::new(a);
        let gen = ModulusGenerator::new(prime_bits.min(31), seed + trial, GeneratorMode::Random)
            .unwrap();
        let mut builder = DeterministicBuilder::new(1, bb.bound_bits(), gen);
        let got = match run(&mut builder, &bb) {
            Ok((result, _)) => result[0].clone(),
            Err(e) => {
                suite.check(false, || format!("pipeline error on trial {trial}: {e}"));
                continue;
            }
        };
        suite.check(got == want, || {
            format!("trial {trial} (n={n}): pipeline {got}, cofactor oracle {want}")
        });
    }
    suite
}

pub fn cmd_selfcheck(common: &CommonArgs, inject_fault: bool) -> Result<ExitCode> {
    let suites = [
        crt_bruteforce(common.seed, inject_fault),
        ladder_binary_counter(common.seed),
        cofactor_determinant(common.seed, common.prime_bits),
    ];
    let mut all_ok = true;
    for suite in &suites {
        all_ok &= suite.report();
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
