//! Every termination strategy recovers the declared exact values, and
//! batched updates behave like the corresponding update sequences.

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use cra_core::blackbox::FixedOracle;
use cra_core::builder::{
    AmortizedBuilder, BalancedBuilder, Builder, DeterministicBuilder, EarlyMultiBuilder,
    EarlySingleBuilder,
};
use cra_core::controller::run;
use cra_core::primes::{GeneratorMode, ModulusGenerator};

fn gen(seed: u64, mode: GeneratorMode) -> ModulusGenerator {
    ModulusGenerator::new(29, seed, mode).unwrap()
}

fn random_signed(rng: &mut ChaCha12Rng, bits: u64) -> BigInt {
    let mut buf = vec![0u8; bits.div_ceil(8) as usize];
    rng.fill_bytes(&mut buf);
    let mut x = BigUint::from_bytes_le(&buf);
    x &= (BigUint::one() << bits) - 1u32;
    let v = BigInt::from(x);
    if rng.random_bool(0.5) {
        -v
    } else {
        v
    }
}

fn builders_for(dimension: usize, bound_bits: u64, seed: u64) -> Vec<(&'static str, Box<dyn Builder>)> {
    let et = 3;
    let mut out: Vec<(&'static str, Box<dyn Builder>)> = vec![
        (
            "deterministic",
            Box::new(DeterministicBuilder::new(
                dimension,
                bound_bits,
                gen(seed, GeneratorMode::Descending),
            )),
        ),
        (
            "early-multi",
            Box::new(EarlyMultiBuilder::new(dimension, et, gen(seed, GeneratorMode::Random))),
        ),
        (
            "balanced",
            Box::new(BalancedBuilder::new(
                dimension,
                et,
                gen(seed, GeneratorMode::Descending),
                gen(seed ^ 0xabcd, GeneratorMode::Random),
            )),
        ),
        (
            "amortized",
            Box::new(AmortizedBuilder::new(
                dimension,
                et,
                gen(seed, GeneratorMode::Descending),
                gen(seed ^ 0xabcd, GeneratorMode::Random),
            )),
        ),
    ];
    if dimension == 1 {
        out.push((
            "early",
            Box::new(EarlySingleBuilder::new(et, gen(seed, GeneratorMode::Random))),
        ));
    }
    out
}

#[test]
fn every_strategy_recovers_scalars() {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    for trial in 0..25u64 {
        let bits = rng.random_range(1..=255u64);
        let r = random_signed(&mut rng, bits);
        let oracle = FixedOracle::new(vec![r.clone()]);
        let bound = r.magnitude().bits();
        for (name, mut builder) in builders_for(1, bound, trial) {
            let (result, stats) = run(builder.as_mut(), &oracle).unwrap();
            assert_eq!(result, vec![r.clone()], "strategy {name}, trial {trial}");
            assert!(stats.primes_used >= 1);
        }
    }
}

#[test]
fn every_strategy_recovers_vectors() {
    let mut rng = ChaCha12Rng::seed_from_u64(8);
    for trial in 0..10u64 {
        let d = rng.random_range(2..=6usize);
        let values: Vec<BigInt> = (0..d)
            .map(|_| {
                let bits = rng.random_range(1..=120u64);
                random_signed(&mut rng, bits)
            })
            .collect();
        let bound = values.iter().map(|v| v.magnitude().bits()).max().unwrap();
        let oracle = FixedOracle::new(values.clone());
        for (name, mut builder) in builders_for(d, bound, trial) {
            let (result, _) = run(builder.as_mut(), &oracle).unwrap();
            assert_eq!(result, values, "strategy {name}, trial {trial}");
        }
    }
}

#[test]
fn update_batch_equals_update_sequence() {
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    let d = 3usize;
    let values: Vec<BigInt> = (0..d).map(|_| random_signed(&mut rng, 90)).collect();
    let oracle = FixedOracle::new(values.clone());
    for (name, mut one_by_one) in builders_for(d, 96, 77) {
        // An identical twin receives the same residues in one batch.
        let mut batched = builders_for(d, 96, 77)
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap()
            .1;
        one_by_one.initialize();
        batched.initialize();
        let mut residues = Vec::new();
        let mut moduli = Vec::new();
        for _ in 0..9 {
            let p = one_by_one.next_coprime().unwrap();
            assert_eq!(p, batched.next_coprime().unwrap());
            let v = oracle
                .values()
                .iter()
                .map(|x| cra_core::residue::reduce_signed_u64(x, p))
                .collect::<Vec<_>>();
            one_by_one.update(&v, p).unwrap();
            residues.push(v);
            moduli.push(p);
        }
        batched.update_batch(&residues, &moduli).unwrap();
        assert_eq!(one_by_one.update_count(), batched.update_count(), "{name}");
        assert_eq!(
            one_by_one.reconstruct().unwrap(),
            batched.reconstruct().unwrap(),
            "{name}"
        );
    }
}
