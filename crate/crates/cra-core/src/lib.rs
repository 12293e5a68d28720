//! Exact Chinese remaindering over word-size prime moduli.
//!
//! The pieces compose as a pipeline: a [`blackbox::BlackBox`] produces the
//! answer of some integer problem modulo any prime it is handed; a
//! [`builder::Builder`] folds those residues into a reconstruction (most keep
//! a [`ladder::RadixLadder`], the binary-counter structure that keeps
//! combines balanced) and decides when to stop — deterministically against a
//! precomputed bound, or early once the value stabilizes; and a controller
//! ([`controller::run`], [`parallel::run_adaptive`],
//! [`parallel::run_block_naive`]) loops generator, black box and builder
//! until termination.
//!
//! Shipped black boxes cover fixed integer oracles for testing plus exact
//! determinant and characteristic polynomial of integer matrices.

pub mod blackbox;
pub mod builder;
pub mod controller;
pub mod error;
pub mod ladder;
pub mod parallel;
pub mod primes;
pub mod residue;

pub use blackbox::{BlackBox, CharpolyBlackBox, DetBlackBox, FixedOracle, IntMatrix};
pub use builder::{
    AmortizedBuilder, AmortizedSchedule, BalancedBuilder, Builder, DeterministicBuilder,
    EarlyMultiBuilder, EarlySingleBuilder, EarlyState, ModulusBudget,
};
pub use controller::{run, RunStats};
pub use error::{Error, Result};
pub use ladder::{RadixLadder, Shelf, VectorResidue};
pub use parallel::{run_adaptive, run_block_naive, splitter, thief_entrypoint};
pub use primes::{is_prime, GeneratorMode, ModulusGenerator};
pub use residue::{mod_inverse, reconstruct_pair, symmetric_lift, Residue};

pub use num_bigint::{BigInt, BigUint};
