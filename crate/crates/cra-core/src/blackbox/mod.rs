//! Residue producers: given a modulus p, return the answer of the underlying
//! problem mod p.

mod io;
mod matrix;

pub use io::{read_dense, read_matrix, read_sms, MatrixFormat};
pub use matrix::{
    charpoly_bound_bits, hadamard_bound_bits, CharpolyBlackBox, DetBlackBox, IntMatrix, ModMatrix,
};

use std::time::Duration;

use num_bigint::BigInt;

use crate::error::Result;
use crate::residue::reduce_signed_u64;

/// A black box is consistent: there is one exact integer vector R with
/// `apply(p)[j] ≡ R[j] (mod p)` for every modulus it is asked about.
pub trait BlackBox: Sync {
    /// Residues of the underlying vector, each in `[0, p)`.
    fn apply(&self, p: u64) -> Result<Vec<u64>>;

    /// Length of the residue vector.
    fn dimension(&self) -> usize;

    /// Whether `apply` may run concurrently on distinct moduli.
    fn reentrant(&self) -> bool {
        true
    }
}

/// Test double holding its exact answer; optionally sleeps per apply to make
/// scheduling behavior observable.
#[derive(Debug, Clone)]
pub struct FixedOracle {
    values: Vec<BigInt>,
    delay: Option<Duration>,
    reentrant: bool,
}

impl FixedOracle {
    pub fn new(values: Vec<BigInt>) -> FixedOracle {
        FixedOracle {
            values,
            delay: None,
            reentrant: true,
        }
    }

    pub fn from_i64(values: &[i64]) -> FixedOracle {
        FixedOracle::new(values.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn with_delay(mut self, delay: Duration) -> FixedOracle {
        self.delay = Some(delay);
        self
    }

    /// Declare the oracle non-reentrant (exercises the parallel guard).
    pub fn non_reentrant(mut self) -> FixedOracle {
        self.reentrant = false;
        self
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }
}

impl BlackBox for FixedOracle {
    fn apply(&self, p: u64) -> Result<Vec<u64>> {
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
        Ok(self.values.iter().map(|v| reduce_signed_u64(v, p)).collect())
    }

    fn dimension(&self) -> usize {
        self.values.len()
    }

    fn reentrant(&self) -> bool {
        self.reentrant
    }
}
