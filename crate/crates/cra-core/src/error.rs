use num_bigint::BigUint;

/// Errors surfaced by reconstruction, generators, builders and controllers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("moduli are not coprime: gcd({a}, {b}) > 1")]
    NonCoprime { a: BigUint, b: BigUint },

    #[error("prime pool of bit size {bit_size} exhausted; raise the bit size")]
    PrimePoolExhausted { bit_size: u32 },

    #[error("prime bit size {0} outside supported range [3, 62]")]
    InvalidBitSize(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("residue value {value} not reduced modulo {modulus}")]
    ResidueOutOfRange { value: BigUint, modulus: BigUint },

    #[error("modulus must be at least 2 (got {0})")]
    ModulusTooSmall(BigUint),

    #[error("ladder is empty; nothing to collapse")]
    EmptyLadder,

    #[error("no residues received; nothing to reconstruct")]
    NoUpdates,

    #[error("iteration {got} presented out of order (schedule already at {expected})")]
    OutOfOrderIteration { expected: u64, got: u64 },

    #[error("modulus {0} too large for this black box (requires p < 2^31)")]
    ModulusTooLarge(u64),

    #[error("black box is not reentrant; parallel execution refused")]
    NotReentrant,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("worker {worker} failed: {message}")]
    WorkerFailure { worker: usize, message: String },

    #[error("at iteration {iteration}: {source}")]
    Step {
        iteration: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach the controller loop position to an error.
    pub fn at_iteration(self, iteration: u64) -> Error {
        Error::Step {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
