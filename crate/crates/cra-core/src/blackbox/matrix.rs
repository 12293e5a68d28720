//! Exact integer matrices, their word-size modular images, and the
//! determinant / characteristic polynomial residue computations.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::blackbox::BlackBox;
use crate::error::{Error, Result};
use crate::residue::reduce_signed_u64;

/// Dense square matrix over the integers, immutable once built.
#[derive(Debug, Clone)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>, // row-major
}

impl IntMatrix {
    pub fn new(n: usize, entries: Vec<BigInt>) -> Result<IntMatrix> {
        if entries.len() != n * n {
            return Err(Error::Parse(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(IntMatrix { n, entries })
    }

    pub fn from_i64(n: usize, entries: &[i64]) -> Result<IntMatrix> {
        IntMatrix::new(n, entries.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn zero(n: usize) -> IntMatrix {
        IntMatrix {
            n,
            entries: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut m = IntMatrix::zero(n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub(crate) fn add_entry(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.n + j] += v;
    }

    /// Entrywise reduction into `[0, p)`.
    pub fn map_mod(&self, p: u64) -> Result<ModMatrix> {
        ModMatrix::map_from(self, p)
    }

    /// Largest entry magnitude (the infinity norm of the entries).
    pub fn max_abs(&self) -> BigUint {
        self.entries
            .iter()
            .map(|e| e.magnitude().clone())
            .max()
            .unwrap_or_else(BigUint::zero)
    }
}

/// The modular image of an [`IntMatrix`]: entries reduced mod a prime
/// `p < 2^31`, so products fit 64-bit intermediates.
#[derive(Debug, Clone)]
pub struct ModMatrix {
    n: usize,
    p: u64,
    entries: Vec<u64>,
}

impl ModMatrix {
    pub fn map_from(a: &IntMatrix, p: u64) -> Result<ModMatrix> {
        if p >= 1 << 31 {
            return Err(Error::ModulusTooLarge(p));
        }
        if p < 2 {
            return Err(Error::ModulusTooSmall(BigUint::from(p)));
        }
        let entries = a.entries.iter().map(|e| reduce_signed_u64(e, p)).collect();
        Ok(ModMatrix {
            n: a.n,
            p,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.n + j]
    }

    /// Determinant over Z/pZ by Gaussian elimination with partial pivoting,
    /// row-swap signs tracked. Singular images yield 0.
    pub fn det(&self) -> u64 {
        let n = self.n;
        let p = self.p;
        if n == 0 {
            return 1 % p;
        }
        let mut a = self.entries.clone();
        let mut det = 1u64;
        let mut negate = false;
        for col in 0..n {
            let pivot_row = match (col..n).find(|&r| a[r * n + col] != 0) {
                Some(r) => r,
                None => return 0,
            };
            if pivot_row != col {
                for k in 0..n {
                    a.swap(pivot_row * n + k, col * n + k);
                }
                negate = !negate;
            }
            let pivot = a[col * n + col];
            det = det * pivot % p;
            let inv = inv_mod(pivot, p);
            for row in col + 1..n {
                let factor = a[row * n + col] * inv % p;
                if factor == 0 {
                    continue;
                }
                for k in col..n {
                    let sub = factor * a[col * n + k] % p;
                    let cell = &mut a[row * n + k];
                    *cell = (*cell + p - sub) % p;
                }
            }
        }
        if negate {
            (p - det) % p
        } else {
            det
        }
    }

    /// Coefficients of det(xI - M) over Z/pZ, constant term first, leading
    /// coefficient 1: Hessenberg reduction by similarity, then the
    /// leading-principal-minor recurrence.
    pub fn charpoly(&self) -> Vec<u64> {
        let n = self.n;
        let p = self.p;
        if n == 0 {
            return vec![1 % p];
        }
        let mut h = self.entries.clone();
        // Reduce to upper Hessenberg form with similarity transformations
        // (paired row/column operations), permuting when the subdiagonal
        // pivot vanishes.
        for col in 0..n.saturating_sub(2) {
            let pivot_row = match (col + 1..n).find(|&r| h[r * n + col] != 0) {
                Some(r) => r,
                None => continue,
            };
            if pivot_row != col + 1 {
                for k in 0..n {
                    h.swap(pivot_row * n + k, (col + 1) * n + k);
                }
                for k in 0..n {
                    h.swap(k * n + pivot_row, k * n + col + 1);
                }
            }
            let inv = inv_mod(h[(col + 1) * n + col], p);
            for row in col + 2..n {
                let factor = h[row * n + col] * inv % p;
                if factor == 0 {
                    continue;
                }
                for k in col..n {
                    let sub = factor * h[(col + 1) * n + k] % p;
                    let cell = &mut h[row * n + k];
                    *cell = (*cell + p - sub) % p;
                }
                for k in 0..n {
                    let add = factor * h[k * n + row] % p;
                    let cell = &mut h[k * n + col + 1];
                    *cell = (*cell + add) % p;
                }
            }
        }
        // p_k(x) = (x - h[k,k]) p_{k-1}(x) - sum_i h[i,k] * prod(subdiag) * p_{i-1}(x),
        // with polynomials stored constant-first.
        let mut polys: Vec<Vec<u64>> = vec![vec![1 % p]];
        for k in 1..=n {
            let prev = &polys[k - 1];
            let mut pk = vec![0u64; k + 1];
            for (i, &c) in prev.iter().enumerate() {
                pk[i + 1] = c; // x * p_{k-1}
            }
            let hkk = h[(k - 1) * n + (k - 1)];
            for (i, &c) in prev.iter().enumerate() {
                pk[i] = (pk[i] + p - hkk * c % p) % p;
            }
            let mut beta = 1u64;
            for i in (1..k).rev() {
                beta = beta * h[i * n + (i - 1)] % p;
                if beta == 0 {
                    break;
                }
                let coeff = h[(i - 1) * n + (k - 1)] * beta % p;
                if coeff == 0 {
                    continue;
                }
                for (j, &c) in polys[i - 1].iter().enumerate() {
                    pk[j] = (pk[j] + p - coeff * c % p) % p;
                }
            }
            polys.push(pk);
        }
        polys.pop().expect("n >= 1")
    }
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat inverse; p is prime and a nonzero mod p.
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Smallest b with `2^b >= bound`.
fn ceil_log2(bound: &BigUint) -> u64 {
    if bound <= &BigUint::one() {
        return 0;
    }
    (bound - 1u32).bits()
}

/// Bit budget from the Hadamard bound: the smallest b with
/// `2^b >= prod_i ||row_i||_2 >= |det A|`, computed exactly as the minimal b
/// with `4^b >= prod_i sum_j A_ij^2`. Returns 0 when some row is zero.
pub fn hadamard_bound_bits(a: &IntMatrix) -> u64 {
    let mut product = BigUint::one();
    for i in 0..a.n() {
        let mut sumsq = BigUint::zero();
        for j in 0..a.n() {
            let e = a.entry(i, j).magnitude();
            sumsq += e * e;
        }
        if sumsq.is_zero() {
            return 0;
        }
        product *= sumsq;
    }
    // Minimal b with 4^b >= product, i.e. ceil(log2(product) / 2).
    let mut b = product.bits() / 2 + 1;
    while b > 0 && BigUint::one() << (2 * (b - 1)) >= product {
        b -= 1;
    }
    b
}

/// Bit budget for characteristic polynomial coefficient k of an n x n matrix:
/// `|c_k| <= C(n, n-k) * (n * max|A_ij|)^(n-k)` via elementary symmetric
/// functions of the eigenvalues and the spectral bound `rho(A) <= n*max|A|`.
/// Returns the smallest b with `2^b` at or above that bound.
pub fn charpoly_bound_bits(a: &IntMatrix, k: usize) -> u64 {
    let n = a.n();
    assert!(k <= n, "coefficient index out of range");
    if k == n {
        return 0; // monic
    }
    let a_inf = a.max_abs();
    if a_inf.is_zero() {
        return 0;
    }
    let rho = BigUint::from(n as u64) * a_inf;
    let bound = binomial(n as u64, (n - k) as u64) * rho.pow((n - k) as u32);
    ceil_log2(&bound)
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Black box computing `det(A) mod p`.
#[derive(Debug, Clone)]
pub struct DetBlackBox {
    matrix: IntMatrix,
}

impl DetBlackBox {
    pub fn new(matrix: IntMatrix) -> DetBlackBox {
        DetBlackBox { matrix }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    /// Deterministic prime budget for the determinant task.
    pub fn bound_bits(&self) -> u64 {
        hadamard_bound_bits(&self.matrix)
    }
}

impl BlackBox for DetBlackBox {
    fn apply(&self, p: u64) -> Result<Vec<u64>> {
        Ok(vec![self.matrix.map_mod(p)?.det()])
    }

    fn dimension(&self) -> usize {
        1
    }
}

/// Black box computing the characteristic polynomial coefficients mod p,
/// constant term first.
#[derive(Debug, Clone)]
pub struct CharpolyBlackBox {
    matrix: IntMatrix,
}

impl CharpolyBlackBox {
    pub fn new(matrix: IntMatrix) -> CharpolyBlackBox {
        CharpolyBlackBox { matrix }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    /// Deterministic prime budget: the worst coefficient bound.
    pub fn bound_bits(&self) -> u64 {
        (0..=self.matrix.n())
            .map(|k| charpoly_bound_bits(&self.matrix, k))
            .max()
            .unwrap_or(0)
    }
}

impl BlackBox for CharpolyBlackBox {
    fn apply(&self, p: u64) -> Result<Vec<u64>> {
        Ok(self.matrix.map_mod(p)?.charpoly())
    }

    fn dimension(&self) -> usize {
        self.matrix.n() + 1
    }
}
