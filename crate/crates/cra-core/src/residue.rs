//! Residue pairs and the pairwise lifting step.
//!
//! A [`Residue`] keeps a value reduced into `[0, modulus)`. Two residues with
//! coprime moduli combine into one modulo the product via [`reconstruct_pair`],
//! which performs the lift with a single modular multiplication and a single
//! modular inverse. Signed interpretation happens only at the boundary through
//! [`Residue::symmetric_lift`].

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::error::{Error, Result};

/// A value together with the modulus it is known under: `value ≡ R (mod modulus)`.
///
/// Invariants: `0 <= value < modulus` and `modulus >= 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residue {
    value: BigUint,
    modulus: BigUint,
}

impl Residue {
    /// Build a residue, reducing `value` into `[0, modulus)`.
    ///
    /// Errors if `modulus < 2`.
    pub fn new<V: Into<BigUint>, M: Into<BigUint>>(value: V, modulus: M) -> Result<Residue> {
        let modulus = modulus.into();
        if modulus < BigUint::from(2u32) {
            return Err(Error::ModulusTooSmall(modulus));
        }
        let value = value.into() % &modulus;
        Ok(Residue { value, modulus })
    }

    /// Build a residue from a signed representative.
    pub fn from_signed(value: &BigInt, modulus: BigUint) -> Result<Residue> {
        if modulus < BigUint::from(2u32) {
            return Err(Error::ModulusTooSmall(modulus));
        }
        let m = BigInt::from(modulus.clone());
        let v = value.mod_floor(&m);
        let value = v.to_biguint().expect("mod_floor yields a nonnegative value");
        Ok(Residue { value, modulus })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// The representative of this residue class in `(-modulus/2, modulus/2]`.
    pub fn symmetric_lift(&self) -> BigInt {
        symmetric_lift(&self.value, &self.modulus)
    }
}

impl std::fmt::Display for Residue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// Representative of `value mod modulus` in `(-modulus/2, modulus/2]`.
pub fn symmetric_lift(value: &BigUint, modulus: &BigUint) -> BigInt {
    if value * 2u32 <= *modulus {
        BigInt::from(value.clone())
    } else {
        BigInt::from(value.clone()) - BigInt::from(modulus.clone())
    }
}

/// Modular inverse of `x` modulo `m`, in `[1, m)`.
///
/// Errors with [`Error::NonCoprime`] when `gcd(x, m) != 1`.
pub fn mod_inverse(x: &BigUint, m: &BigUint) -> Result<BigUint> {
    let xi = BigInt::from(x % m);
    let mi = BigInt::from(m.clone());
    let ext = xi.extended_gcd(&mi);
    if !ext.gcd.is_one() {
        return Err(Error::NonCoprime {
            a: x.clone(),
            b: m.clone(),
        });
    }
    let inv = ext.x.mod_floor(&mi);
    Ok(inv.to_biguint().expect("mod_floor yields a nonnegative value"))
}

/// Lift two residues with coprime moduli to one modulo the product:
///
/// given `U ≡ R (mod M)` and `V ≡ R (mod N)`, returns
/// `R_MN = U + ((V - U) * (M^-1 mod N) mod N) * M`, reduced into `[0, M*N)`.
///
/// Errors when `gcd(M, N) != 1` (detected by the inverse).
pub fn reconstruct_pair(a: &Residue, b: &Residue) -> Result<Residue> {
    let (u, m) = (&a.value, &a.modulus);
    let (v, n) = (&b.value, &b.modulus);
    // Step 1: U_N = V - U (mod N).
    let u_mod_n = u % n;
    let mut u_n = if *v >= u_mod_n {
        v - &u_mod_n
    } else {
        n + v - &u_mod_n
    };
    // Step 2: M_N = M^-1 (mod N); the single inverse of the lift.
    let m_n = mod_inverse(m, n)?;
    // Step 3: U_N = U_N * M_N (mod N); the single modular multiplication.
    u_n = u_n * m_n % n;
    // Step 4: R_MN = U + U_N * M.
    let mut r = u + u_n * m;
    // Step 5: conditional subtraction keeps the result in [0, M*N).
    let mn = m * n;
    if r >= mn {
        r -= &mn;
    }
    Ok(Residue {
        value: r,
        modulus: mn,
    })
}

/// Reduce a signed integer into `[0, p)` for a word-size modulus.
pub fn reduce_signed_u64(value: &BigInt, p: u64) -> u64 {
    let m = BigInt::from(p);
    let r = value.mod_floor(&m);
    // r is in [0, p) and p fits u64.
    let (_, digits) = r.to_u64_digits();
    if r.is_negative() || digits.len() > 1 {
        unreachable!("mod_floor out of range");
    }
    digits.first().copied().unwrap_or(0)
}
