//! Scalar rings the engine can execute over.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::coeff::Coefficient;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("int64 overflow in {0}")]
    Overflow(&'static str),
    #[error("coefficient {coeff} is not representable in {ring}")]
    Unrepresentable { coeff: Coefficient, ring: String },
    #[error("{0} is not a valid modulus; need a prime > 2")]
    BadModulus(u64),
}

/// A commutative ring with the operations a straight-line program needs.
///
/// Exact rings satisfy the ring axioms; [`F64Ring`] is approximate.
pub trait ScalarRing: Sync {
    type Elem: Clone + PartialEq + Debug + Send + Sync;

    fn name(&self) -> String;
    fn zero(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, RingError>;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, RingError>;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, RingError>;
    fn neg(&self, a: &Self::Elem) -> Result<Self::Elem, RingError>;
    /// Image of a rational constant, if the ring can represent it.
    fn constant(&self, c: &Coefficient) -> Result<Self::Elem, RingError>;
    fn is_exact(&self) -> bool {
        true
    }
    /// A random element for test and benchmark inputs.
    fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> Self::Elem;

    fn unrepresentable(&self, c: &Coefficient) -> RingError {
        RingError::Unrepresentable {
            coeff: c.clone(),
            ring: self.name(),
        }
    }
}

/// Exact rationals.
#[derive(Clone, Copy, Debug, Default)]
pub struct RationalRing;

impl ScalarRing for RationalRing {
    type Elem = Coefficient;

    fn name(&self) -> String {
        "rational".into()
    }
    fn zero(&self) -> Coefficient {
        Coefficient::zero()
    }
    fn add(&self, a: &Coefficient, b: &Coefficient) -> Result<Coefficient, RingError> {
        Ok(a + b)
    }
    fn sub(&self, a: &Coefficient, b: &Coefficient) -> Result<Coefficient, RingError> {
        Ok(a - b)
    }
    fn mul(&self, a: &Coefficient, b: &Coefficient) -> Result<Coefficient, RingError> {
        Ok(a * b)
    }
    fn neg(&self, a: &Coefficient) -> Result<Coefficient, RingError> {
        Ok(-a)
    }
    fn constant(&self, c: &Coefficient) -> Result<Coefficient, RingError> {
        Ok(c.clone())
    }
    fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> Coefficient {
        Coefficient::new(rng.gen_range(-20i64..=20), rng.gen_range(1i64..=6))
    }
}

/// 64-bit integers; any overflow is an error rather than a wrap.
#[derive(Clone, Copy, Debug, Default)]
pub struct CheckedI64;

impl ScalarRing for CheckedI64 {
    type Elem = i64;

    fn name(&self) -> String {
        "int64".into()
    }
    fn zero(&self) -> i64 {
        0
    }
    fn add(&self, a: &i64, b: &i64) -> Result<i64, RingError> {
        a.checked_add(*b).ok_or(RingError::Overflow("add"))
    }
    fn sub(&self, a: &i64, b: &i64) -> Result<i64, RingError> {
        a.checked_sub(*b).ok_or(RingError::Overflow("sub"))
    }
    fn mul(&self, a: &i64, b: &i64) -> Result<i64, RingError> {
        a.checked_mul(*b).ok_or(RingError::Overflow("mul"))
    }
    fn neg(&self, a: &i64) -> Result<i64, RingError> {
        a.checked_neg().ok_or(RingError::Overflow("neg"))
    }
    fn constant(&self, c: &Coefficient) -> Result<i64, RingError> {
        c.to_i64().ok_or_else(|| self.unrepresentable(c))
    }
    fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> i64 {
        rng.gen_range(-1000..=1000)
    }
}

/// The prime field `F_p`, elements in `[0, p)`.
#[derive(Clone, Copy, Debug)]
pub struct ModP {
    p: u64,
}

impl ModP {
    pub fn new(p: u64) -> Result<Self, RingError> {
        if p <= 2 || !primal_check::miller_rabin(p) {
            return Err(RingError::BadModulus(p));
        }
        Ok(ModP { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn reduce_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    fn reduce_big(&self, v: &BigInt) -> u64 {
        v.mod_floor(&BigInt::from(self.p))
            .to_u64()
            .expect("residue fits in u64")
    }

    fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = ((acc as u128 * base as u128) % self.p as u128) as u64;
            }
            base = ((base as u128 * base as u128) % self.p as u128) as u64;
            exp >>= 1;
        }
        acc
    }
}

impl ScalarRing for ModP {
    type Elem = u64;

    fn name(&self) -> String {
        format!("modp:{}", self.p)
    }
    fn zero(&self) -> u64 {
        0
    }
    fn add(&self, a: &u64, b: &u64) -> Result<u64, RingError> {
        Ok(((*a as u128 + *b as u128) % self.p as u128) as u64)
    }
    fn sub(&self, a: &u64, b: &u64) -> Result<u64, RingError> {
        Ok(((*a as u128 + (self.p - b) as u128) % self.p as u128) as u64)
    }
    fn mul(&self, a: &u64, b: &u64) -> Result<u64, RingError> {
        Ok(((*a as u128 * *b as u128) % self.p as u128) as u64)
    }
    fn neg(&self, a: &u64) -> Result<u64, RingError> {
        Ok((self.p - a) % self.p)
    }
    fn constant(&self, c: &Coefficient) -> Result<u64, RingError> {
        let den = self.reduce_big(c.denominator());
        if den.is_zero() {
            return Err(self.unrepresentable(c));
        }
        let inv = self.pow(den, self.p - 2);
        self.mul(&self.reduce_big(c.numerator()), &inv)
    }
    fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> u64 {
        rng.gen_range(0..self.p)
    }
}

/// IEEE double precision. Not exact.
#[derive(Clone, Copy, Debug, Default)]
pub struct F64Ring;

impl ScalarRing for F64Ring {
    type Elem = f64;

    fn name(&self) -> String {
        "f64".into()
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn add(&self, a: &f64, b: &f64) -> Result<f64, RingError> {
        Ok(a + b)
    }
    fn sub(&self, a: &f64, b: &f64) -> Result<f64, RingError> {
        Ok(a - b)
    }
    fn mul(&self, a: &f64, b: &f64) -> Result<f64, RingError> {
        Ok(a * b)
    }
    fn neg(&self, a: &f64) -> Result<f64, RingError> {
        Ok(-a)
    }
    fn constant(&self, c: &Coefficient) -> Result<f64, RingError> {
        Ok(c.to_f64())
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> f64 {
        rng.gen_range(-1.0..=1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_overflow() {
        let r = CheckedI64;
        assert_eq!(r.add(&i64::MAX, &1), Err(RingError::Overflow("add")));
        assert_eq!(
            r.mul(&(1 << 40), &(1 << 40)),
            Err(RingError::Overflow("mul"))
        );
        assert!(r.constant(&Coefficient::new(1, 2)).is_err());
    }

    #[test]
    fn modp_rejects_composites() {
        assert!(ModP::new(2).is_err());
        assert!(ModP::new(1_000_001).is_err());
        assert!(ModP::new(1_000_003).is_ok());
    }

    #[test]
    fn modp_inverts_denominators() {
        let f = ModP::new(7).unwrap();
        let half = f.constant(&Coefficient::new(1, 2)).unwrap();
        assert_eq!(f.mul(&half, &2).unwrap(), 1);
        assert_eq!(f.constant(&Coefficient::from_int(-1)).unwrap(), 6);
        assert!(f.constant(&Coefficient::new(1, 7)).is_err());
        assert_eq!(f.sub(&2, &5).unwrap(), 4);
        assert_eq!(f.neg(&0).unwrap(), 0);
    }
}
