//! Exact rational coefficients.
//!
//! Every entry of a scheme matrix and every constant in a straight-line
//! program is a [`Coefficient`]. The wrapped [`BigRational`] is always kept in
//! lowest terms with a positive denominator, so structural equality is value
//! equality and zero has the single representation `0/1`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coefficient(BigRational);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid coefficient `{0}`")]
pub struct ParseCoefficientError(pub String);

impl Coefficient {
    pub fn new(numerator: impl Into<BigInt>, denominator: impl Into<BigInt>) -> Self {
        let den = denominator.into();
        assert!(!den.is_zero(), "coefficient with zero denominator");
        // `Ratio::new` reduces and moves the sign to the numerator.
        Coefficient(BigRational::new(numerator.into(), den))
    }

    pub fn from_int(value: i64) -> Self {
        Coefficient(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        Coefficient(BigRational::zero())
    }

    pub fn one() -> Self {
        Coefficient(BigRational::one())
    }

    pub fn minus_one() -> Self {
        Self::from_int(-1)
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_minus_one(&self) -> bool {
        self.0.is_integer() && *self.0.numer() == BigInt::from(-1)
    }

    /// `true` for `+1` and `-1`, the coefficients that cost no scalar multiplication.
    pub fn is_unit(&self) -> bool {
        self.is_one() || self.is_minus_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Coefficient(self.0.abs())
    }

    /// The value as an `i64`, if it is an integer in range.
    pub fn to_i64(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Coefficient(self.0.recip())
    }
}

/// Scales a coefficient vector to a primitive integer vector whose first
/// nonzero entry is positive. Returns the scaled vector and the factor `λ`
/// with `values = λ · primitive`.
pub fn primitive_part(values: &[Coefficient]) -> (Vec<Coefficient>, Coefficient) {
    let first = match values.iter().find(|c| !c.is_zero()) {
        Some(c) => c,
        None => return (values.to_vec(), Coefficient::one()),
    };
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for c in values.iter().filter(|c| !c.is_zero()) {
        num_gcd = num_gcd.gcd(c.numerator());
        den_lcm = den_lcm.lcm(c.denominator());
    }
    let mut factor = Coefficient::new(num_gcd, den_lcm);
    if first.is_negative() {
        factor = -factor;
    }
    let scaled = values.iter().map(|c| c / &factor).collect();
    (scaled, factor)
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Coefficient {
    type Err = ParseCoefficientError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseCoefficientError(s.to_string());
        let s = s.trim();
        match s.split_once('/') {
            Some((num, den)) => {
                let num: BigInt = num.trim().parse().map_err(|_| err())?;
                let den: BigInt = den.trim().parse().map_err(|_| err())?;
                if den.is_zero() {
                    return Err(err());
                }
                Ok(Coefficient::new(num, den))
            }
            None => {
                let num: BigInt = s.parse().map_err(|_| err())?;
                Ok(Coefficient(BigRational::from_integer(num)))
            }
        }
    }
}

impl From<i64> for Coefficient {
    fn from(value: i64) -> Self {
        Coefficient::from_int(value)
    }
}

impl From<BigRational> for Coefficient {
    fn from(value: BigRational) -> Self {
        Coefficient(value)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Coefficient> for &Coefficient {
            type Output = Coefficient;
            fn $method(self, rhs: &Coefficient) -> Coefficient {
                Coefficient((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Coefficient> for Coefficient {
            type Output = Coefficient;
            fn $method(self, rhs: Coefficient) -> Coefficient {
                Coefficient(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Coefficient> for Coefficient {
            type Output = Coefficient;
            fn $method(self, rhs: &Coefficient) -> Coefficient {
                Coefficient(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        Coefficient(-self.0)
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        Coefficient(-&self.0)
    }
}

impl std::iter::Sum for Coefficient {
    fn sum<I: Iterator<Item = Coefficient>>(iter: I) -> Self {
        iter.fold(Coefficient::zero(), |acc, c| acc + c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        let c = Coefficient::new(6, -4);
        assert_eq!(c.numerator(), &BigInt::from(-3));
        assert_eq!(c.denominator(), &BigInt::from(2));
        let z = Coefficient::new(0, -7);
        assert_eq!(z, Coefficient::zero());
        assert_eq!(z.denominator(), &BigInt::from(1));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/6".parse::<Coefficient>().unwrap().to_string(), "1/2");
        assert_eq!("-4".parse::<Coefficient>().unwrap().to_string(), "-4");
        assert_eq!("2/-4".parse::<Coefficient>().unwrap().to_string(), "-1/2");
        assert!("1/0".parse::<Coefficient>().is_err());
        assert!("x".parse::<Coefficient>().is_err());
    }

    #[test]
    fn primitive_part_normalizes_sign_and_content() {
        let v = vec![Coefficient::new(-1, 2), Coefficient::from_int(1)];
        let (p, f) = primitive_part(&v);
        assert_eq!(p, vec![Coefficient::from_int(1), Coefficient::from_int(-2)]);
        assert_eq!(f, Coefficient::new(-1, 2));
        let v = vec![Coefficient::from_int(4), Coefficient::from_int(6)];
        let (p, f) = primitive_part(&v);
        assert_eq!(p, vec![Coefficient::from_int(2), Coefficient::from_int(3)]);
        assert_eq!(f, Coefficient::from_int(2));
    }

    fn rational() -> impl Strategy<Value = Coefficient> {
        (-1000i64..1000, 1i64..1000).prop_map(|(n, d)| Coefficient::new(n, d))
    }

    proptest! {
        #[test]
        fn exact_field_arithmetic(a in rational(), b in rational()) {
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
            if !b.is_zero() {
                prop_assert_eq!(&(&a * &b) / &b, a.clone());
            }
        }

        #[test]
        fn always_canonical(a in rational(), b in rational()) {
            let s = &a * &b;
            prop_assert!(s.denominator() > &BigInt::zero());
            prop_assert_eq!(s.numerator().gcd(s.denominator()), BigInt::one());
        }
    }
}
