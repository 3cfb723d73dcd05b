//! Exact rationals with an overflow-checked `i64` fast path.
//!
//! Values are kept normalized: a number that fits in a reduced `Ratio<i64>`
//! is always stored as `Small`, so structural equality is numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rational {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl Rational {
    pub fn zero() -> Self {
        Rational::Small(Ratio::zero())
    }

    pub fn one() -> Self {
        Rational::Small(Ratio::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rational::Small(Ratio::from_integer(n))
    }

    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational::Small(Ratio::new(num, den))
    }

    fn from_big(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            // Ratio::new_raw is fine: BigRational is already reduced with positive denominator.
            (Some(n), Some(d)) => Rational::Small(Ratio::new_raw(n, d)),
            _ => Rational::Big(r),
        }
    }

    fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(r) => BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
            Rational::Big(r) => r.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Rational::Small(r) => r.is_zero(),
            Rational::Big(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Rational::Small(r) if r.is_one())
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rational::Small(r) => r.is_negative(),
            Rational::Big(r) => r.is_negative(),
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match self {
            Rational::Small(r) => match r.numer().checked_neg() {
                Some(_) => Rational::Small(r.recip()),
                None => Rational::from_big(self.to_big().recip()),
            },
            Rational::Big(r) => Rational::from_big(r.recip()),
        }
    }

    pub fn numer_string(&self) -> String {
        match self {
            Rational::Small(r) => r.numer().to_string(),
            Rational::Big(r) => r.numer().to_string(),
        }
    }

    pub fn denom_string(&self) -> String {
        match self {
            Rational::Small(r) => r.denom().to_string(),
            Rational::Big(r) => r.denom().to_string(),
        }
    }

    /// `"num/den"`, always with an explicit denominator.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.numer_string(), self.denom_string())
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rational::Small(r) => write!(f, "{r}"),
            Rational::Big(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational {0:?}")]
pub struct ParseRationalError(pub String);

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Rational::from_big(BigRational::new(n, d)))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rational::Small(a), Rational::Small(b)) => {
                let (an, ad, bn, bd) = (*a.numer() as i128, *a.denom() as i128, *b.numer() as i128, *b.denom() as i128);
                (an * bd).cmp(&(bn * ad))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

macro_rules! checked_binop {
    ($trait:ident, $method:ident, $checked:ident, $op:tt) => {
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                if let (Rational::Small(a), Rational::Small(b)) = (self, rhs) {
                    if let Some(r) = a.$checked(b) {
                        return Rational::Small(r);
                    }
                }
                Rational::from_big(self.to_big() $op rhs.to_big())
            }
        }

        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
    };
}

checked_binop!(Add, add, checked_add, +);
checked_binop!(Sub, sub, checked_sub, -);
checked_binop!(Mul, mul, checked_mul, *);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match self {
            Rational::Small(r) if *r.numer() != i64::MIN => Rational::Small(-*r),
            _ => Rational::from_big(-self.to_big()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Rational::from_int(i64::MAX);
        let sq = &big * &big;
        assert!(matches!(sq, Rational::Big(_)));
        let back = &sq * &big.recip();
        assert_eq!(back, big);
        assert!(matches!(back, Rational::Small(_)));
    }

    #[test]
    fn fraction_strings_round_trip() {
        let r = Rational::new(-6, 4);
        assert_eq!(r.to_fraction_string(), "-3/2");
        assert_eq!("-3/2".parse::<Rational>().unwrap(), r);
        assert_eq!("7".parse::<Rational>().unwrap(), Rational::from_int(7));
        assert!("1/0".parse::<Rational>().is_err());
        let huge = "123456789012345678901234567891/2".parse::<Rational>().unwrap();
        assert_eq!(huge.to_fraction_string(), "123456789012345678901234567891/2");
    }

    proptest! {
        #[test]
        fn matches_bigrational(a in -1_000_000i64..1_000_000, b in 1i64..1000, c in -1_000_000i64..1_000_000, d in 1i64..1000) {
            let x = Rational::new(a, b);
            let y = Rational::new(c, d);
            let bx = BigRational::new(a.into(), b.into());
            let by = BigRational::new(c.into(), d.into());
            prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            prop_assert_eq!((&x * &y).to_big(), &bx * &by);
        }
    }
}
