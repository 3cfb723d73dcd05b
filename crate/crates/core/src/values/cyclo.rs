//! Elements of Q(ζ_p) in the power basis 1, ζ, …, ζ^{p−2}.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycloElement {
    p: u32,
    coeffs: Vec<Rational>,
}

impl CycloElement {
    pub fn zero(p: u32) -> Self {
        CycloElement { p, coeffs: vec![Rational::zero(); (p - 1) as usize] }
    }

    pub fn one(p: u32) -> Self {
        Self::from_rational(p, Rational::one())
    }

    pub fn from_rational(p: u32, r: Rational) -> Self {
        let mut z = Self::zero(p);
        z.coeffs[0] = r;
        z
    }

    /// ζ^k for any integer k.
    pub fn zeta_pow(p: u32, k: i64) -> Self {
        let mut full = vec![Rational::zero(); p as usize];
        full[k.rem_euclid(p as i64) as usize] = Rational::one();
        Self::reduce_full(p, full)
    }

    /// Builds from exactly `p − 1` coefficients.
    pub fn from_coeffs(p: u32, coeffs: Vec<Rational>) -> Option<Self> {
        (coeffs.len() == (p - 1) as usize).then_some(CycloElement { p, coeffs })
    }

    /// Reduces a length-`p` coefficient vector (basis 1..ζ^{p−1}) modulo Φ_p.
    fn reduce_full(p: u32, mut full: Vec<Rational>) -> Self {
        let top = full.pop().expect("p > 1");
        if !top.is_zero() {
            for c in full.iter_mut() {
                *c = &*c - &top;
            }
        }
        CycloElement { p, coeffs: full }
    }

    fn to_full(&self) -> Vec<Rational> {
        let mut full = self.coeffs.clone();
        full.push(Rational::zero());
        full
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Rational::is_zero)
    }

    /// The constant term when the element is rational.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.coeffs[1..].iter().all(Rational::is_zero).then(|| &self.coeffs[0])
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_one() {
            return self.clone();
        }
        CycloElement { p: self.p, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    /// Multiplication by ζ^k.
    pub fn mul_zeta(&self, k: i64) -> Self {
        let p = self.p as usize;
        let k = k.rem_euclid(p as i64) as usize;
        if k == 0 {
            return self.clone();
        }
        let mut full = vec![Rational::zero(); p];
        for (i, c) in self.coeffs.iter().enumerate() {
            full[(i + k) % p] = c.clone();
        }
        Self::reduce_full(self.p, full)
    }

    /// Galois conjugation ζ ↦ ζ^{−1}.
    pub fn conj(&self) -> Self {
        let p = self.p as usize;
        let mut full = vec![Rational::zero(); p];
        for (i, c) in self.to_full().into_iter().enumerate() {
            full[(p - i) % p] = c;
        }
        Self::reduce_full(self.p, full)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixing cyclotomic fields");
    }
}

impl Add for &CycloElement {
    type Output = CycloElement;
    fn add(self, rhs: &CycloElement) -> CycloElement {
        self.check(rhs);
        CycloElement { p: self.p, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CycloElement {
    type Output = CycloElement;
    fn sub(self, rhs: &CycloElement) -> CycloElement {
        self.check(rhs);
        CycloElement { p: self.p, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &CycloElement {
    type Output = CycloElement;
    fn neg(self) -> CycloElement {
        CycloElement { p: self.p, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &CycloElement {
    type Output = CycloElement;
    fn mul(self, rhs: &CycloElement) -> CycloElement {
        self.check(rhs);
        let p = self.p as usize;
        if let Some(r) = self.as_rational() {
            return rhs.scale(r);
        }
        if let Some(r) = rhs.as_rational() {
            return self.scale(r);
        }
        let mut full = vec![Rational::zero(); p];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let k = (i + j) % p;
                full[k] = &full[k] + &(a * b);
            }
        }
        CycloElement::reduce_full(self.p, full)
    }
}

macro_rules! owned_ops {
    ($($trait:ident $method:ident),*) => {$(
        impl $trait for CycloElement {
            type Output = CycloElement;
            fn $method(self, rhs: CycloElement) -> CycloElement {
                (&self).$method(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for CycloElement {
    type Output = CycloElement;
    fn neg(self) -> CycloElement {
        -&self
    }
}

impl fmt::Display for CycloElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            terms.push(match i {
                0 => format!("{c}"),
                1 => format!("{c}ζ"),
                _ => format!("{c}ζ^{i}"),
            });
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_power_wraps_and_reduces() {
        let p = 3;
        assert_eq!(CycloElement::zeta_pow(p, 3), CycloElement::one(p));
        let z2 = CycloElement::zeta_pow(p, 2);
        assert_eq!(z2.coeffs(), &[Rational::from_int(-1), Rational::from_int(-1)]);
        assert_eq!(&CycloElement::zeta_pow(p, 1) * &CycloElement::zeta_pow(p, 1), z2);
    }

    #[test]
    fn conj_inverts_zeta() {
        for p in [3u32, 5, 7] {
            for k in 0..p as i64 {
                let z = CycloElement::zeta_pow(p, k);
                assert_eq!(z.conj(), CycloElement::zeta_pow(p, -k));
                assert_eq!(z.mul_zeta(2), CycloElement::zeta_pow(p, k + 2));
            }
        }
    }
}
