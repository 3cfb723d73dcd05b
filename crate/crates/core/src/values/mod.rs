//! Exact arithmetic in Q(ζ_p)[s]/(s² − p).
//!
//! `s` is a formal square root of `p`; it is never identified with an element
//! of Q(ζ_p). Twists by `(Q̄_ℓ[1](1/2))^n` become [`c_shift`]`(n) = (−1)^n s^{−n}`.

mod cyclo;
mod rational;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use cyclo::CycloElement;
pub use rational::{ParseRationalError, Rational};

use crate::error::{Error, Result};

/// Largest prime accepted by [`check_prime`].
pub const MAX_PRIME: u32 = 13;

/// Accepts odd primes up to [`MAX_PRIME`].
pub fn check_prime(p: u32) -> Result<()> {
    let is_prime = p >= 2 && (2..p).take_while(|k| k * k <= p).all(|k| p % k != 0);
    if !is_prime || p == 2 || p > MAX_PRIME {
        return Err(Error::UnsupportedPrime(p));
    }
    Ok(())
}

/// A square class in F_p^*, written multiplicatively.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i32(x: i32) -> Option<Sign> {
        match x {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn pow(self, n: u64) -> Sign {
        if n % 2 == 0 {
            Sign::Plus
        } else {
            self
        }
    }

    pub fn all() -> [Sign; 2] {
        [Sign::Plus, Sign::Minus]
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Legendre symbol of a nonzero residue.
pub fn legendre(p: u32, x: u32) -> Result<Sign> {
    let x = x % p;
    if x == 0 {
        return Err(Error::ZeroResidue);
    }
    let mut acc: u64 = 1;
    let mut base = x as u64;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    Ok(if acc == 1 { Sign::Plus } else { Sign::Minus })
}

/// An element `a + b·s` with `s² = p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingValue {
    pub a: CycloElement,
    pub b: CycloElement,
}

impl RingValue {
    pub fn new(a: CycloElement, b: CycloElement) -> Self {
        assert_eq!(a.p(), b.p(), "mixing cyclotomic fields");
        RingValue { a, b }
    }

    pub fn zero(p: u32) -> Self {
        RingValue { a: CycloElement::zero(p), b: CycloElement::zero(p) }
    }

    pub fn one(p: u32) -> Self {
        Self::from_rational(p, Rational::one())
    }

    pub fn from_int(p: u32, n: i64) -> Self {
        Self::from_rational(p, Rational::from_int(n))
    }

    pub fn from_rational(p: u32, r: Rational) -> Self {
        RingValue { a: CycloElement::from_rational(p, r), b: CycloElement::zero(p) }
    }

    pub fn from_sign(p: u32, s: Sign) -> Self {
        Self::from_int(p, s.as_i32() as i64)
    }

    /// The formal square root `s`.
    pub fn s(p: u32) -> Self {
        RingValue { a: CycloElement::zero(p), b: CycloElement::one(p) }
    }

    pub fn p(&self) -> u32 {
        self.a.p()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn scale(&self, r: &Rational) -> Self {
        RingValue { a: self.a.scale(r), b: self.b.scale(r) }
    }

    pub fn scale_sign(&self, s: Sign) -> Self {
        match s {
            Sign::Plus => self.clone(),
            Sign::Minus => -self,
        }
    }

    /// Multiplication by ζ^k.
    pub fn mul_zeta(&self, k: i64) -> Self {
        RingValue { a: self.a.mul_zeta(k), b: self.b.mul_zeta(k) }
    }

    /// Conjugation ζ ↦ ζ^{−1}, s ↦ s.
    pub fn conj(&self) -> Self {
        RingValue { a: self.a.conj(), b: self.b.conj() }
    }

    /// Multiplication by s^n for any integer n.
    pub fn mul_s_pow(&self, n: i64) -> Self {
        let p = self.p();
        let half = n.div_euclid(2);
        let pk = p_power(p, half);
        let scaled = self.scale(&pk);
        if n.rem_euclid(2) == 0 {
            scaled
        } else {
            // (a + b s)·s = p b + a s
            RingValue { a: scaled.b.scale(&Rational::from_int(p as i64)), b: scaled.a }
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = RingValue::one(self.p());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// The rational `k` with `self · conj(self) = p^k`, if it is of that form.
    pub fn norm_exponent(&self) -> Option<i64> {
        let n = self * &self.conj();
        if !n.b.is_zero() {
            return None;
        }
        let r = n.a.as_rational()?.clone();
        if r.is_zero() || r.is_negative() {
            return None;
        }
        let p = Rational::from_int(self.p() as i64);
        let (mut k, mut x) = (0i64, r);
        let one = Rational::one();
        while x > one {
            x = &x * &p.recip();
            k += 1;
        }
        while x < one {
            x = &x * &p;
            k -= 1;
        }
        (x == one).then_some(k)
    }

    /// Multiplicative inverse, via the norm from Q(ζ_p)[s] down to Q.
    pub fn inverse(&self) -> Option<Self> {
        let p = self.p();
        // (a + b s)(a − b s) = a² − p b² ∈ Q(ζ_p)
        let bar = RingValue { a: self.a.clone(), b: -&self.b };
        let q = &(&self.a * &self.a) - &self.b.scale(&Rational::from_int(p as i64)).mul_ref(&self.b);
        let qinv = cyclo_inverse(&q)?;
        Some(bar.mul_cyclo(&qinv))
    }

    fn mul_cyclo(&self, c: &CycloElement) -> Self {
        RingValue { a: &self.a * c, b: &self.b * c }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

trait MulRef {
    fn mul_ref(&self, other: &Self) -> Self;
}

impl MulRef for CycloElement {
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
}

fn galois(c: &CycloElement, k: u32) -> CycloElement {
    let p = c.p();
    let mut out = CycloElement::zero(p);
    for (i, r) in c.coeffs().iter().enumerate() {
        if !r.is_zero() {
            out = &out + &CycloElement::zeta_pow(p, i as i64 * k as i64).scale(r);
        }
    }
    out
}

fn cyclo_inverse(c: &CycloElement) -> Option<CycloElement> {
    if c.is_zero() {
        return None;
    }
    let p = c.p();
    let mut others = CycloElement::one(p);
    for k in 2..p {
        others = &others * &galois(c, k);
    }
    let norm = (c * &others).as_rational()?.clone();
    Some(others.scale(&norm.recip()))
}

fn p_power(p: u32, k: i64) -> Rational {
    let base = Rational::from_int(p as i64);
    let mut acc = Rational::one();
    for _ in 0..k.unsigned_abs() {
        acc = &acc * &base;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

impl Add for &RingValue {
    type Output = RingValue;
    fn add(self, rhs: &RingValue) -> RingValue {
        RingValue { a: &self.a + &rhs.a, b: &self.b + &rhs.b }
    }
}

impl Sub for &RingValue {
    type Output = RingValue;
    fn sub(self, rhs: &RingValue) -> RingValue {
        RingValue { a: &self.a - &rhs.a, b: &self.b - &rhs.b }
    }
}

impl Neg for &RingValue {
    type Output = RingValue;
    fn neg(self) -> RingValue {
        RingValue { a: -&self.a, b: -&self.b }
    }
}

impl Mul for &RingValue {
    type Output = RingValue;
    fn mul(self, rhs: &RingValue) -> RingValue {
        let p = self.p();
        let (sb, rb) = (self.b.is_zero(), rhs.b.is_zero());
        let (sa, ra) = (self.a.is_zero(), rhs.a.is_zero());
        let mut a = CycloElement::zero(p);
        let mut b = CycloElement::zero(p);
        if !sa && !ra {
            a = &self.a * &rhs.a;
        }
        if !sb && !rb {
            a = &a + &(&self.b * &rhs.b).scale(&Rational::from_int(p as i64));
        }
        if !sa && !rb {
            b = &self.a * &rhs.b;
        }
        if !sb && !ra {
            b = &b + &(&self.b * &rhs.a);
        }
        RingValue { a, b }
    }
}

macro_rules! owned_ops {
    ($($trait:ident $method:ident),*) => {$(
        impl $trait for RingValue {
            type Output = RingValue;
            fn $method(self, rhs: RingValue) -> RingValue {
                (&self).$method(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for RingValue {
    type Output = RingValue;
    fn neg(self) -> RingValue {
        -&self
    }
}

impl fmt::Display for RingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "({})s", self.b),
            (false, false) => write!(f, "{} + ({})s", self.a, self.b),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RingValueRepr {
    p: u32,
    a: Vec<String>,
    b: Vec<String>,
}

impl Serialize for RingValue {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let strs = |c: &CycloElement| c.coeffs().iter().map(Rational::to_fraction_string).collect();
        RingValueRepr { p: self.p(), a: strs(&self.a), b: strs(&self.b) }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for RingValue {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = RingValueRepr::deserialize(de)?;
        check_prime(repr.p).map_err(D::Error::custom)?;
        let parse = |v: Vec<String>| -> std::result::Result<CycloElement, D::Error> {
            let coeffs = v
                .iter()
                .map(|s| s.parse::<Rational>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(D::Error::custom)?;
            CycloElement::from_coeffs(repr.p, coeffs).ok_or_else(|| D::Error::custom("coefficient count must be p-1"))
        };
        Ok(RingValue { a: parse(repr.a)?, b: parse(repr.b)? })
    }
}

/// ψ(x) = ζ^x.
pub fn psi(p: u32, x: i64) -> RingValue {
    RingValue { a: CycloElement::zeta_pow(p, x), b: CycloElement::zero(p) }
}

/// g = Σ_x ψ(x²).
pub fn gauss_sum(p: u32) -> RingValue {
    let mut full = vec![0i64; p as usize];
    for x in 0..p as u64 {
        full[(x * x % p as u64) as usize] += 1;
    }
    let mut acc = CycloElement::zero(p);
    for (k, n) in full.into_iter().enumerate() {
        if n != 0 {
            acc = &acc + &CycloElement::zeta_pow(p, k as i64).scale(&Rational::from_int(n));
        }
    }
    RingValue { a: acc, b: CycloElement::zero(p) }
}

/// (−1)^n s^{−n}.
pub fn c_shift(p: u32, n: i64) -> RingValue {
    let v = RingValue::one(p).mul_s_pow(-n);
    if n.rem_euclid(2) == 1 {
        -v
    } else {
        v
    }
}

/// (g · c_shift(1))^d.
pub fn e_value(p: u32, d: u32) -> RingValue {
    (&gauss_sum(p) * &c_shift(p, 1)).pow(d)
}
