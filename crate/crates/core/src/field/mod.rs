//! Exact scalars: prime fields, the rationals, and rational functions in `t`.

mod ratfunc;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
#[cfg(test)]
use num_traits::Signed;
use rand::Rng;

pub use ratfunc::RatFunc;

use crate::error::{Error, Result};

/// The base field of a computation.
///
/// Rational functions are always in the single variable `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldSpec {
    Finite(u32),
    Rationals,
    RationalFunctions,
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn finite(p: u32) -> Result<Self> {
        if p >= 1 << 31 || !is_prime(p as u64) {
            return Err(Error::Parse(format!("{p} is not a prime below 2^31")));
        }
        Ok(FieldSpec::Finite(p))
    }

    pub fn characteristic(self) -> u32 {
        match self {
            FieldSpec::Finite(p) => p,
            _ => 0,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, FieldSpec::Finite(_))
    }

    /// Number of elements, if finite.
    pub fn order(self) -> Option<u64> {
        match self {
            FieldSpec::Finite(p) => Some(p as u64),
            _ => None,
        }
    }

    pub fn zero(self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(self, n: i64) -> Scalar {
        match self {
            FieldSpec::Finite(p) => Scalar::Fp {
                v: n.rem_euclid(p as i64) as u32,
                p,
            },
            FieldSpec::Rationals => Scalar::Q(BigRational::from_integer(n.into())),
            FieldSpec::RationalFunctions => Scalar::Qt(RatFunc::constant(BigRational::from_integer(n.into()))),
        }
    }

    /// Image of a rational number; fails in GF(p) when p divides the denominator.
    pub fn from_rational(self, q: &BigRational) -> Result<Scalar> {
        match self {
            FieldSpec::Finite(p) => {
                let pb = BigInt::from(p);
                let num = q.numer().mod_floor(&pb).to_u32().unwrap();
                let den = q.denom().mod_floor(&pb).to_u32().unwrap();
                if den == 0 {
                    return Err(Error::Parse(format!("{q} has no image in GF({p})")));
                }
                let d = Scalar::Fp { v: den, p };
                Ok(&Scalar::Fp { v: num, p } * &d.inv().unwrap())
            }
            FieldSpec::Rationals => Ok(Scalar::Q(q.clone())),
            FieldSpec::RationalFunctions => Ok(Scalar::Qt(RatFunc::constant(q.clone()))),
        }
    }

    /// The generator `t` of the rational function field.
    pub fn t(self) -> Result<Scalar> {
        match self {
            FieldSpec::RationalFunctions => Ok(Scalar::Qt(RatFunc::t())),
            f => Err(Error::Unsupported { field: f, op: "the variable t" }),
        }
    }

    /// All elements in canonical order `0, 1, …, p−1`.
    pub fn elements(self) -> Result<Vec<Scalar>> {
        match self {
            FieldSpec::Finite(p) => Ok((0..p).map(|v| Scalar::Fp { v, p }).collect()),
            f => Err(Error::Unsupported { field: f, op: "element enumeration" }),
        }
    }

    /// Uniform over GF(p); over ℚ, numerator and denominator uniform in [−9, 9]
    /// with nonzero denominator.
    pub fn random<R: Rng + ?Sized>(self, rng: &mut R) -> Result<Scalar> {
        match self {
            FieldSpec::Finite(p) => Ok(Scalar::Fp { v: rng.gen_range(0..p), p }),
            FieldSpec::Rationals => {
                let num: i64 = rng.gen_range(-9..=9);
                let mut den: i64 = 0;
                while den == 0 {
                    den = rng.gen_range(-9..=9);
                }
                Ok(Scalar::Q(BigRational::new(num.into(), den.into())))
            }
            f => Err(Error::Unsupported { field: f, op: "random sampling" }),
        }
    }

    pub fn parse_scalar(self, s: &str) -> Result<Scalar> {
        let s = s.trim();
        match self {
            FieldSpec::Finite(_) | FieldSpec::Rationals => {
                let q = parse_rational(s)?;
                self.from_rational(&q)
            }
            FieldSpec::RationalFunctions => Ok(Scalar::Qt(s.parse()?)),
        }
    }
}

pub(crate) fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Finite(p) => write!(f, "gf:{p}"),
            FieldSpec::Rationals => f.write_str("qq"),
            FieldSpec::RationalFunctions => f.write_str("qq_t"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "qq" => Ok(FieldSpec::Rationals),
            "qq_t" => Ok(FieldSpec::RationalFunctions),
            other => {
                let p = other
                    .strip_prefix("gf:")
                    .and_then(|p| p.parse::<u32>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown field {other:?}")))?;
                FieldSpec::finite(p)
            }
        }
    }
}

/// A field element in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Fp { v: u32, p: u32 },
    Q(BigRational),
    Qt(RatFunc),
}

impl Scalar {
    pub fn field(&self) -> FieldSpec {
        match self {
            Scalar::Fp { p, .. } => FieldSpec::Finite(*p),
            Scalar::Q(_) => FieldSpec::Rationals,
            Scalar::Qt(_) => FieldSpec::RationalFunctions,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Fp { v, .. } => *v == 0,
            Scalar::Q(q) => q.is_zero(),
            Scalar::Qt(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Fp { v, .. } => *v == 1,
            Scalar::Q(q) => q.is_one(),
            Scalar::Qt(r) => r.is_one(),
        }
    }

    pub fn inv(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Scalar::Fp { v, p } => Scalar::Fp { v: pow_mod(*v, p - 2, *p), p: *p },
            Scalar::Q(q) => Scalar::Q(q.recip()),
            Scalar::Qt(r) => Scalar::Qt(r.recip()),
        })
    }

    pub fn pow(&self, mut e: u32) -> Scalar {
        let mut base = self.clone();
        let mut acc = self.field().one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Residue of a prime-field element.
    pub fn residue(&self) -> Option<u32> {
        match self {
            Scalar::Fp { v, .. } => Some(*v),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Q(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_ratfunc(&self) -> Option<&RatFunc> {
        match self {
            Scalar::Qt(r) => Some(r),
            _ => None,
        }
    }
}

fn pow_mod(b: u32, mut e: u32, p: u32) -> u32 {
    let p = p as u64;
    let mut acc = 1u64;
    let mut b = b as u64 % p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc as u32
}

fn mismatch(a: &Scalar, b: &Scalar) -> ! {
    panic!("scalar field mismatch: {} vs {}", a.field(), b.field())
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) if p == q => Scalar::Fp {
                v: ((*a as u64 + *b as u64) % *p as u64) as u32,
                p: *p,
            },
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::Qt(a), Scalar::Qt(b)) => Scalar::Qt(a + b),
            _ => mismatch(self, rhs),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) if p == q => Scalar::Fp {
                v: ((*a as u64 + (*p - *b) as u64) % *p as u64) as u32,
                p: *p,
            },
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a - b),
            (Scalar::Qt(a), Scalar::Qt(b)) => Scalar::Qt(a - b),
            _ => mismatch(self, rhs),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) if p == q => Scalar::Fp {
                v: ((*a as u64 * *b as u64) % *p as u64) as u32,
                p: *p,
            },
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::Qt(a), Scalar::Qt(b)) => Scalar::Qt(a * b),
            _ => mismatch(self, rhs),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Fp { v, p } => Scalar::Fp { v: (p - v) % p, p: *p },
            Scalar::Q(a) => Scalar::Q(-a),
            Scalar::Qt(a) => Scalar::Qt(-a),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

/// Canonical order: residues for GF(p), numeric order for ℚ, and a fixed
/// structural order on canonical forms for ℚ(t).
impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) => (p, a).cmp(&(q, b)),
            (Scalar::Q(a), Scalar::Q(b)) => a.cmp(b),
            (Scalar::Qt(a), Scalar::Qt(b)) => a.cmp(b),
            _ => self.field().cmp(&other.field()),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Fp { v, .. } => write!(f, "{v}"),
            Scalar::Q(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Scalar::Qt(r) => write!(f, "{r}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf_arithmetic_wraps() {
        let f = FieldSpec::Finite(7);
        let a = f.from_i64(5);
        let b = f.from_i64(4);
        assert_eq!(&a + &b, f.from_i64(2));
        assert_eq!(&a - &b, f.one());
        assert_eq!(&b - &a, f.from_i64(6));
        assert_eq!(&a * &b, f.from_i64(6));
        assert_eq!(&a * &a.inv().unwrap(), f.one());
        assert_eq!(-&f.zero(), f.zero());
    }

    #[test]
    fn parse_and_print_round_trip() {
        for (field, s) in [
            (FieldSpec::Rationals, "-2/3"),
            (FieldSpec::Rationals, "5"),
            (FieldSpec::Finite(5), "3"),
            (FieldSpec::RationalFunctions, "(1)/(t+1)"),
            (FieldSpec::RationalFunctions, "t^2+1"),
            (FieldSpec::RationalFunctions, "(2*t-1)/(3*t^2)"),
        ] {
            let x = field.parse_scalar(s).unwrap();
            assert_eq!(x.to_string(), s);
            assert_eq!(field.parse_scalar(&x.to_string()).unwrap(), x);
        }
    }

    #[test]
    fn gf_parses_fractions_and_negatives() {
        let f = FieldSpec::Finite(5);
        assert_eq!(f.parse_scalar("-1").unwrap(), f.from_i64(4));
        assert_eq!(f.parse_scalar("1/2").unwrap(), f.from_i64(3));
        assert!(f.parse_scalar("1/5").is_err());
    }

    #[test]
    fn field_spec_parsing() {
        assert_eq!("gf:5".parse::<FieldSpec>().unwrap(), FieldSpec::Finite(5));
        assert_eq!("qq".parse::<FieldSpec>().unwrap(), FieldSpec::Rationals);
        assert_eq!("qq_t".parse::<FieldSpec>().unwrap(), FieldSpec::RationalFunctions);
        assert!("gf:4".parse::<FieldSpec>().is_err());
        assert!("gf:2147483659".parse::<FieldSpec>().is_err());
        assert_eq!(FieldSpec::Finite(5).characteristic(), 5);
        assert_eq!(FieldSpec::Rationals.characteristic(), 0);
    }

    #[test]
    fn rational_sampling_is_bounded() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let Scalar::Q(q) = FieldSpec::Rationals.random(&mut rng).unwrap() else {
                unreachable!()
            };
            assert!(q.numer().abs() <= 9.into() && q.denom().abs() <= 9.into());
        }
    }
}
