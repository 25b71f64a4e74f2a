//! Dense univariate polynomials over a [`FieldSpec`].

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};

/// Coefficients lowest degree first; the zero polynomial has none.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UniPoly {
    field: FieldSpec,
    coeffs: Vec<Scalar>,
}

impl UniPoly {
    pub fn new(field: FieldSpec, mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        debug_assert!(coeffs.iter().all(|c| c.field() == field));
        UniPoly { field, coeffs }
    }

    pub fn zero(field: FieldSpec) -> Self {
        UniPoly { field, coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        UniPoly::new(c.field(), vec![c])
    }

    /// The indeterminate `x`.
    pub fn x(field: FieldSpec) -> Self {
        UniPoly::new(field, vec![field.zero(), field.one()])
    }

    pub fn from_ints(field: FieldSpec, coeffs: &[i64]) -> Self {
        UniPoly::new(field, coeffs.iter().map(|&c| field.from_i64(c)).collect())
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, d: usize) -> Scalar {
        self.coeffs.get(d).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(Scalar::is_one)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(self.field.zero(), |acc, c| &(&acc * x) + c)
    }

    pub fn add(&self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new(self.field, (0..n).map(|i| &self.coeff(i) + &rhs.coeff(i)).collect())
    }

    pub fn sub(&self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new(self.field, (0..n).map(|i| &self.coeff(i) - &rhs.coeff(i)).collect())
    }

    pub fn mul(&self, rhs: &UniPoly) -> UniPoly {
        if self.is_zero() || rhs.is_zero() {
            return UniPoly::zero(self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        UniPoly::new(self.field, out)
    }

    pub fn scale(&self, c: &Scalar) -> UniPoly {
        UniPoly::new(self.field, self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Distinct rational roots, ascending. Only defined over ℚ.
    pub fn rational_roots(&self) -> Result<Vec<BigRational>> {
        if self.field != FieldSpec::Rationals {
            return Err(Error::Unsupported { field: self.field, op: "rational root search" });
        }
        if self.is_zero() {
            return Err(Error::Precondition("zero polynomial has every root".into()));
        }
        let mut ints = primitive_integer_form(&self.coeffs);
        let mut roots = Vec::new();
        if ints[0].is_zero() {
            roots.push(BigRational::zero());
            let shift = ints.iter().take_while(|c| c.is_zero()).count();
            ints.drain(..shift);
        }
        if ints.len() > 1 {
            let num_divs = divisors(&ints[0]);
            let den_divs = divisors(ints.last().unwrap());
            for p in &num_divs {
                for q in &den_divs {
                    if !p.gcd(q).is_one() {
                        continue;
                    }
                    for cand in [BigRational::new(p.clone(), q.clone()), BigRational::new(-p, q.clone())] {
                        if eval_int(&ints, &cand).is_zero() {
                            roots.push(cand);
                        }
                    }
                }
            }
        }
        roots.sort();
        roots.dedup();
        Ok(roots)
    }
}

fn eval_int(c: &[BigInt], x: &BigRational) -> BigRational {
    c.iter()
        .rev()
        .fold(BigRational::zero(), |acc, a| acc * x + BigRational::from_integer(a.clone()))
}

/// Integer coefficients with content 1, same roots.
fn primitive_integer_form(coeffs: &[Scalar]) -> Vec<BigInt> {
    let qs: Vec<&BigRational> = coeffs.iter().map(|c| c.as_rational().unwrap()).collect();
    let l = qs.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = qs.iter().map(|q| (*q * &l).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    ints.into_iter().map(|c| c / &g).collect()
}

/// Positive divisors of a nonzero integer.
fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut divs = vec![BigInt::one()];
    let mut factors = factorize(&n.abs());
    factors.sort();
    let mut i = 0;
    while i < factors.len() {
        let p = factors[i].clone();
        let mut e = 0;
        while i < factors.len() && factors[i] == p {
            e += 1;
            i += 1;
        }
        let base = divs.clone();
        let mut pk = BigInt::one();
        for _ in 0..e {
            pk *= &p;
            divs.extend(base.iter().map(|d| d * &pk));
        }
    }
    divs
}

const SMALL_PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn is_probable_prime(n: &BigInt) -> bool {
    let two = BigInt::from(2);
    if *n < two {
        return false;
    }
    for p in SMALL_PRIMES {
        let p = BigInt::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let nm1 = n - 1u32;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    'witness: for a in SMALL_PRIMES {
        let mut x = BigInt::from(a).modpow(&d, n);
        if x.is_one() || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: &BigInt) -> BigInt {
    let mut c = BigInt::one();
    loop {
        let f = |x: &BigInt| (x * x + &c) % n;
        let (mut x, mut y, mut d) = (BigInt::from(2), BigInt::from(2), BigInt::one());
        while d.is_one() {
            x = f(&x);
            y = f(&f(&y));
            d = (&x - &y).abs().gcd(n);
        }
        if d != *n {
            return d;
        }
        c += 1;
    }
}

/// Prime factors with multiplicity.
fn factorize(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut m = n.clone();
    if m.is_zero() {
        return out;
    }
    let mut d = 2u64;
    while d < 1000 {
        let db = BigInt::from(d);
        while (&m % &db).is_zero() {
            out.push(db.clone());
            m /= &db;
        }
        d += 1;
    }
    let mut stack = vec![m];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if m.to_u64().is_some_and(|v| v < 1_000_000) || is_probable_prime(&m) {
            out.push(m);
            continue;
        }
        let f = pollard_rho(&m);
        stack.push(&m / &f);
        stack.push(f);
    }
    out
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (d, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match (d, c.is_one()) {
                (0, _) => write!(f, "{c}")?,
                (1, true) => f.write_str("x")?,
                (1, false) => write!(f, "{c}*x")?,
                (_, true) => write!(f, "x^{d}")?,
                (_, false) => write!(f, "{c}*x^{d}")?,
            }
        }
        Ok(())
    }
}
