use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::parse_rational;
use crate::error::{Error, Result};

type Coeffs = Vec<BigRational>;

/// Element of ℚ(t): `num/den` with coprime numerator and monic denominator.
///
/// Coefficients are stored lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatFunc {
    den: Coeffs,
    num: Coeffs,
}

fn trim(mut a: Coeffs) -> Coeffs {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn padd(a: &[BigRational], b: &[BigRational]) -> Coeffs {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += c;
    }
    trim(out)
}

fn pneg(a: &[BigRational]) -> Coeffs {
    a.iter().map(|c| -c).collect()
}

fn pmul(a: &[BigRational], b: &[BigRational]) -> Coeffs {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn pdivrem(a: &[BigRational], b: &[BigRational]) -> (Coeffs, Coeffs) {
    let db = b.len() - 1;
    let lead = b[db].clone();
    let mut rem = a.to_vec();
    if rem.len() < b.len() {
        return (Vec::new(), rem);
    }
    let mut quot = vec![BigRational::zero(); rem.len() - db];
    for k in (0..quot.len()).rev() {
        let c = &rem[k + db] / &lead;
        if !c.is_zero() {
            for (j, y) in b.iter().enumerate() {
                rem[k + j] -= &c * y;
            }
        }
        quot[k] = c;
    }
    rem.truncate(db);
    (trim(quot), trim(rem))
}

fn monic(a: Coeffs) -> Coeffs {
    match a.last() {
        Some(l) if !l.is_one() => {
            let l = l.clone();
            a.into_iter().map(|c| c / &l).collect()
        }
        _ => a,
    }
}

fn pgcd(a: &[BigRational], b: &[BigRational]) -> Coeffs {
    let (mut x, mut y) = (a.to_vec(), b.to_vec());
    while !y.is_empty() {
        let (_, r) = pdivrem(&x, &y);
        x = y;
        y = r;
    }
    monic(x)
}

fn peval(a: &[BigRational], x: &BigRational) -> BigRational {
    a.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

impl RatFunc {
    fn from_parts(num: Coeffs, den: Coeffs) -> Self {
        let num = trim(num);
        let den = trim(den);
        assert!(!den.is_empty(), "zero denominator");
        if num.is_empty() {
            return RatFunc { num, den: vec![BigRational::one()] };
        }
        let g = pgcd(&num, &den);
        let (mut num, _) = pdivrem(&num, &g);
        let (den, _) = pdivrem(&den, &g);
        let lead = den.last().unwrap().clone();
        for c in &mut num {
            *c /= &lead;
        }
        RatFunc { num, den: monic(den) }
    }

    pub fn constant(c: BigRational) -> Self {
        RatFunc::from_parts(vec![c], vec![BigRational::one()])
    }

    pub fn t() -> Self {
        RatFunc::from_parts(vec![BigRational::zero(), BigRational::one()], vec![BigRational::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.den.len() == 1 && self.num.len() == 1 && self.num[0].is_one()
    }

    pub fn recip(&self) -> Self {
        RatFunc::from_parts(self.den.clone(), self.num.clone())
    }

    /// Value at `t = x`, or `None` at a pole.
    pub fn eval(&self, x: &BigRational) -> Option<BigRational> {
        let d = peval(&self.den, x);
        if d.is_zero() {
            None
        } else {
            Some(peval(&self.num, x) / d)
        }
    }

    /// The value if this is a constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        match (self.num.len(), self.den.len()) {
            (0, _) => Some(BigRational::zero()),
            (1, 1) => Some(self.num[0].clone()),
            _ => None,
        }
    }

    /// Order of vanishing at `t = 0`, negative at a pole; `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        let low = |p: &Coeffs| p.iter().position(|c| !c.is_zero());
        Some(low(&self.num)? as i64 - low(&self.den).unwrap_or(0) as i64)
    }

    /// Substitute `t ↦ tᵏ`.
    pub fn compose_power(&self, k: usize) -> Self {
        assert!(k >= 1, "exponent must be positive");
        let spread = |p: &Coeffs| -> Coeffs {
            if p.is_empty() {
                return Vec::new();
            }
            let mut out = vec![BigRational::zero(); (p.len() - 1) * k + 1];
            for (d, c) in p.iter().enumerate() {
                out[d * k] = c.clone();
            }
            out
        };
        RatFunc::from_parts(spread(&self.num), spread(&self.den))
    }

    /// Numerator and denominator scaled to coprime integer coefficients,
    /// denominator with positive leading coefficient.
    pub fn integer_parts(&self) -> (Vec<BigInt>, Vec<BigInt>) {
        let l = self
            .num
            .iter()
            .chain(&self.den)
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let scale = |p: &Coeffs| -> Vec<BigInt> { p.iter().map(|c| (c * &l).to_integer()).collect() };
        let (mut n, mut d) = (scale(&self.num), scale(&self.den));
        let g = n.iter().chain(&d).fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if !g.is_zero() && !g.is_one() {
            n.iter_mut().for_each(|c| *c /= &g);
            d.iter_mut().for_each(|c| *c /= &g);
        }
        (n, d)
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        if self.den == rhs.den {
            return RatFunc::from_parts(padd(&self.num, &rhs.num), self.den.clone());
        }
        RatFunc::from_parts(
            padd(&pmul(&self.num, &rhs.den), &pmul(&rhs.num, &self.den)),
            pmul(&self.den, &rhs.den),
        )
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        RatFunc::from_parts(pmul(&self.num, &rhs.num), pmul(&self.den, &rhs.den))
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: pneg(&self.num), den: self.den.clone() }
    }
}

fn write_poly(f: &mut fmt::Formatter<'_>, p: &[BigInt]) -> fmt::Result {
    let mut first = true;
    for (d, c) in p.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        if c.is_negative() {
            f.write_str("-")?;
        } else if !first {
            f.write_str("+")?;
        }
        first = false;
        let a = c.abs();
        match (d, a.is_one()) {
            (0, _) => write!(f, "{a}")?,
            (_, false) => write!(f, "{a}*")?,
            _ => {}
        }
        match d {
            0 => {}
            1 => f.write_str("t")?,
            _ => write!(f, "t^{d}")?,
        }
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.integer_parts();
        if d.len() == 1 && d[0].is_one() {
            return write_poly(f, &n);
        }
        f.write_str("(")?;
        write_poly(f, &n)?;
        f.write_str(")/(")?;
        write_poly(f, &d)?;
        f.write_str(")")
    }
}

fn parse_poly(s: &str) -> Result<Coeffs> {
    let bad = || Error::Parse(format!("bad polynomial {s:?}"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad());
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = compact.as_bytes();
    for i in 1..bytes.len() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'^' {
            terms.push(&compact[start..i]);
            start = i;
        }
    }
    terms.push(&compact[start..]);
    let mut out: Coeffs = Vec::new();
    for term in terms {
        let (neg, body) = match term.as_bytes().first() {
            Some(b'-') => (true, &term[1..]),
            Some(b'+') => (false, &term[1..]),
            _ => (false, term),
        };
        let (coef, deg) = match body.find('t') {
            None => (parse_rational(body)?, 0usize),
            Some(pos) => {
                let c = body[..pos].trim_end_matches('*');
                let c = if c.is_empty() { BigRational::one() } else { parse_rational(c)? };
                let rest = &body[pos + 1..];
                let d = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^').and_then(|e| e.parse().ok()).ok_or_else(bad)?
                };
                (c, d)
            }
        };
        if out.len() <= deg {
            out.resize(deg + 1, BigRational::zero());
        }
        out[deg] += if neg { -coef } else { coef };
    }
    Ok(trim(out))
}

impl FromStr for RatFunc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad rational function {s:?}"));
        if let Some(rest) = s.strip_prefix('(') {
            let mut depth = 1;
            let close = rest
                .char_indices()
                .find(|&(_, c)| {
                    match c {
                        '(' => depth += 1,
                        ')' => depth -= 1,
                        _ => {}
                    }
                    depth == 0
                })
                .map(|(i, _)| i)
                .ok_or_else(bad)?;
            let num = parse_poly(&rest[..close])?;
            let tail = rest[close + 1..].trim();
            let den = if tail.is_empty() {
                vec![BigRational::one()]
            } else {
                let d = tail.strip_prefix('/').ok_or_else(bad)?.trim();
                let d = d.strip_prefix('(').and_then(|d| d.strip_suffix(')')).unwrap_or(d);
                parse_poly(d)?
            };
            if den.is_empty() {
                return Err(bad());
            }
            return Ok(RatFunc::from_parts(num, den));
        }
        if !s.contains('t') {
            return Ok(RatFunc::constant(parse_rational(s)?));
        }
        Ok(RatFunc::from_parts(parse_poly(s)?, vec![BigRational::one()]))
    }
}
