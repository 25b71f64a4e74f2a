//! Polynomials in the block coordinates of `gl_n`, `o_{2n+1}`, `sp_{2n}` and
//! `o_{2n}`.
//!
//! Ambient layouts (0-based blocks):
//! - `gl_n`: `P`.
//! - `sp_{2n}`, `o_{2n}`: `[[P, Q], [R, −Pᵀ]]`, with `Q, R` symmetric resp. skew.
//! - `o_{2n+1}`: `[[P, v, Q], [−wᵀ, 0, −vᵀ], [R, w, −Pᵀ]]`, `Q, R` skew.
//!
//! Symmetric blocks keep only `k ≤ ℓ` variables, skew blocks only `k < ℓ`.
//! Variables are ordered by family `p < q < r < v < w`, then by indices;
//! monomials are compared degree-reverse-lexicographically.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::chains::{ChainSpec, GroupKind, GroupType};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    P,
    Q,
    R,
    V,
    W,
}

impl Family {
    fn letter(self) -> char {
        match self {
            Family::P => 'p',
            Family::Q => 'q',
            Family::R => 'r',
            Family::V => 'v',
            Family::W => 'w',
        }
    }

    fn from_letter(c: char) -> Option<Family> {
        Some(match c {
            'p' => Family::P,
            'q' => Family::Q,
            'r' => Family::R,
            'v' => Family::V,
            'w' => Family::W,
            _ => return None,
        })
    }

    fn is_vector(self) -> bool {
        matches!(self, Family::V | Family::W)
    }
}

/// A coordinate function; indices are 1-based and `j = 0` for `v`, `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoordVar {
    pub family: Family,
    pub i: u32,
    pub j: u32,
}

impl CoordVar {
    pub fn p(i: u32, j: u32) -> Self {
        CoordVar { family: Family::P, i, j }
    }
    pub fn q(i: u32, j: u32) -> Self {
        CoordVar { family: Family::Q, i, j }
    }
    pub fn r(i: u32, j: u32) -> Self {
        CoordVar { family: Family::R, i, j }
    }
    pub fn v(i: u32) -> Self {
        CoordVar { family: Family::V, i, j: 0 }
    }
    pub fn w(i: u32) -> Self {
        CoordVar { family: Family::W, i, j: 0 }
    }

    /// Whether this is a canonical variable of the context.
    pub fn check(&self, ctx: GroupType) -> Result<()> {
        let n = ctx.n as u32;
        let bad = || Error::Precondition(format!("{self} is not a coordinate of {}{}", ctx.kind, ctx.n));
        let in_range = |k: u32| (1..=n).contains(&k);
        let ok = match (ctx.kind, self.family) {
            (_, Family::P) => in_range(self.i) && in_range(self.j),
            (GroupKind::A, _) => false,
            (GroupKind::C, Family::Q | Family::R) => in_range(self.i) && in_range(self.j) && self.i <= self.j,
            (_, Family::Q | Family::R) => in_range(self.i) && in_range(self.j) && self.i < self.j,
            (GroupKind::B, Family::V | Family::W) => in_range(self.i) && self.j == 0,
            _ => false,
        };
        if ok { Ok(()) } else { Err(bad()) }
    }

    /// Position of this coordinate in the ambient matrix.
    fn location(&self, ctx: GroupType) -> (usize, usize) {
        let n = ctx.n;
        let off = if ctx.kind == GroupKind::B { n + 1 } else { n };
        let (i, j) = (self.i as usize - 1, (self.j as usize).saturating_sub(1));
        match self.family {
            Family::P => (i, j),
            Family::Q => (i, off + j),
            Family::R => (off + i, j),
            Family::V => (i, n),
            Family::W => (off + i, n),
        }
    }
}

impl fmt::Display for CoordVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.family.is_vector() {
            write!(f, "{}[{}]", self.family.letter(), self.i)
        } else {
            write!(f, "{}[{},{}]", self.family.letter(), self.i, self.j)
        }
    }
}

/// A monomial as sorted `(variable, exponent)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(CoordVar, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn factors(&self) -> &[(CoordVar, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn weighted_degree(&self, w: &GradingWeights) -> u32 {
        self.0.iter().map(|&(v, e)| w.weight(v.family) * e).sum()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut map: BTreeMap<CoordVar, u32> = self.0.iter().copied().collect();
        for &(v, e) in &other.0 {
            *map.entry(v).or_default() += e;
        }
        Monomial(map.into_iter().collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let (a, b) = (&self.0, &other.0);
            let (mut i, mut j) = (a.len(), b.len());
            while i > 0 || j > 0 {
                let va = (i > 0).then(|| a[i - 1]);
                let vb = (j > 0).then(|| b[j - 1]);
                match (va, vb) {
                    (Some((x, ex)), Some((y, ey))) if x == y => {
                        if ex != ey {
                            return ey.cmp(&ex);
                        }
                        i -= 1;
                        j -= 1;
                    }
                    (Some((x, _)), Some((y, _))) if x > y => return Ordering::Less,
                    (Some(_), None) => return Ordering::Less,
                    _ => return Ordering::Greater,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weight of each coordinate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradingWeights {
    pub p: u32,
    pub q: u32,
    pub r: u32,
    pub v: u32,
    pub w: u32,
}

impl GradingWeights {
    /// `r, w ↦ 0`, `p, v ↦ 1`, `q ↦ 2`.
    pub fn grad() -> Self {
        GradingWeights { p: 1, q: 2, r: 0, v: 1, w: 0 }
    }

    pub fn total() -> Self {
        GradingWeights { p: 1, q: 1, r: 1, v: 1, w: 1 }
    }

    pub fn weight(&self, f: Family) -> u32 {
        match f {
            Family::P => self.p,
            Family::Q => self.q,
            Family::R => self.r,
            Family::V => self.v,
            Family::W => self.w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradedPart {
    Top,
    Degree(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordPoly {
    field: FieldSpec,
    ctx: GroupType,
    terms: BTreeMap<Monomial, Scalar>,
}

impl CoordPoly {
    pub fn zero(field: FieldSpec, ctx: GroupType) -> Self {
        CoordPoly { field, ctx, terms: BTreeMap::new() }
    }

    pub fn constant(c: Scalar, ctx: GroupType) -> Self {
        let mut out = CoordPoly::zero(c.field(), ctx);
        if !c.is_zero() {
            out.terms.insert(Monomial::one(), c);
        }
        out
    }

    pub fn var(field: FieldSpec, ctx: GroupType, v: CoordVar) -> Result<Self> {
        v.check(ctx)?;
        Ok(CoordPoly::term(field, ctx, Monomial(vec![(v, 1)]), field.one()))
    }

    fn term(field: FieldSpec, ctx: GroupType, m: Monomial, c: Scalar) -> Self {
        let mut out = CoordPoly::zero(field, ctx);
        if !c.is_zero() {
            out.terms.insert(m, c);
        }
        out
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn context(&self) -> GroupType {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in decreasing monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter().rev()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn variables(&self) -> BTreeSet<CoordVar> {
        self.terms.keys().flat_map(|m| m.0.iter().map(|&(v, _)| v)).collect()
    }

    fn accumulate(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(x) => {
                let s = &*x + &c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *x = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, rhs: &CoordPoly) -> CoordPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.accumulate(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &CoordPoly) -> CoordPoly {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> CoordPoly {
        self.scale(&-&self.field.one())
    }

    pub fn scale(&self, c: &Scalar) -> CoordPoly {
        let mut out = CoordPoly::zero(self.field, self.ctx);
        if c.is_zero() {
            return out;
        }
        out.terms = self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect();
        out
    }

    pub fn mul(&self, rhs: &CoordPoly) -> CoordPoly {
        let mut out = CoordPoly::zero(self.field, self.ctx);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.accumulate(ma.times(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> CoordPoly {
        let mut acc = CoordPoly::constant(self.field.one(), self.ctx);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Replace every variable by a polynomial in the context `ctx`.
    pub fn substitute(&self, ctx: GroupType, mut image: impl FnMut(CoordVar) -> Result<CoordPoly>) -> Result<CoordPoly> {
        let mut cache: BTreeMap<CoordVar, Vec<CoordPoly>> = BTreeMap::new();
        let mut out = CoordPoly::zero(self.field, ctx);
        for (m, c) in &self.terms {
            let mut acc = CoordPoly::constant(c.clone(), ctx);
            for &(v, e) in &m.0 {
                if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(v) {
                    e.insert(vec![CoordPoly::constant(self.field.one(), ctx), image(v)?]);
                }
                let powers = cache.get_mut(&v).unwrap();
                while powers.len() <= e as usize {
                    let next = powers.last().unwrap().mul(&powers[1]);
                    powers.push(next);
                }
                acc = acc.mul(&powers[e as usize]);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Evaluate with a value per variable.
    pub fn eval_with(&self, mut value: impl FnMut(CoordVar) -> Result<Scalar>) -> Result<Scalar> {
        let mut vals: BTreeMap<CoordVar, Scalar> = BTreeMap::new();
        let mut acc = self.field.zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.0 {
                if let std::collections::btree_map::Entry::Vacant(e) = vals.entry(v) {
                    e.insert(value(v)?);
                }
                t = &t * &vals[&v].pow(e);
            }
            acc = &acc + &t;
        }
        Ok(acc)
    }

    pub fn evaluate(&self, point: &CoordPoint) -> Result<Scalar> {
        point.check(self.ctx)?;
        self.eval_with(|v| point.value(v))
    }

    /// Evaluate at an element of the ambient algebra.
    pub fn evaluate_ambient(&self, m: &Matrix) -> Result<Scalar> {
        self.evaluate(&CoordPoint::from_ambient(self.ctx, m)?)
    }

    /// `(g·f)(M) = f(g⁻¹ M g)`.
    pub fn group_act(&self, g: &Matrix) -> Result<CoordPoly> {
        let size = self.ctx.matrix_size();
        if g.rows() != size || g.cols() != size {
            return Err(Error::Dimension(format!("group element must be {size}x{size}")));
        }
        if self.ctx.kind != GroupKind::A && !self.ctx.group_contains(g)? {
            return Err(Error::NotMember(format!("{}{}", self.ctx.kind, self.ctx.n)));
        }
        let gi = g.inverse()?;
        let table = entry_table(self.field, self.ctx);
        self.substitute(self.ctx, |v| {
            let (i, j) = v.location(self.ctx);
            let mut out = CoordPoly::zero(self.field, self.ctx);
            for a in 0..size {
                let x = gi.get(i, a);
                if x.is_zero() {
                    continue;
                }
                for b in 0..size {
                    let y = g.get(b, j);
                    if y.is_zero() || table[a * size + b].is_zero() {
                        continue;
                    }
                    out = out.add(&table[a * size + b].scale(&(x * y)));
                }
            }
            Ok(out)
        })
    }

    /// `f ∘ pr_i` as a function on the level `i + 1` space.
    pub fn pullback_projection(&self, chain: &ChainSpec, level: usize) -> Result<CoordPoly> {
        if level == 0 {
            return Err(Error::Precondition("levels start at 1".into()));
        }
        let here = chain.group(level);
        if here != self.ctx {
            return Err(Error::Precondition(format!(
                "polynomial lives on {}{}, level {level} is {}{}",
                self.ctx.kind, self.ctx.n, here.kind, here.n
            )));
        }
        let up = chain.group(level + 1);
        let emb = chain.embedding(level);
        let size = up.matrix_size();
        let table = entry_table(self.field, up);
        self.substitute(up, |v| {
            let (a, b) = v.location(self.ctx);
            let mut out = CoordPoly::zero(self.field, up);
            for map in &emb.direct {
                out = out.add(&table[map[a] * size + map[b]]);
            }
            for map in &emb.dual {
                out = out.sub(&table[map[b] * size + map[a]]);
            }
            Ok(out)
        })
    }

    pub fn graded_part(&self, weights: &GradingWeights, which: GradedPart) -> CoordPoly {
        let target = match which {
            GradedPart::Degree(k) => Some(k),
            GradedPart::Top => self.terms.keys().map(|m| m.weighted_degree(weights)).max(),
        };
        let mut out = CoordPoly::zero(self.field, self.ctx);
        if let Some(d) = target {
            out.terms = self
                .terms
                .iter()
                .filter(|(m, _)| m.weighted_degree(weights) == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect();
        }
        out
    }

    /// Whether `f(P + λI) = f(P)` identically; only for `gl_n`.
    pub fn is_shift_invariant(&self) -> Result<bool> {
        if self.ctx.kind != GroupKind::A {
            return Err(Error::Precondition("shift invariance is defined on gl_n".into()));
        }
        let d = self.total_degree().unwrap_or(0);
        if self.field.order().is_some_and(|q| q <= d as u64) {
            return Err(Error::Unsupported { field: self.field, op: "shift test above the characteristic" });
        }
        for lambda in 1..=d as i64 {
            let shift = self.field.from_i64(lambda);
            let moved = self.substitute(self.ctx, |v| {
                let x = CoordPoly::var(self.field, self.ctx, v)?;
                Ok(if v.i == v.j { x.add(&CoordPoly::constant(shift.clone(), self.ctx)) } else { x })
            })?;
            if moved != *self {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn parse(field: FieldSpec, ctx: GroupType, s: &str) -> Result<CoordPoly> {
        let bad = |what: &str| Error::Parse(format!("{what} in polynomial {s:?}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty input"));
        }
        let mut out = CoordPoly::zero(field, ctx);
        for (neg, term) in split_top_level(&compact, |c| c == '+' || c == '-', true)? {
            if term.is_empty() {
                return Err(bad("empty term"));
            }
            let mut coeff = if neg { -&field.one() } else { field.one() };
            let mut mono = Monomial::one();
            for (_, factor) in split_top_level(term, |c| c == '*', false)? {
                if let Some((v, e)) = parse_var(factor)? {
                    v.check(ctx)?;
                    mono = mono.times(&Monomial(vec![(v, e)]));
                } else {
                    coeff = &coeff * &field.parse_scalar(strip_parens(factor))?;
                }
            }
            out.accumulate(mono, coeff);
        }
        Ok(out)
    }
}

/// Split at top-level separators; each piece carries whether its separator
/// was `-`.
fn split_top_level(s: &str, is_sep: impl Fn(char) -> bool, signs: bool) -> Result<Vec<(bool, &str)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut neg = false;
    let mut prev: Option<char> = None;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ if depth == 0 && is_sep(c) && !(signs && matches!(prev, Some('^' | '/' | '*'))) => {
                if !(signs && i == 0) {
                    out.push((neg, &s[start..i]));
                }
                neg = c == '-';
                start = i + c.len_utf8();
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse(format!("unbalanced brackets in {s:?}")));
        }
        prev = Some(c);
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced brackets in {s:?}")));
    }
    out.push((neg, &s[start..]));
    Ok(out)
}

fn strip_parens(s: &str) -> &str {
    if !(s.starts_with('(') && s.ends_with(')')) {
        return s;
    }
    let mut depth = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth == 0 && i + 1 < s.len() {
            return s;
        }
    }
    &s[1..s.len() - 1]
}

fn parse_var(s: &str) -> Result<Option<(CoordVar, u32)>> {
    let mut chars = s.chars();
    let Some(family) = chars.next().and_then(Family::from_letter) else {
        return Ok(None);
    };
    let rest = &s[1..];
    if !rest.starts_with('[') {
        return Ok(None);
    }
    let bad = || Error::Parse(format!("bad variable {s:?}"));
    let close = rest.find(']').ok_or_else(bad)?;
    let idx: Vec<u32> = rest[1..close]
        .split(',')
        .map(|x| x.parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let e = match &rest[close + 1..] {
        "" => 1,
        tail => tail.strip_prefix('^').and_then(|x| x.parse().ok()).ok_or_else(bad)?,
    };
    let v = match (family.is_vector(), idx.as_slice()) {
        (true, &[i]) => CoordVar { family, i, j: 0 },
        (false, &[i, j]) => CoordVar { family, i, j },
        _ => return Err(bad()),
    };
    Ok(Some((v, e)))
}

fn is_negative(c: &Scalar) -> bool {
    c.as_rational().is_some_and(|q| q < &num_rational::BigRational::from_integer(0.into()))
}

impl fmt::Display for CoordPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms().enumerate() {
            let neg = is_negative(c);
            let abs = if neg { -c } else { c.clone() };
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let coeff = match abs {
                Scalar::Qt(ref r) => format!("({r})"),
                ref s => s.to_string(),
            };
            let vars: Vec<String> = m
                .0
                .iter()
                .map(|&(v, e)| if e == 1 { v.to_string() } else { format!("{v}^{e}") })
                .collect();
            if vars.is_empty() {
                f.write_str(&coeff)?;
            } else if abs.is_one() {
                f.write_str(&vars.join("*"))?;
            } else {
                write!(f, "{coeff}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Canonical-variable expression of every ambient entry, row-major.
fn entry_table(field: FieldSpec, ctx: GroupType) -> Vec<CoordPoly> {
    let size = ctx.matrix_size();
    let mut out = Vec::with_capacity(size * size);
    for a in 0..size {
        for b in 0..size {
            out.push(ambient_entry(field, ctx, a, b));
        }
    }
    out
}

/// The ambient entry `(a, b)` as a signed canonical variable.
fn ambient_entry(field: FieldSpec, ctx: GroupType, a: usize, b: usize) -> CoordPoly {
    let n = ctx.n;
    let one = field.one();
    let minus = -&one;
    let make = |v: CoordVar, c: &Scalar| CoordPoly::term(field, ctx, Monomial(vec![(v, 1)]), c.clone());
    let zero = CoordPoly::zero(field, ctx);
    let idx = |k: usize| k as u32 + 1;
    let paired = |family: Family, i: usize, j: usize| -> CoordPoly {
        let var = |x: usize, y: usize| CoordVar { family, i: idx(x), j: idx(y) };
        match ctx.kind {
            GroupKind::C => make(var(i.min(j), i.max(j)), &one),
            _ => match i.cmp(&j) {
                Ordering::Less => make(var(i, j), &one),
                Ordering::Greater => make(var(j, i), &minus),
                Ordering::Equal => CoordPoly::zero(field, ctx),
            },
        }
    };
    match ctx.kind {
        GroupKind::A => make(CoordVar::p(idx(a), idx(b)), &one),
        GroupKind::C | GroupKind::D => match (a < n, b < n) {
            (true, true) => make(CoordVar::p(idx(a), idx(b)), &one),
            (true, false) => paired(Family::Q, a, b - n),
            (false, true) => paired(Family::R, a - n, b),
            (false, false) => make(CoordVar::p(idx(b - n), idx(a - n)), &minus),
        },
        GroupKind::B => {
            let off = n + 1;
            match (a.cmp(&n), b.cmp(&n)) {
                (Ordering::Less, Ordering::Less) => make(CoordVar::p(idx(a), idx(b)), &one),
                (Ordering::Less, Ordering::Equal) => make(CoordVar::v(idx(a)), &one),
                (Ordering::Less, Ordering::Greater) => paired(Family::Q, a, b - off),
                (Ordering::Equal, Ordering::Less) => make(CoordVar::w(idx(b)), &minus),
                (Ordering::Equal, Ordering::Equal) => zero,
                (Ordering::Equal, Ordering::Greater) => make(CoordVar::v(idx(b - off)), &minus),
                (Ordering::Greater, Ordering::Less) => paired(Family::R, a - off, b),
                (Ordering::Greater, Ordering::Equal) => make(CoordVar::w(idx(a - off)), &one),
                (Ordering::Greater, Ordering::Greater) => make(CoordVar::p(idx(b - off), idx(a - off)), &minus),
            }
        }
    }
}

/// Block values for evaluation; absent blocks are families not supplied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoordPoint {
    pub p: Option<Matrix>,
    pub q: Option<Matrix>,
    pub r: Option<Matrix>,
    /// Column vectors.
    pub v: Option<Matrix>,
    pub w: Option<Matrix>,
}

impl CoordPoint {
    pub fn gl(p: Matrix) -> Self {
        CoordPoint { p: Some(p), ..Default::default() }
    }

    /// Read every block of an ambient algebra element.
    pub fn from_ambient(ctx: GroupType, m: &Matrix) -> Result<CoordPoint> {
        let size = ctx.matrix_size();
        if m.rows() != size || m.cols() != size {
            return Err(Error::Dimension(format!("expected {size}x{size}")));
        }
        let n = ctx.n;
        match ctx.kind {
            GroupKind::A => Ok(CoordPoint::gl(m.clone())),
            _ if !ctx.algebra_contains(m)? => Err(Error::NotMember(format!("algebra of {}{}", ctx.kind, n))),
            GroupKind::C | GroupKind::D => Ok(CoordPoint {
                p: Some(m.block(0, 0, n, n)),
                q: Some(m.block(0, n, n, n)),
                r: Some(m.block(n, 0, n, n)),
                ..Default::default()
            }),
            GroupKind::B => Ok(CoordPoint {
                p: Some(m.block(0, 0, n, n)),
                q: Some(m.block(0, n + 1, n, n)),
                r: Some(m.block(n + 1, 0, n, n)),
                v: Some(m.block(0, n, n, 1)),
                w: Some(m.block(n + 1, n, n, 1)),
            }),
        }
    }

    fn check(&self, ctx: GroupType) -> Result<()> {
        let n = ctx.n;
        let shape = |m: &Option<Matrix>, cols: usize, name: &str| -> Result<()> {
            match m {
                Some(x) if x.rows() != n || x.cols() != cols => {
                    Err(Error::Dimension(format!("block {name} must be {n}x{cols}")))
                }
                _ => Ok(()),
            }
        };
        shape(&self.p, n, "p")?;
        shape(&self.q, n, "q")?;
        shape(&self.r, n, "r")?;
        shape(&self.v, 1, "v")?;
        shape(&self.w, 1, "w")?;
        for (name, m) in [("q", &self.q), ("r", &self.r)] {
            let Some(x) = m else { continue };
            let ok = match ctx.kind {
                GroupKind::A => true,
                GroupKind::C => x.transpose() == *x,
                GroupKind::B | GroupKind::D => x.transpose() == -x,
            };
            if !ok {
                return Err(Error::Precondition(format!(
                    "block {name} violates the {} symmetry constraint",
                    ctx.kind
                )));
            }
        }
        Ok(())
    }

    fn value(&self, v: CoordVar) -> Result<Scalar> {
        let block = match v.family {
            Family::P => &self.p,
            Family::Q => &self.q,
            Family::R => &self.r,
            Family::V => &self.v,
            Family::W => &self.w,
        };
        let m = block
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("point has no {} block", v.family.letter())))?;
        let (i, j) = (v.i as usize - 1, (v.j as usize).saturating_sub(1));
        Ok(m.get(i, j).clone())
    }
}

/// Coefficients `c_0, …, c_d` of `family(λ) = Σ c_j λʲ`, recovered from `d + 1`
/// sample points.
pub fn vandermonde_coefficients(
    mut family: impl FnMut(&Scalar) -> Result<CoordPoly>,
    degree: usize,
    points: &[Scalar],
) -> Result<Vec<CoordPoly>> {
    if points.len() != degree + 1 {
        return Err(Error::Precondition(format!("need {} sample points, got {}", degree + 1, points.len())));
    }
    let field = points[0].field();
    if field.order().is_some_and(|q| q <= degree as u64) {
        return Err(Error::Precondition(format!("{field} has fewer than {} elements", degree + 1)));
    }
    let distinct: BTreeSet<&Scalar> = points.iter().collect();
    if distinct.len() != points.len() {
        return Err(Error::Precondition("repeated sample point".into()));
    }
    let v = Matrix::from_fn(field, degree + 1, degree + 1, |k, j| points[k].pow(j as u32));
    let vi = v.inverse()?;
    let values: Vec<CoordPoly> = points.iter().map(&mut family).collect::<Result<_>>()?;
    let ctx = values[0].ctx;
    Ok((0..=degree)
        .map(|j| {
            values
                .iter()
                .enumerate()
                .fold(CoordPoly::zero(field, ctx), |acc, (k, f)| acc.add(&f.scale(vi.get(j, k))))
        })
        .collect())
}

/// Disjoint index sets `(𝒦, 𝓛)` of equal size `m ≤ (n−1)/2` with every
/// variable `p_{kℓ}` of `f` having `k ∈ 𝒦`, `ℓ ∈ 𝓛`.
pub fn off_diagonal_test(f: &CoordPoly) -> Result<Option<(Vec<u32>, Vec<u32>)>> {
    if f.ctx.kind != GroupKind::A {
        return Err(Error::Precondition("off-diagonal test is defined on gl_n".into()));
    }
    let n = f.ctx.n as u32;
    let vars = f.variables();
    let rows: BTreeSet<u32> = vars.iter().map(|v| v.i).collect();
    let cols: BTreeSet<u32> = vars.iter().map(|v| v.j).collect();
    if !rows.is_disjoint(&cols) {
        return Ok(None);
    }
    let m = rows.len().max(cols.len()) as u32;
    if 2 * m + 1 > n {
        return Ok(None);
    }
    let mut k: BTreeSet<u32> = rows.clone();
    let mut l: BTreeSet<u32> = cols.clone();
    let mut spare = (1..=n).filter(|x| !rows.contains(x) && !cols.contains(x));
    while (k.len() as u32) < m {
        k.insert(spare.next().expect("room for padding"));
    }
    while (l.len() as u32) < m {
        l.insert(spare.next().expect("room for padding"));
    }
    Ok(Some((k.into_iter().collect(), l.into_iter().collect())))
}

/// A matrix with polynomial entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    data: Vec<CoordPoly>,
}

impl PolyMatrix {
    /// The generic element of the ambient algebra.
    pub fn generic(field: FieldSpec, ctx: GroupType) -> PolyMatrix {
        let size = ctx.matrix_size();
        PolyMatrix { rows: size, cols: size, data: entry_table(field, ctx) }
    }

    pub fn from_matrix(m: &Matrix, ctx: GroupType) -> PolyMatrix {
        PolyMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data: m.entries().iter().map(|c| CoordPoly::constant(c.clone(), ctx)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &CoordPoly {
        &self.data[i * self.cols + j]
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> PolyMatrix {
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| self.get(r0 + i, c0 + j).clone())
            .collect();
        PolyMatrix { rows, cols, data }
    }

    pub fn transpose(&self) -> PolyMatrix {
        let data = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        PolyMatrix { rows: self.cols, cols: self.rows, data }
    }

    fn zip(&self, rhs: &PolyMatrix, f: impl Fn(&CoordPoly, &CoordPoly) -> CoordPoly) -> PolyMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, rhs: &PolyMatrix) -> PolyMatrix {
        self.zip(rhs, CoordPoly::add)
    }

    pub fn sub(&self, rhs: &PolyMatrix) -> PolyMatrix {
        self.zip(rhs, CoordPoly::sub)
    }

    pub fn scale(&self, c: &Scalar) -> PolyMatrix {
        PolyMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.scale(c)).collect() }
    }

    pub fn mul(&self, rhs: &PolyMatrix) -> PolyMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        let ctx = self.data.first().or(rhs.data.first()).map(|p| (p.field, p.ctx));
        let mut data = Vec::with_capacity(self.rows * rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let (field, c) = ctx.expect("nonempty product");
                let mut acc = CoordPoly::zero(field, c);
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), rhs.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&a.mul(b));
                    }
                }
                data.push(acc);
            }
        }
        PolyMatrix { rows: self.rows, cols: rhs.cols, data }
    }

    /// `a · self` for a constant matrix `a`.
    pub fn left_mul(&self, a: &Matrix) -> PolyMatrix {
        let ctx = self.data[0].ctx;
        PolyMatrix::from_matrix(a, ctx).mul(self)
    }

    /// `self · a` for a constant matrix `a`.
    pub fn right_mul(&self, a: &Matrix) -> PolyMatrix {
        let ctx = self.data[0].ctx;
        self.mul(&PolyMatrix::from_matrix(a, ctx))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(CoordPoly::is_zero)
    }

    /// First entry where the two matrices differ, 0-based.
    pub fn first_difference(&self, rhs: &PolyMatrix) -> Option<(usize, usize)> {
        (0..self.data.len())
            .find(|&k| self.data[k] != rhs.data[k])
            .map(|k| (k / self.cols, k % self.cols))
    }

    pub fn evaluate(&self, point: &CoordPoint) -> Result<Matrix> {
        let field = self.data.first().map(|p| p.field).ok_or_else(|| Error::Dimension("empty".into()))?;
        let vals: Vec<Scalar> = self.data.iter().map(|p| p.evaluate(point)).collect::<Result<_>>()?;
        Ok(Matrix::from_fn(field, self.rows, self.cols, |i, j| vals[i * self.cols + j].clone()))
    }
}
