//! Constructive orbit lemmas, orbit-closure classification, and the lattice
//! of closed-set descriptors.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chains::{ChainSpec, GroupKind};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::matrix::Matrix;
use crate::pencil::{shift_rank, tuple_rank_identity, CheckMode, GlTable};

fn check_same_field(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.field() != b.field() {
        return Err(Error::FieldMismatch(a.field(), b.field()));
    }
    Ok(())
}

fn check_square(m: &Matrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{what} must be square, got {}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

fn unit_vector(field: FieldSpec, n: usize, i: usize) -> Matrix {
    Matrix::unit(field, n, 1, i, 0)
}

/// Tracks the span of a growing list of column vectors.
struct Span {
    field: FieldSpec,
    dim: usize,
    vecs: Vec<Matrix>,
}

impl Span {
    fn new(field: FieldSpec, dim: usize) -> Self {
        Span { field, dim, vecs: Vec::new() }
    }

    fn extends(&self, v: &Matrix) -> bool {
        let mut parts: Vec<&Matrix> = self.vecs.iter().collect();
        parts.push(v);
        Matrix::hstack(self.field, self.dim, &parts).map(|m| m.rank()).unwrap_or(0) > self.vecs.len()
    }

    fn push_if_new(&mut self, v: Matrix) -> bool {
        if self.extends(&v) {
            self.vecs.push(v);
            true
        } else {
            false
        }
    }
}

fn columns(m: &Matrix) -> Vec<Matrix> {
    (0..m.cols()).map(|j| m.column(j)).collect()
}

/// Standard basis vectors, lexicographically least, extending `vs` to a basis.
fn extend_to_basis(field: FieldSpec, n: usize, vs: &[Matrix]) -> Vec<Matrix> {
    let mut span = Span::new(field, n);
    for v in vs {
        span.push_if_new(v.clone());
    }
    let mut extra = Vec::new();
    for i in 0..n {
        let e = unit_vector(field, n, i);
        if span.push_if_new(e.clone()) {
            extra.push(e);
        }
    }
    extra
}

fn from_columns(field: FieldSpec, n: usize, cols: &[Matrix]) -> Result<Matrix> {
    let parts: Vec<&Matrix> = cols.iter().collect();
    Matrix::hstack(field, n, &parts)
}

/// `m` vectors `b_1…b_m` independent modulo `im P`, with `P b_j` running
/// through a basis of `im P` for `j ≤ rk P` and `P b_j = 0` beyond.
/// Returns `(b, image basis)`.
fn adapted_basis(p: &Matrix, m: usize) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    let n = p.rows();
    let f = p.field();
    let rr = p.rank_and_rref();
    let k = rr.rank;
    if m < k || m + k > n {
        return Err(Error::Construction(format!("no adapted basis of size {m} for rank {k} in dimension {n}")));
    }
    let pre: Vec<Matrix> = rr.pivots.iter().map(|&c| unit_vector(f, n, c)).collect();
    let image: Vec<Matrix> = rr.pivots.iter().map(|&c| p.column(c)).collect();
    let kernel = columns(&p.kernel());
    let mut span = Span::new(f, n);
    for u in &image {
        span.push_if_new(u.clone());
    }
    let mut chosen: Vec<Option<Matrix>> = vec![None; k];
    for (j, y) in pre.iter().enumerate() {
        if span.push_if_new(y.clone()) {
            chosen[j] = Some(y.clone());
        }
    }
    for j in 0..k {
        if chosen[j].is_some() {
            continue;
        }
        let fixed = kernel.iter().map(|z| &pre[j] + z).find(|b| span.extends(b));
        let b = fixed.ok_or_else(|| Error::Construction("preimage cannot be moved off the image".into()))?;
        span.vecs.push(b.clone());
        chosen[j] = Some(b);
    }
    let mut b: Vec<Matrix> = chosen.into_iter().map(Option::unwrap).collect();
    for z in &kernel {
        if b.len() == m {
            break;
        }
        if span.push_if_new(z.clone()) {
            b.push(z.clone());
        }
    }
    if b.len() < m {
        return Err(Error::Construction("kernel too small for adapted basis".into()));
    }
    Ok((b, image))
}

/// `g` with `g P g⁻¹ = [[X, 0], [R, 0]]`, `X` of size `m × m` and
/// `rk R = rk P`.
fn lower_form(p: &Matrix, m: usize) -> Result<Matrix> {
    let n = p.rows();
    let f = p.field();
    let (mut b, _) = adapted_basis(p, m)?;
    let mut span = Span::new(f, n);
    for v in &b {
        span.push_if_new(v.clone());
    }
    for z in columns(&p.kernel()) {
        if b.len() == n {
            break;
        }
        if span.push_if_new(z.clone()) {
            b.push(z);
        }
    }
    if b.len() < n {
        return Err(Error::Construction("kernel does not complement the adapted basis".into()));
    }
    from_columns(f, n, &b)?.inverse()
}

/// `g` with `(gPg⁻¹)_{[n],[n]} = Q` for `P ∈ gl_{2n}` of rank `k < n` and
/// `rk Q ≤ k`.
pub fn topleft_realization(p: &Matrix, q: &Matrix) -> Result<Matrix> {
    check_same_field(p, q)?;
    check_square(p, "P")?;
    check_square(q, "Q")?;
    let n = q.rows();
    if p.rows() != 2 * n {
        return Err(Error::Dimension(format!("P must be {0}x{0} for Q of size {n}", 2 * n)));
    }
    let f = p.field();
    let k = p.rank();
    if k >= n {
        return Err(Error::Precondition(format!("rank(P) = {k} must be below n = {n}")));
    }
    if q.rank() > k {
        return Err(Error::Precondition(format!("rank(Q) = {} exceeds rank(P) = {k}", q.rank())));
    }
    let two = 2 * n;
    if k == 0 {
        return Ok(Matrix::identity(f, two));
    }

    // A basis whose first half maps onto the image through the lower-left block.
    let (b, image) = adapted_basis(p, n)?;
    let mut cols = b;
    cols.extend(image);
    let extra = extend_to_basis(f, two, &cols);
    cols.extend(extra);
    let basis = from_columns(f, two, &cols)?;
    let g1 = basis.inverse()?;
    let p1 = &(&g1 * p) * &basis;

    // Align ker R into ker Q.
    let r = p1.block(n, 0, n, n);
    let kr = columns(&r.kernel());
    let kq: Vec<Matrix> = columns(&q.kernel()).into_iter().take(kr.len()).collect();
    let mut src = extend_to_basis(f, n, &kr);
    src.extend(kr);
    let mut dst = extend_to_basis(f, n, &kq);
    dst.extend(kq);
    let h = &from_columns(f, n, &dst)? * &from_columns(f, n, &src)?.inverse()?;
    let mut g2 = Matrix::identity(f, two);
    g2.set_block(0, 0, &h);
    let mut g2i = Matrix::identity(f, two);
    g2i.set_block(0, 0, &h.inverse()?);
    let p2 = &(&g2 * &p1) * &g2i;

    // Q = S R', top-left = T R'; shear by (I, S − T; 0, I).
    let r2 = p2.block(n, 0, n, n);
    let solve_left = |target: &Matrix| -> Result<Matrix> {
        r2.transpose()
            .solve(&target.transpose())?
            .map(|x| x.transpose())
            .ok_or_else(|| Error::Construction("row space not contained in that of R'".into()))
    };
    let s = solve_left(q)?;
    let t = solve_left(&p2.block(0, 0, n, n))?;
    let mut shear = Matrix::identity(f, two);
    shear.set_block(0, n, &(&s - &t));
    let g = &(&shear * &g2) * &g1;
    let done = &(&g * p) * &g.inverse()?;
    if done.block(0, 0, n, n) != *q {
        return Err(Error::Construction("top-left block does not match".into()));
    }
    Ok(g)
}

fn conj(g: &Matrix, m: &Matrix) -> Result<Matrix> {
    Ok(&(g * m) * &g.inverse()?)
}

/// Conjugators `g_i` making `Σ g_i P_i g_i⁻¹` of rank in `(k, 3k]` with tuple
/// rank equal to its rank.
pub fn raise_sum_rank(ps: &[Matrix]) -> Result<Vec<Matrix>> {
    if ps.len() < 2 {
        return Err(Error::Precondition("at least two matrices are needed".into()));
    }
    for p in ps {
        check_square(p, "P_i")?;
        check_same_field(p, &ps[0])?;
        if p.rows() != ps[0].rows() {
            return Err(Error::Dimension("all matrices must have the same size".into()));
        }
    }
    let n = ps[0].rows();
    let f = ps[0].field();
    let k = ps[0].rank();
    if k == 0 || ps.iter().any(|p| p.rank() != k) {
        return Err(Error::Precondition("all matrices must have the same rank k ≥ 1".into()));
    }
    if n < 6 * k {
        return Err(Error::Precondition(format!("n = {n} is below 6k = {}", 6 * k)));
    }
    let mut gs = vec![Matrix::identity(f, n)];
    let mut sum = ps[0].clone();
    for p in &ps[1..] {
        let c = sum.rank();
        let a = lower_form(&sum, c)?;
        let b = if c <= 2 * k {
            // [[•,0],[R,0]] + [[•,R''],[0,0]] has rank c + k.
            lower_form(&p.transpose(), c)?.inverse()?.transpose()
        } else {
            // two [[•,0],[R,0]] forms: rank stays in [c − k, c].
            lower_form(p, c)?
        };
        for g in gs.iter_mut() {
            *g = &a * &*g;
        }
        sum = &conj(&a, &sum)? + &conj(&b, p)?;
        gs.push(b);
    }
    let r = sum.rank();
    if r <= k || r > 3 * k || tuple_rank_identity(&sum)? != r {
        return Err(Error::Construction(format!("sum has rank {r}, outside ({k}, {}]", 3 * k)));
    }
    Ok(gs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorVanishing {
    /// Every examined conjugate has vanishing leading `k × k` minor.
    pub vanishes: bool,
    pub rank_below: bool,
    pub witness: Option<Matrix>,
}

/// Whether `det((gPg⁻¹)_{[k],[k]}) = 0` for all `g`.
pub fn minor_vanishing_test<R: Rng + ?Sized>(p: &Matrix, k: usize, mode: CheckMode, rng: &mut R) -> Result<MinorVanishing> {
    check_square(p, "P")?;
    let n = p.rows();
    if k > n {
        return Err(Error::Precondition(format!("k = {k} exceeds n = {n}")));
    }
    let rank_below = p.rank() < k;
    let f = p.field();
    let nonzero_minor = |q: &Matrix| !q.leading(k).det().is_zero();
    let witness = match mode {
        CheckMode::Exhaustive => {
            let FieldSpec::Finite(pr) = f else {
                return Err(Error::Unsupported { field: f, op: "exhaustive minor test" });
            };
            let table = GlTable::new(f, n)?;
            let pv = p.residues().unwrap();
            let mut tmp = vec![0u32; n * n];
            let mut out = vec![0u32; n * n];
            let found = table.iter().find_map(|(g, gi)| {
                crate::gf::mat_mul_mod_p(pr, n, g, &pv, &mut tmp);
                crate::gf::mat_mul_mod_p(pr, n, &tmp, gi, &mut out);
                nonzero_minor(&Matrix::from_residues(pr, n, n, &out)).then(|| Matrix::from_residues(pr, n, n, g))
            });
            found
        }
        CheckMode::Sampled { trials } => {
            let mut found = None;
            for _ in 0..trials {
                let g = Matrix::random_invertible(n, f, rng)?;
                if nonzero_minor(&conj(&g, p)?) {
                    found = Some(g);
                    break;
                }
            }
            found
        }
    };
    Ok(MinorVanishing { vanishes: witness.is_none(), rank_below, witness })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrbitClosure {
    /// No shift stratum of rank below half the level was detected.
    Dense { level: usize },
    Stratum { lambda: Scalar, rank: usize },
}

impl fmt::Display for OrbitClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitClosure::Dense { level } => write!(f, "dense (level {level})"),
            OrbitClosure::Stratum { lambda, rank } => write!(f, "stratum({lambda}, {rank})"),
        }
    }
}

pub fn classify_orbit_closure(p: &Matrix) -> Result<OrbitClosure> {
    check_square(p, "P")?;
    let n = p.rows();
    let sr = shift_rank(p)?;
    Ok(match sr.lambda {
        Some(lambda) if 2 * sr.rank < n => OrbitClosure::Stratum { lambda, rank: sr.rank },
        _ => OrbitClosure::Dense { level: n },
    })
}

/// `TupleRank(k) ∪ ⋃_λ Shift(λ, f(λ))` with `f(λ) > k` listed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClosedSetDescriptor {
    field: FieldSpec,
    k: i64,
    exceptional: BTreeMap<Scalar, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorWire {
    pub k: i64,
    #[serde(default)]
    pub exceptional: Vec<ExceptionalWire>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalWire {
    pub lambda: String,
    pub bound: i64,
}

impl ClosedSetDescriptor {
    /// Canonical form of `(k, entries)`: entries with bound `≤ k` are dropped.
    pub fn canonicalize(field: FieldSpec, k: i64, entries: impl IntoIterator<Item = (Scalar, i64)>) -> Result<Self> {
        if k < -1 {
            return Err(Error::Precondition(format!("k = {k} is below -1")));
        }
        let mut exceptional = BTreeMap::new();
        for (lambda, bound) in entries {
            if lambda.field() != field {
                return Err(Error::FieldMismatch(field, lambda.field()));
            }
            if bound < -1 {
                return Err(Error::Precondition(format!("bound {bound} is below -1")));
            }
            if exceptional.insert(lambda.clone(), bound).is_some() {
                return Err(Error::Precondition(format!("repeated shift {lambda}")));
            }
        }
        exceptional.retain(|_, b| *b > k);
        Ok(ClosedSetDescriptor { field, k, exceptional })
    }

    pub fn empty(field: FieldSpec) -> Self {
        ClosedSetDescriptor { field, k: -1, exceptional: BTreeMap::new() }
    }

    pub fn tuple_rank(field: FieldSpec, k: i64) -> Result<Self> {
        Self::canonicalize(field, k, [])
    }

    pub fn shift(lambda: Scalar, bound: i64) -> Result<Self> {
        Self::canonicalize(lambda.field(), -1, [(lambda, bound)])
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn exceptional(&self) -> &BTreeMap<Scalar, i64> {
        &self.exceptional
    }

    pub fn is_empty(&self) -> bool {
        self.k == -1 && self.exceptional.is_empty()
    }

    /// `f(λ)`: the largest `m` with `Shift(λ, m)` contained.
    pub fn bound_at(&self, lambda: &Scalar) -> i64 {
        self.exceptional.get(lambda).copied().unwrap_or(self.k)
    }

    fn combine(&self, other: &Self, pick: fn(i64, i64) -> i64) -> Result<Self> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(self.field, other.field));
        }
        let keys = self.exceptional.keys().chain(other.exceptional.keys());
        let entries: BTreeMap<Scalar, i64> =
            keys.map(|l| (l.clone(), pick(self.bound_at(l), other.bound_at(l)))).collect();
        Self::canonicalize(self.field, pick(self.k, other.k), entries)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.combine(other, i64::max)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.combine(other, i64::min)
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &Self) -> Result<bool> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(self.field, other.field));
        }
        Ok(other.k <= self.k && other.exceptional.keys().all(|l| other.bound_at(l) <= self.bound_at(l)))
    }

    pub fn to_wire(&self) -> DescriptorWire {
        DescriptorWire {
            k: self.k,
            exceptional: self
                .exceptional
                .iter()
                .map(|(l, &bound)| ExceptionalWire { lambda: l.to_string(), bound })
                .collect(),
        }
    }

    pub fn from_wire(field: FieldSpec, w: &DescriptorWire) -> Result<Self> {
        let entries = w
            .exceptional
            .iter()
            .map(|e| Ok((field.parse_scalar(&e.lambda)?, e.bound)))
            .collect::<Result<Vec<_>>>()?;
        Self::canonicalize(field, w.k, entries)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_wire()).expect("descriptor serializes")
    }

    pub fn from_json(field: FieldSpec, v: &serde_json::Value) -> Result<Self> {
        let w: DescriptorWire = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_wire(field, &w)
    }
}

impl fmt::Display for ClosedSetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("empty");
        }
        let mut parts = Vec::new();
        if self.k >= 0 {
            parts.push(format!("tupleRank({})", self.k));
        }
        parts.extend(self.exceptional.iter().map(|(l, b)| format!("shift({l}, {b})")));
        f.write_str(&parts.join(" ∪ "))
    }
}

/// First index after which a descending chain is constant.
pub fn chain_stabilization(chain: &[ClosedSetDescriptor]) -> Result<usize> {
    for (i, w) in chain.windows(2).enumerate() {
        if !w[0].contains(&w[1])? {
            return Err(Error::Precondition(format!("chain is not descending at index {}", i + 1)));
        }
    }
    let Some(last) = chain.last() else {
        return Ok(0);
    };
    Ok(chain.iter().rposition(|d| d != last).map_or(0, |i| i + 1))
}

/// A level-`i + 1` conjugator raising the tuple rank of the projection of a
/// type A chain element above that of `P`.
pub fn tuple_rank_lift<R: Rng + ?Sized>(chain: &ChainSpec, level: usize, p: &Matrix, rng: &mut R) -> Result<Matrix> {
    if chain.kind != GroupKind::A {
        return Err(Error::Precondition("tuple-rank lift needs a type A chain".into()));
    }
    if level == 0 {
        return Err(Error::Precondition("levels start at 1".into()));
    }
    let sig = chain.signature(level);
    if sig.l + sig.r < 2 {
        return Err(Error::Precondition("needs l + r ≥ 2".into()));
    }
    let small = chain.group(level).n;
    let big = chain.group(level + 1).n;
    if p.rows() != big || p.cols() != big {
        return Err(Error::Dimension(format!("P must be {big}x{big}")));
    }
    let f = p.field();
    let sr = shift_rank(p)?;
    let k = sr.rank;
    if k == 0 {
        return Err(Error::Precondition("P is scalar; its orbit is a point".into()));
    }
    if small < 6 * k {
        return Err(Error::Precondition(format!("n_i = {small} is below 6k = {}", 6 * k)));
    }
    let rep = match &sr.lambda {
        Some(l) => p.shifted(l),
        None => p.clone(),
    };
    let emb = chain.embedding(level);
    const ATTEMPTS: usize = 200;
    for attempt in 0..ATTEMPTS {
        let g0 = if attempt == 0 { Matrix::identity(f, big) } else { Matrix::random_invertible(big, f, rng)? };
        let x = conj(&g0, &rep)?;
        let mut blocks: Vec<Matrix> = emb.direct.iter().map(|m| x.submatrix(m, m)).collect();
        blocks.extend(emb.dual.iter().map(|m| -&x.submatrix(m, m).transpose()));
        if blocks.iter().any(|b| b.rank() != k) {
            continue;
        }
        let hs = raise_sum_rank(&blocks)?;
        let mut d = Matrix::identity(f, big);
        for (map, h) in emb.direct.iter().zip(&hs) {
            place(&mut d, map, h);
        }
        for (map, h) in emb.dual.iter().zip(&hs[emb.direct.len()..]) {
            place(&mut d, map, &h.inverse()?.transpose());
        }
        let g = &d * &g0;
        let projected = emb.project(&conj(&g, p)?)?;
        if tuple_rank_identity(&projected)? > k {
            return Ok(g);
        }
        return Err(Error::Construction(format!(
            "projection of the raised element kept tuple rank {k} (attempt {attempt})"
        )));
    }
    Err(Error::Construction(format!(
        "no conjugate with all {} diagonal blocks of rank {k} in {ATTEMPTS} attempts",
        emb.direct.len() + emb.dual.len()
    )))
}

fn place(out: &mut Matrix, map: &[usize], g: &Matrix) {
    for (a, &i) in map.iter().enumerate() {
        for (b, &j) in map.iter().enumerate() {
            out.set(i, j, g.get(a, b).clone());
        }
    }
}

fn is_skew(m: &Matrix) -> bool {
    m.transpose() == -m
}

/// Congruence to `J ⊕ ⋯ ⊕ J ⊕ 0` with `J = [[0,1],[−1,0]]`: returns `g` with
/// `g R gᵀ` in that form and the number of `J` blocks.
pub fn skew_normal_form(r: &Matrix) -> Result<(Matrix, usize)> {
    check_square(r, "R")?;
    if !is_skew(r) {
        return Err(Error::Precondition("matrix is not skew".into()));
    }
    let n = r.rows();
    let f = r.field();
    let form = |x: &Matrix, y: &Matrix| (&(&x.transpose() * r) * y).get(0, 0).clone();
    let mut rest: Vec<Matrix> = (0..n).map(|i| unit_vector(f, n, i)).collect();
    let mut rows: Vec<Matrix> = Vec::new();
    let mut pairs = 0;
    loop {
        let pair = (0..rest.len())
            .flat_map(|a| (a + 1..rest.len()).map(move |b| (a, b)))
            .find(|&(a, b)| !form(&rest[a], &rest[b]).is_zero());
        let Some((a, b)) = pair else { break };
        let x = rest[a].clone();
        let y = rest[b].scale(&form(&x, &rest[b]).inv().unwrap());
        rest.remove(b);
        rest.remove(a);
        for z in rest.iter_mut() {
            let fzy = form(z, &y);
            let fzx = form(z, &x);
            *z = &(&*z - &x.scale(&fzy)) + &y.scale(&fzx);
        }
        rows.push(x);
        rows.push(y);
        pairs += 1;
    }
    rows.extend(rest);
    Ok((from_columns(f, n, &rows)?.transpose(), pairs))
}

fn qt(m: &Matrix) -> Result<Matrix> {
    m.to_ratfunc()
}

fn pole_order(g: &Matrix) -> u64 {
    g.entries()
        .iter()
        .filter_map(|s| s.as_ratfunc().and_then(|r| r.valuation()))
        .map(|v| (-v).max(0) as u64)
        .max()
        .unwrap_or(0)
}

/// A curve whose limit action is `second` applied to the limit of `first`:
/// `second(t) · first(t^N)` with `N` beyond twice the pole order of `second`.
fn then(first: &Matrix, second: &Matrix) -> Matrix {
    let n = 2 * pole_order(second) as usize + 1;
    let slowed = if n == 1 {
        first.clone()
    } else {
        first.map(|s| Scalar::Qt(s.as_ratfunc().expect("curve over Q(t)").compose_power(n)))
    };
    second * &slowed
}

fn act(g: &Matrix, r: &Matrix, w: &Matrix) -> (Matrix, Matrix) {
    (&(g * r) * &g.transpose(), g * w)
}

fn embed_top_left(field: FieldSpec, n: usize, h: &Matrix) -> Matrix {
    let mut out = Matrix::identity(field, n);
    out.set_block(0, 0, h);
    out
}

/// A curve `g(t)` over ℚ(t) with `lim g R gᵀ = Q` and `lim g W = V`.
pub fn degeneration_witness(r: &Matrix, w: &Matrix, q: &Matrix, v: &Matrix) -> Result<Matrix> {
    for m in [w, q, v] {
        check_same_field(r, m)?;
    }
    if r.field() != FieldSpec::Rationals {
        return Err(Error::Unsupported { field: r.field(), op: "degeneration witness" });
    }
    check_square(r, "R")?;
    check_square(q, "Q")?;
    let n = r.rows();
    let k = w.cols();
    if w.rows() != n || q.rows() != n || v.rows() != n || v.cols() != k {
        return Err(Error::Dimension("R, Q must be n×n and W, V n×k".into()));
    }
    if !is_skew(r) || !is_skew(q) {
        return Err(Error::Precondition("R and Q must be skew".into()));
    }
    if w.rank() != k {
        return Err(Error::Precondition(format!("W must have rank {k}")));
    }
    if q.rank() + 2 * k > r.rank() {
        return Err(Error::Precondition(format!(
            "rank(Q) = {} exceeds rank(R) − 2k = {}",
            q.rank(),
            r.rank() as i64 - 2 * k as i64
        )));
    }
    let g = degenerate(r, w, q, v)?;
    let (gr, gw) = act(&g, &qt(r)?, &qt(w)?);
    let (lr, lw) = (gr.limit_at_zero()?, gw.limit_at_zero()?);
    if lr != *q || lw != *v || g.det().is_zero() {
        return Err(Error::Construction("degeneration limit does not match the target".into()));
    }
    Ok(g)
}

fn degenerate(r: &Matrix, w: &Matrix, q: &Matrix, v: &Matrix) -> Result<Matrix> {
    let n = r.rows();
    let k = w.cols();
    let f = FieldSpec::Rationals;
    let tf = FieldSpec::RationalFunctions;
    let t = tf.t()?;
    let (hq, sq) = skew_normal_form(q)?;
    let c = hq.inverse()?;

    if k == 0 {
        let (g0, _) = skew_normal_form(r)?;
        let diag: Vec<Scalar> = (0..n).map(|i| if i < 2 * sq { tf.one() } else { t.clone() }).collect();
        return Ok(&(&qt(&c)? * &Matrix::diag(tf, &diag)) * &qt(&g0)?);
    }

    // Last column of W becomes e_n.
    let wl = w.column(k - 1);
    let mut cols = extend_to_basis(f, n, std::slice::from_ref(&wl));
    cols.truncate(n - 1);
    cols.push(wl);
    let g1 = from_columns(f, n, &cols)?.inverse()?;
    let (r1, w1) = act(&g1, r, w);

    // Lower unipotent with last row (a, 1) pushing R's last column out of im W.
    let outside = |g2: &Matrix| {
        let (r2, w2) = act(g2, &r1, &w1);
        let col = r2.column(n - 1);
        Matrix::hstack(f, n, &[&w2, &col]).map(|m| m.rank() == k + 1).unwrap_or(false)
    };
    let mut candidates: Vec<Vec<i64>> = vec![vec![0; n - 1]];
    for j in 0..n - 1 {
        let mut a = vec![0; n - 1];
        a[j] = 1;
        candidates.push(a);
    }
    candidates.extend((1..=64i64).map(|s| (0..n as i64 - 1).map(|j| (s * (j + 3) * (j + 7)) % 11 - 5).collect()));
    let g2 = candidates
        .into_iter()
        .map(|a| {
            let mut g = Matrix::identity(f, n);
            for (j, &x) in a.iter().enumerate() {
                g.set(n - 1, j, f.from_i64(x));
            }
            g
        })
        .find(|g| outside(g))
        .ok_or_else(|| Error::Construction("no unipotent moves R's last column off im W".into()))?;
    let (r2, w2) = act(&g2, &r1, &w1);

    // Diag(g, 1) sending R's last column to e_{n−1}.
    let cp = r2.block(0, n - 1, n - 1, 1);
    let mut cols = extend_to_basis(f, n - 1, std::slice::from_ref(&cp));
    cols.truncate(n - 2);
    cols.push(cp);
    let g3 = embed_top_left(f, n, &from_columns(f, n - 1, &cols)?.inverse()?);
    let (r3, w3) = act(&g3, &r2, &w2);
    debug_assert!(r3.get(n - 2, n - 1).is_one());

    let start = qt(&(&(&g3 * &g2) * &g1))?;
    let squeeze: Vec<Scalar> = (0..n).map(|i| if i == n - 2 { t.clone() } else { tf.one() }).collect();
    let curve1 = &Matrix::diag(tf, &squeeze) * &start;

    // Sub-problem on the first n − 2 coordinates.
    let rp = r3.block(0, 0, n - 2, n - 2);
    let wp = w3.block(0, 0, n - 2, k - 1);
    let u = w3.block(n - 1, 0, 1, k - 1);
    let normal = &(&hq * q) * &hq.transpose();
    let mut qp = Matrix::zeros(f, n - 2, n - 2);
    qp.set_block(0, 0, &normal.block(0, 0, n - k - 1, n - k - 1));
    let mut vp = Matrix::zeros(f, n - 2, k - 1);
    vp.set_block(n - k - 1, 0, &Matrix::identity(f, k - 1));
    let sub = degenerate(&rp, &wp, &qp, &vp)?;
    let curve2 = then(&curve1, &embed_top_left(tf, n, &sub));

    // Move the zero coordinate n − 2 to position n − k − 1.
    let mut perm = Matrix::zeros(f, n, n);
    for old in 0..n {
        let new = match old {
            o if o < n - k - 1 => o,
            o if o < n - 2 => o + 1,
            o if o == n - 2 => n - k - 1,
            o => o,
        };
        perm.set(new, old, f.one());
    }
    let curve3 = &qt(&perm)? * &curve2;

    // Final curve Diag(I, tI_k) + (0 | Ṽ M) followed by the normal-form change.
    let mut m = Matrix::identity(f, k);
    for j in 0..k - 1 {
        m.set(k - 1, j, -u.get(0, j));
    }
    let vm = &(&hq * v) * &m;
    let mut last = Matrix::identity(tf, n);
    for i in n - k..n {
        last.set(i, i, t.clone());
    }
    last.add_to_block(0, n - k, &qt(&vm)?);
    let finish = &qt(&c)? * &last;
    Ok(then(&curve3, &finish))
}
