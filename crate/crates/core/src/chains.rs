//! Classical groups, standard diagonal embeddings and dual projections.
//!
//! Every standard embedding is described by index maps: `direct` copies carry
//! `g`, `dual` copies carry `g^{-T}` (type A only), and the remaining target
//! coordinates carry the identity. Its dual projection sums the matching
//! diagonal blocks, subtracting transposes on the dual copies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    A,
    B,
    C,
    D,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupKind::A => "A",
            GroupKind::B => "B",
            GroupKind::C => "C",
            GroupKind::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for GroupKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(GroupKind::A),
            "B" => Ok(GroupKind::B),
            "C" => Ok(GroupKind::C),
            "D" => Ok(GroupKind::D),
            _ => Err(Error::Parse(format!("unknown group type {s:?}"))),
        }
    }
}

/// `SL_n`, `O_{2n+1}`, `Sp_{2n}` or `O_{2n}` in block form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupType {
    pub kind: GroupKind,
    pub n: usize,
}

impl GroupType {
    pub fn new(kind: GroupKind, n: usize) -> Self {
        GroupType { kind, n }
    }

    pub fn matrix_size(&self) -> usize {
        match self.kind {
            GroupKind::A => self.n,
            GroupKind::B => 2 * self.n + 1,
            GroupKind::C | GroupKind::D => 2 * self.n,
        }
    }

    /// The defining bilinear form; `None` for type A.
    pub fn form(&self, field: FieldSpec) -> Option<Matrix> {
        let n = self.n;
        let i = Matrix::identity(field, n);
        match self.kind {
            GroupKind::A => None,
            GroupKind::B => {
                let mut j = Matrix::zeros(field, 2 * n + 1, 2 * n + 1);
                j.set_block(0, n + 1, &i);
                j.set_block(n + 1, 0, &i);
                j.set(n, n, field.one());
                Some(j)
            }
            GroupKind::C => {
                let mut j = Matrix::zeros(field, 2 * n, 2 * n);
                j.set_block(0, n, &i);
                j.set_block(n, 0, &-&i);
                Some(j)
            }
            GroupKind::D => {
                let mut j = Matrix::zeros(field, 2 * n, 2 * n);
                j.set_block(0, n, &i);
                j.set_block(n, 0, &i);
                Some(j)
            }
        }
    }

    fn check_size(&self, m: &Matrix) -> Result<()> {
        let s = self.matrix_size();
        if m.rows() != s || m.cols() != s {
            return Err(Error::Dimension(format!(
                "{}{} needs {s}x{s}, got {}x{}",
                self.kind,
                self.n,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    /// `tr M = 0` for type A, `MJ + JMᵀ = 0` otherwise.
    pub fn algebra_contains(&self, m: &Matrix) -> Result<bool> {
        self.check_size(m)?;
        Ok(match self.form(m.field()) {
            None => m.trace().is_zero(),
            Some(j) => (&(m * &j) + &(&j * &m.transpose())).is_zero(),
        })
    }

    /// `det g = 1` for type A, `gJgᵀ = J` otherwise.
    pub fn group_contains(&self, g: &Matrix) -> Result<bool> {
        self.check_size(g)?;
        Ok(match self.form(g.field()) {
            None => g.det().is_one(),
            Some(j) => &(g * &j) * &g.transpose() == j,
        })
    }

    /// A random element of the Lie algebra (any matrix for type A, whose dual
    /// is `gl_n / span(I)`).
    pub fn random_algebra_element<R: Rng + ?Sized>(&self, field: FieldSpec, rng: &mut R) -> Result<Matrix> {
        let n = self.n;
        let rand = |rng: &mut R, r, c| Matrix::random(field, r, c, rng);
        match self.kind {
            GroupKind::A => rand(rng, n, n),
            GroupKind::C | GroupKind::D => {
                let p = rand(rng, n, n)?;
                let (q, r) = (rand(rng, n, n)?, rand(rng, n, n)?);
                let (q, r) = if self.kind == GroupKind::C {
                    (&q + &q.transpose(), &r + &r.transpose())
                } else {
                    (&q - &q.transpose(), &r - &r.transpose())
                };
                let mut m = Matrix::zeros(field, 2 * n, 2 * n);
                m.set_block(0, 0, &p);
                m.set_block(0, n, &q);
                m.set_block(n, 0, &r);
                m.set_block(n, n, &-&p.transpose());
                Ok(m)
            }
            GroupKind::B => {
                let p = rand(rng, n, n)?;
                let q = rand(rng, n, n)?;
                let r = rand(rng, n, n)?;
                let v = rand(rng, n, 1)?;
                let w = rand(rng, n, 1)?;
                let mut m = Matrix::zeros(field, 2 * n + 1, 2 * n + 1);
                m.set_block(0, 0, &p);
                m.set_block(0, n, &v);
                m.set_block(0, n + 1, &(&q - &q.transpose()));
                m.set_block(n, 0, &-&w.transpose());
                m.set_block(n, n + 1, &-&v.transpose());
                m.set_block(n + 1, 0, &(&r - &r.transpose()));
                m.set_block(n + 1, n, &w);
                m.set_block(n + 1, n + 1, &-&p.transpose());
                Ok(m)
            }
        }
    }

    /// Product of `word_length` random generators: transvections for type A;
    /// block unipotents with (skew-)symmetric corners, `Diag(g, g^{-T})` and
    /// the swap for the others, plus the middle-row unipotents in type B.
    pub fn random_element<R: Rng + ?Sized>(&self, field: FieldSpec, rng: &mut R, word_length: usize) -> Result<Matrix> {
        if field == FieldSpec::RationalFunctions {
            return Err(Error::Unsupported { field, op: "group sampling" });
        }
        let size = self.matrix_size();
        let mut acc = Matrix::identity(field, size);
        for _ in 0..word_length {
            let g = self.random_generator(field, rng)?;
            acc = &acc * &g;
        }
        Ok(acc)
    }

    fn random_generator<R: Rng + ?Sized>(&self, field: FieldSpec, rng: &mut R) -> Result<Matrix> {
        let n = self.n;
        let size = self.matrix_size();
        if n == 0 {
            return Ok(Matrix::identity(field, size));
        }
        let id = |k| Matrix::identity(field, k);
        match self.kind {
            GroupKind::A => {
                let mut g = id(n);
                if n == 1 {
                    return Ok(g);
                }
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                g.set(i, j, field.random(rng)?);
                Ok(g)
            }
            GroupKind::C | GroupKind::D => {
                let sym = self.kind == GroupKind::C;
                let corner = |rng: &mut R| -> Result<Matrix> {
                    let b = Matrix::random(field, n, n, rng)?;
                    Ok(if sym { &b + &b.transpose() } else { &b - &b.transpose() })
                };
                let mut g = id(2 * n);
                match rng.gen_range(0..4) {
                    0 => g.set_block(0, n, &corner(rng)?),
                    1 => g.set_block(n, 0, &corner(rng)?),
                    2 => {
                        let h = Matrix::random_invertible(n, field, rng)?;
                        g.set_block(0, 0, &h);
                        g.set_block(n, n, &h.inverse()?.transpose());
                    }
                    _ => {
                        g = Matrix::zeros(field, 2 * n, 2 * n);
                        g.set_block(0, n, &id(n));
                        g.set_block(n, 0, &if sym { -&id(n) } else { id(n) });
                    }
                }
                Ok(g)
            }
            GroupKind::B => {
                let mut g = id(size);
                match rng.gen_range(0..5) {
                    0 | 1 => {
                        let b = Matrix::random(field, n, n, rng)?;
                        let b = &b - &b.transpose();
                        if rng.gen_bool(0.5) {
                            g.set_block(0, n + 1, &b);
                        } else {
                            g.set_block(n + 1, 0, &b);
                        }
                    }
                    2 => {
                        let h = Matrix::random_invertible(n, field, rng)?;
                        g.set_block(0, 0, &h);
                        g.set_block(n + 1, n + 1, &h.inverse()?.transpose());
                    }
                    3 => {
                        // [[I, a, -aaᵀ/2], [0, 1, -aᵀ], [0, 0, I]]
                        let a = Matrix::random(field, n, 1, rng)?;
                        let half = field.from_i64(2).inv().ok_or({
                            Error::Unsupported { field, op: "type B sampling in characteristic 2" }
                        })?;
                        g.set_block(0, n, &a);
                        g.set_block(0, n + 1, &(&a * &a.transpose()).scale(&-&half));
                        g.set_block(n, n + 1, &-&a.transpose());
                        if rng.gen_bool(0.5) {
                            let f = self.form(field).unwrap();
                            g = &(&f * &g) * &f;
                        }
                    }
                    _ => {
                        g = self.form(field).unwrap();
                    }
                }
                Ok(g)
            }
        }
    }
}

/// Multiplicities `(l, r, z)` of standard, dual and trivial summands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub l: usize,
    pub r: usize,
    pub z: usize,
}

impl Signature {
    pub const fn new(l: usize, r: usize, z: usize) -> Self {
        Signature { l, r, z }
    }

    /// `self ∘ inner`: the signature of applying `inner` first.
    pub fn compose(self, inner: Signature) -> Signature {
        Signature {
            l: self.l * inner.l + self.r * inner.r,
            r: self.l * inner.r + self.r * inner.l,
            z: self.l * inner.z + self.r * inner.z + self.z,
        }
    }

    /// Swap of the first two entries.
    pub fn flipped(self) -> Signature {
        Signature { l: self.r, r: self.l, z: self.z }
    }
}

/// Eventually periodic chain: `prefix` followed by `repeat` forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    pub kind: GroupKind,
    pub n1: usize,
    pub prefix: Vec<Signature>,
    pub repeat: Vec<Signature>,
}

impl ChainSpec {
    pub fn new(kind: GroupKind, n1: usize, prefix: Vec<Signature>, repeat: Vec<Signature>) -> Result<Self> {
        if repeat.is_empty() {
            return Err(Error::Precondition("repeating block must be nonempty".into()));
        }
        if n1 == 0 {
            return Err(Error::Precondition("n1 must be positive".into()));
        }
        for s in prefix.iter().chain(&repeat) {
            if s.l + s.r == 0 {
                return Err(Error::Precondition(format!("signature {s:?} has l + r = 0")));
            }
            if kind != GroupKind::A && s.r != 0 {
                return Err(Error::Precondition(format!("type {kind} needs r = 0, got {s:?}")));
            }
            if kind == GroupKind::B && (s.l + s.z) % 2 == 0 {
                return Err(Error::Precondition(format!("type B needs l + z odd, got {s:?}")));
            }
        }
        Ok(ChainSpec { kind, n1, prefix, repeat })
    }

    /// Constant chain.
    pub fn periodic(kind: GroupKind, n1: usize, sig: Signature) -> Result<Self> {
        ChainSpec::new(kind, n1, Vec::new(), vec![sig])
    }

    /// Signature of the embedding from level `i` to `i + 1` (levels from 1).
    pub fn signature(&self, i: usize) -> Signature {
        assert!(i >= 1, "levels start at 1");
        let idx = i - 1;
        if idx < self.prefix.len() {
            self.prefix[idx]
        } else {
            self.repeat[(idx - self.prefix.len()) % self.repeat.len()]
        }
    }

    /// Rank parameter `n_i` of the group at level `i`.
    pub fn rank_param(&self, i: usize) -> usize {
        let mut n = self.n1;
        for j in 1..i {
            n = next_rank(self.kind, n, self.signature(j));
        }
        n
    }

    pub fn group(&self, i: usize) -> GroupType {
        GroupType::new(self.kind, self.rank_param(i))
    }

    pub fn embedding(&self, i: usize) -> IndexEmbedding {
        IndexEmbedding::standard(self.kind, self.rank_param(i), self.signature(i))
    }

    /// Drop the first `k` levels.
    pub fn drop_prefix(&self, k: usize) -> ChainSpec {
        let n1 = self.rank_param(k + 1);
        let sigs: Vec<Signature> = (k + 1..k + 1 + self.prefix.len().saturating_sub(k)).map(|i| self.signature(i)).collect();
        let offset = (k.saturating_sub(self.prefix.len())) % self.repeat.len();
        let mut repeat = self.repeat.clone();
        repeat.rotate_left(offset);
        ChainSpec { kind: self.kind, n1, prefix: sigs, repeat }
    }

    /// The subsequence of odd levels: consecutive embeddings composed.
    pub fn compose_consecutive(&self) -> ChainSpec {
        let mut prefix = self.prefix.clone();
        let mut repeat = self.repeat.clone();
        if prefix.len() % 2 == 1 {
            prefix.push(repeat[0]);
            repeat.rotate_left(1);
        }
        if repeat.len() % 2 == 1 {
            repeat = [repeat.clone(), repeat].concat();
        }
        let pair = |v: &[Signature]| v.chunks(2).map(|c| c[1].compose(c[0])).collect::<Vec<_>>();
        ChainSpec { kind: self.kind, n1: self.n1, prefix: pair(&prefix), repeat: pair(&repeat) }
    }

    pub fn to_wire(&self) -> ChainWire {
        let enc = |v: &[Signature]| v.iter().map(|s| [s.l, s.r, s.z]).collect();
        ChainWire { kind: self.kind.to_string(), prefix: enc(&self.prefix), repeat: enc(&self.repeat), n1: self.n1 }
    }

    pub fn from_wire(w: &ChainWire) -> Result<ChainSpec> {
        let dec = |v: &[[usize; 3]]| v.iter().map(|a| Signature::new(a[0], a[1], a[2])).collect();
        ChainSpec::new(w.kind.parse()?, w.n1, dec(&w.prefix), dec(&w.repeat))
    }
}

/// JSON shape `{"type":"A","prefix":[[l,r,z],…],"repeat":[…],"n1":int}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainWire {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub prefix: Vec<[usize; 3]>,
    pub repeat: Vec<[usize; 3]>,
    pub n1: usize,
}

fn next_rank(kind: GroupKind, n: usize, s: Signature) -> usize {
    match kind {
        GroupKind::A => (s.l + s.r) * n + s.z,
        GroupKind::C | GroupKind::D => s.l * n + s.z,
        GroupKind::B => (s.l * (2 * n + 1) + s.z - 1) / 2,
    }
}

/// An embedding given by coordinate maps into the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEmbedding {
    pub source: usize,
    pub target: usize,
    pub direct: Vec<Vec<usize>>,
    pub dual: Vec<Vec<usize>>,
}

impl IndexEmbedding {
    /// The standard embedding of the given type and signature.
    pub fn standard(kind: GroupKind, n: usize, s: Signature) -> IndexEmbedding {
        match kind {
            GroupKind::A => {
                let target = (s.l + s.r) * n + s.z;
                let block = |c: usize| (0..n).map(|a| c * n + a).collect::<Vec<_>>();
                IndexEmbedding {
                    source: n,
                    target,
                    direct: (0..s.l).map(block).collect(),
                    dual: (s.l..s.l + s.r).map(block).collect(),
                }
            }
            GroupKind::C | GroupKind::D => {
                let half = s.l * n + s.z;
                let copy = |c: usize| {
                    (0..2 * n)
                        .map(|a| if a < n { c * n + a } else { half + c * n + (a - n) })
                        .collect::<Vec<_>>()
                };
                IndexEmbedding { source: 2 * n, target: 2 * half, direct: (0..s.l).map(copy).collect(), dual: Vec::new() }
            }
            GroupKind::B if s.l % 2 == 1 => {
                let h = h_form_embedding(n, s.l);
                let perm = h_to_orthogonal_permutation(n, s.l);
                let big = (s.l * (2 * n + 1) - 1) / 2;
                let insert = b_insertion(big, s.z / 2);
                h.then_map(&perm).then_map(&insert)
            }
            GroupKind::B => {
                let inner = b_even_to_d(n, s.l);
                let k = (s.z - 1) / 2;
                let insert = d_into_b(s.l * (2 * n + 1) / 2, k);
                inner.then_map(&insert)
            }
        }
    }

    /// Post-compose with a target relabelling.
    fn then_map(&self, map: &IndexMap) -> IndexEmbedding {
        let re = |v: &Vec<usize>| v.iter().map(|&i| map.image[i]).collect::<Vec<_>>();
        IndexEmbedding {
            source: self.source,
            target: map.target,
            direct: self.direct.iter().map(re).collect(),
            dual: self.dual.iter().map(re).collect(),
        }
    }

    fn fixed(&self) -> Vec<usize> {
        let mut used = vec![false; self.target];
        for c in self.direct.iter().chain(&self.dual) {
            for &i in c {
                used[i] = true;
            }
        }
        (0..self.target).filter(|&i| !used[i]).collect()
    }

    pub fn embed(&self, g: &Matrix) -> Result<Matrix> {
        if g.rows() != self.source || g.cols() != self.source {
            return Err(Error::Dimension(format!("embedding expects {0}x{0}", self.source)));
        }
        let f = g.field();
        let mut out = Matrix::zeros(f, self.target, self.target);
        for map in &self.direct {
            scatter(&mut out, map, g);
        }
        if !self.dual.is_empty() {
            let dual = g.inverse()?.transpose();
            for map in &self.dual {
                scatter(&mut out, map, &dual);
            }
        }
        for i in self.fixed() {
            out.set(i, i, f.one());
        }
        Ok(out)
    }

    /// Derivative of `embed` at the identity.
    pub fn embed_algebra(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.source || x.cols() != self.source {
            return Err(Error::Dimension(format!("embedding expects {0}x{0}", self.source)));
        }
        let mut out = Matrix::zeros(x.field(), self.target, self.target);
        for map in &self.direct {
            scatter(&mut out, map, x);
        }
        let neg_t = -&x.transpose();
        for map in &self.dual {
            scatter(&mut out, map, &neg_t);
        }
        Ok(out)
    }

    /// Dual projection with respect to the trace pairing.
    pub fn project(&self, m: &Matrix) -> Result<Matrix> {
        if m.rows() != self.target || m.cols() != self.target {
            return Err(Error::Dimension(format!("projection expects {0}x{0}", self.target)));
        }
        let mut out = Matrix::zeros(m.field(), self.source, self.source);
        for map in &self.direct {
            out = &out + &m.submatrix(map, map);
        }
        for map in &self.dual {
            out = &out - &m.submatrix(map, map).transpose();
        }
        Ok(out)
    }
}

fn scatter(out: &mut Matrix, map: &[usize], g: &Matrix) {
    for (a, &i) in map.iter().enumerate() {
        for (b, &j) in map.iter().enumerate() {
            out.set(i, j, g.get(a, b).clone());
        }
    }
}

/// A relabelling of coordinates into a larger space.
#[derive(Debug, Clone)]
struct IndexMap {
    target: usize,
    image: Vec<usize>,
}

impl IndexMap {
    fn matrix(&self, field: FieldSpec) -> Matrix {
        let mut p = Matrix::zeros(field, self.target, self.image.len());
        for (a, &i) in self.image.iter().enumerate() {
            p.set(i, a, field.one());
        }
        p
    }
}

/// `O_{2n+1} → H_{2n+1,l}`: copy `c` occupies first block `c`, middle slot `c`
/// and last block `l−1−c`.
fn h_form_embedding(n: usize, l: usize) -> IndexEmbedding {
    let copy = |c: usize| {
        (0..2 * n + 1)
            .map(|a| {
                if a < n {
                    c * n + a
                } else if a == n {
                    l * n + c
                } else {
                    l * n + l + (l - 1 - c) * n + (a - n - 1)
                }
            })
            .collect::<Vec<_>>()
    };
    IndexEmbedding { source: 2 * n + 1, target: l * (2 * n + 1), direct: (0..l).map(copy).collect(), dual: Vec::new() }
}

/// The permutation carrying the H-form to the standard odd orthogonal form:
/// blocks `(ln, k, 1, k, ln)` go to positions `(ln, k, 1, ln, reversed k)`.
fn h_to_orthogonal_permutation(n: usize, l: usize) -> IndexMap {
    let k = (l - 1) / 2;
    let ln = l * n;
    let image = (0..l * (2 * n + 1))
        .map(|i| {
            if i < ln + k + 1 {
                i
            } else if i < ln + l {
                let j = i - (ln + k + 1);
                ln + k + 1 + ln + (k - 1 - j)
            } else {
                i - (ln + l) + ln + k + 1
            }
        })
        .collect();
    IndexMap { target: l * (2 * n + 1), image }
}

/// The H-form matrix `[[0,0,I_{ln}],[0,J_l,0],[I_{ln},0,0]]`.
pub fn h_form(field: FieldSpec, n: usize, l: usize) -> Matrix {
    let ln = l * n;
    let size = l * (2 * n + 1);
    let mut j = Matrix::zeros(field, size, size);
    j.set_block(0, ln + l, &Matrix::identity(field, ln));
    j.set_block(ln + l, 0, &Matrix::identity(field, ln));
    j.set_block(ln, ln, &Matrix::anti_identity(field, l));
    j
}

/// Permutation matrix `P` with `P·H·Pᵀ` the standard form of `O_{l(2n+1)}`.
pub fn h_permutation(field: FieldSpec, n: usize, l: usize) -> Matrix {
    h_to_orthogonal_permutation(n, l).matrix(field)
}

/// Image of `A ∈ O_{2n+1}` in `H_{2n+1,l}` (before the permutation).
pub fn h_embed(g: &Matrix, l: usize) -> Result<Matrix> {
    let n = (g.rows() - 1) / 2;
    h_form_embedding(n, l).embed(g)
}

/// The block-sum map `h_{2n+1,l} → o_{2n+1}`.
pub fn h_project(m: &Matrix, n: usize, l: usize) -> Result<Matrix> {
    h_form_embedding(n, l).project(m)
}

/// `ι_{1,2z}`: `[A(N), center, D(N)] → [A(N), I_z, center, D(N), I_z]`.
fn b_insertion(big: usize, z: usize) -> IndexMap {
    let image = (0..2 * big + 1).map(|a| if a < big { a } else { a + z }).collect();
    IndexMap { target: 2 * (big + z) + 1, image }
}

/// Even `l`: `O_{2m+1} → O_{l(2m+1)}` through anti-diagonal forms.
fn b_even_to_d(m: usize, l: usize) -> IndexEmbedding {
    let s = 2 * m + 1;
    let half = l * s / 2;
    // standard odd form order → anti-diagonal form order
    let to_anti = |a: usize| if a <= m { a } else { 2 * m - (a - m - 1) };
    // anti-diagonal form order → standard even form order
    let from_anti = |i: usize| if i < half { i } else { half + (2 * half - 1 - i) };
    let copy = |c: usize| (0..s).map(|a| from_anti(c * s + to_anti(a))).collect::<Vec<_>>();
    IndexEmbedding { source: s, target: l * s, direct: (0..l).map(copy).collect(), dual: Vec::new() }
}

/// `O_{2N} → O_{2(N+k)+1}`: `[[A,B],[C,D]] ↦ [[A,,,B],[,I_k],[,,1],[C,,,D],[,,,,I_k]]`.
fn d_into_b(big: usize, k: usize) -> IndexMap {
    let image = (0..2 * big).map(|a| if a < big { a } else { a + k + 1 }).collect();
    IndexMap { target: 2 * (big + k) + 1, image }
}

/// Image of a level-`i` group element at level `i + 1`.
pub fn embed_group(chain: &ChainSpec, level: usize, g: &Matrix) -> Result<Matrix> {
    let group = chain.group(level);
    if !group.group_contains(g)? {
        return Err(Error::NotMember(format!("{}{}", group.kind, group.n)));
    }
    chain.embedding(level).embed(g)
}

/// Dual projection from level `i + 1` to level `i`.
pub fn project_dual(chain: &ChainSpec, level: usize, m: &Matrix) -> Result<Matrix> {
    chain.embedding(level).project(m)
}

/// A level-`i + 1` element projecting onto `m`: placed in one copy, or for
/// type B with even `l` split between the two paired end copies.
pub fn lift_dual(chain: &ChainSpec, level: usize, m: &Matrix) -> Result<Matrix> {
    let emb = chain.embedding(level);
    let sig = chain.signature(level);
    let f = m.field();
    let mut out = Matrix::zeros(f, emb.target, emb.target);
    match chain.kind {
        GroupKind::B if sig.l.is_multiple_of(2) => {
            let half = f.from_i64(2).inv().ok_or(Error::Unsupported { field: f, op: "type B lift" })?;
            let x = m.scale(&half);
            scatter(&mut out, &emb.direct[0], &x);
            let last = &emb.direct[sig.l - 1];
            for (a, &i) in last.iter().enumerate() {
                for (b, &j) in last.iter().enumerate() {
                    let v = out.get(i, j) + x.get(a, b);
                    out.set(i, j, v);
                }
            }
        }
        GroupKind::B => scatter(&mut out, &emb.direct[(sig.l - 1) / 2], m),
        _ => scatter(&mut out, &emb.direct[0], m),
    }
    Ok(out)
}

/// Representative of a point of the level-`i` dual space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualElement {
    pub level: usize,
    pub group: GroupType,
    pub rep: Matrix,
}

impl DualElement {
    /// Equality in the dual space: modulo scalars for type A.
    pub fn same_as(&self, other: &DualElement) -> bool {
        self.group == other.group && dual_equal(self.group.kind, &self.rep, &other.rep)
    }
}

/// `a = b` in the dual space of the given type.
pub fn dual_equal(kind: GroupKind, a: &Matrix, b: &Matrix) -> bool {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return false;
    }
    let d = a - b;
    match kind {
        GroupKind::A => is_scalar(&d),
        _ => d.is_zero(),
    }
}

pub fn is_scalar(m: &Matrix) -> bool {
    let n = m.rows();
    if n == 0 {
        return true;
    }
    let c = m.get(0, 0).clone();
    (0..n).all(|i| (0..n).all(|j| if i == j { *m.get(i, j) == c } else { m.get(i, j).is_zero() }))
}

/// Finite truncation of a point of the inverse limit: levels `1..=len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedPoint {
    pub chain: ChainSpec,
    pub levels: Vec<Matrix>,
}

impl TruncatedPoint {
    /// Compatible levels built by lifting `base` from level 1.
    pub fn lifted(chain: &ChainSpec, base: Matrix, depth: usize) -> Result<TruncatedPoint> {
        let mut levels = vec![base];
        for i in 1..depth {
            let next = lift_dual(chain, i, levels.last().unwrap())?;
            levels.push(next);
        }
        Ok(TruncatedPoint { chain: chain.clone(), levels })
    }

    pub fn zero(chain: &ChainSpec, field: FieldSpec, depth: usize) -> TruncatedPoint {
        let levels = (1..=depth)
            .map(|i| {
                let s = chain.group(i).matrix_size();
                Matrix::zeros(field, s, s)
            })
            .collect();
        TruncatedPoint { chain: chain.clone(), levels }
    }
}

/// Every consecutive pair of levels is compatible under the projection.
pub fn check_point(point: &TruncatedPoint) -> bool {
    point.levels.windows(2).enumerate().all(|(idx, w)| {
        project_dual(&point.chain, idx + 1, &w[1]).is_ok_and(|p| dual_equal(point.chain.kind, &p, &w[0]))
    })
}

/// Counts of `l_i > 1`, `r_i > 0`, `z_i > 0`; `None` is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainCounts {
    pub alpha: Option<usize>,
    pub beta: Option<usize>,
    pub gamma: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3a")]
    ThreeA,
    #[serde(rename = "3b")]
    ThreeB,
    #[serde(rename = "4a")]
    FourA,
    #[serde(rename = "4b")]
    FourB,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::One => "1",
            Case::Two => "2",
            Case::ThreeA => "3a",
            Case::ThreeB => "3b",
            Case::FourA => "4a",
            Case::FourB => "4b",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CaseTag {
    pub case: Case,
    pub counts: ChainCounts,
}

fn count(chain: &ChainSpec, pred: impl Fn(&Signature) -> bool) -> Option<usize> {
    if chain.repeat.iter().any(&pred) {
        None
    } else {
        Some(chain.prefix.iter().filter(|s| pred(s)).count())
    }
}

fn add(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    Some(a? + b?)
}

/// Whether `d | n_i` holds for all large `i`, fails for all large `i`, or
/// alternates forever.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eventually {
    Always,
    Never,
    Mixed,
}

/// Eventual divisibility of the size sequence by `d` (`d = 0` divides only 0).
pub fn eventual_divisibility(chain: &ChainSpec, d: u64) -> Eventually {
    if d == 0 {
        return Eventually::Never;
    }
    let size = |n: usize| match chain.kind {
        GroupKind::A => n as u64,
        GroupKind::B => 2 * n as u64 + 1,
        _ => 2 * n as u64,
    };
    // state: (n mod d, position in the repeat block), after the prefix
    let mut n = chain.rank_param(chain.prefix.len() + 1) as u64 % d;
    let period = chain.repeat.len();
    let mut seen = std::collections::HashMap::new();
    let mut trail = Vec::new();
    let mut pos = 0;
    while !seen.contains_key(&(n, pos)) {
        seen.insert((n, pos), trail.len());
        trail.push(size(n as usize) % d == 0);
        let s = chain.repeat[pos];
        n = (next_rank(chain.kind, n as usize, s) as u64) % d;
        pos = (pos + 1) % period;
    }
    let cycle = &trail[seen[&(n, pos)]..];
    if cycle.iter().all(|&b| b) {
        Eventually::Always
    } else if cycle.iter().all(|&b| !b) {
        Eventually::Never
    } else {
        Eventually::Mixed
    }
}

/// The six-way case split for type A chains.
pub fn classify_case(chain: &ChainSpec, characteristic: u32) -> Result<CaseTag> {
    if chain.kind != GroupKind::A {
        return Err(Error::Precondition("case split is defined for type A chains".into()));
    }
    let counts = ChainCounts {
        alpha: count(chain, |s| s.l > 1),
        beta: count(chain, |s| s.r > 0),
        gamma: count(chain, |s| s.z > 0),
    };
    let p = characteristic as u64;
    let case = if add(counts.alpha, counts.beta).is_some() {
        Case::One
    } else if counts.gamma.is_none() {
        Case::Two
    } else if counts.beta.is_none() {
        if p == 2 && eventual_divisibility(chain, 2) == Eventually::Always {
            Case::ThreeB
        } else {
            Case::ThreeA
        }
    } else if eventual_divisibility(chain, p) == Eventually::Always {
        Case::FourB
    } else {
        Case::FourA
    };
    Ok(CaseTag { case, counts })
}

/// Flip signatures with `l < r`; returns the normalized chain and the flip
/// exponents `k_i` (with `k_1 = 0`) for the levels `1..=levels`.
pub fn normalize_signatures(chain: &ChainSpec, levels: usize) -> (ChainSpec, Vec<u8>) {
    let norm = |v: &[Signature]| v.iter().map(|s| if s.l < s.r { s.flipped() } else { *s }).collect();
    let out = ChainSpec { kind: chain.kind, n1: chain.n1, prefix: norm(&chain.prefix), repeat: norm(&chain.repeat) };
    let mut flips = vec![0u8];
    for i in 1..levels {
        let s = chain.signature(i);
        let prev = *flips.last().unwrap();
        flips.push(prev ^ u8::from(s.l < s.r));
    }
    (out, flips)
}

/// The trace of a point when it is well defined, otherwise zero.
pub fn trace_invariant(point: &TruncatedPoint, characteristic: u32) -> Result<Scalar> {
    let chain = &point.chain;
    if chain.kind != GroupKind::A {
        return Err(Error::Precondition("trace is defined for type A chains".into()));
    }
    let field = point
        .levels
        .first()
        .map(Matrix::field)
        .ok_or_else(|| Error::Precondition("empty point".into()))?;
    if !check_point(point) {
        return Err(Error::Precondition("levels are not compatible".into()));
    }
    let p = characteristic as u64;
    let eventually_no_z = chain.repeat.iter().all(|s| s.z == 0);
    let eventually_no_r = chain.repeat.iter().all(|s| s.r == 0);
    let divides = eventual_divisibility(chain, p) == Eventually::Always;
    if !(divides && eventually_no_z && (p == 2 || eventually_no_r)) {
        return Ok(field.zero());
    }
    // from the first level where every later level satisfies the conditions
    let start = stable_level(chain, p);
    let traces: Vec<Scalar> = point.levels.iter().skip(start - 1).map(Matrix::trace).collect();
    match traces.split_first() {
        None => Err(Error::Precondition(format!("point needs at least {start} levels"))),
        Some((t, rest)) => {
            if rest.iter().any(|x| x != t) {
                Err(Error::Construction("trace differs between stable levels".into()))
            } else {
                Ok(t.clone())
            }
        }
    }
}

fn stable_level(chain: &ChainSpec, p: u64) -> usize {
    let mut start = chain.prefix.len() + 1;
    // size divisibility may settle after a few periods
    while !(chain.rank_param(start) as u64).is_multiple_of(p) {
        start += 1;
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    const F5: FieldSpec = FieldSpec::Finite(5);
    const F7: FieldSpec = FieldSpec::Finite(7);

    fn sig(l: usize, r: usize, z: usize) -> Signature {
        Signature::new(l, r, z)
    }

    #[test]
    fn algebra_membership_examples() {
        let q = FieldSpec::Rationals;
        let sl2 = GroupType::new(GroupKind::A, 2);
        assert!(sl2.algebra_contains(&Matrix::from_ints(q, &[&[1, 0], &[0, -1]])).unwrap());
        assert!(!sl2.algebra_contains(&Matrix::identity(q, 2)).unwrap());
        let sp4 = GroupType::new(GroupKind::C, 2);
        let m = Matrix::from_ints(q, &[&[1, 2, 3, 4], &[5, 6, 4, 7], &[8, 9, -1, -5], &[9, 1, -2, -6]]);
        assert!(sp4.algebra_contains(&m).unwrap());
        let mut bad = m.clone();
        bad.set(0, 3, q.from_i64(0));
        assert!(!sp4.algebra_contains(&bad).unwrap());
        assert!(sl2.algebra_contains(&Matrix::identity(q, 3)).is_err());
    }

    #[test]
    fn group_membership_examples() {
        let q = FieldSpec::Rationals;
        let sl2 = GroupType::new(GroupKind::A, 2);
        assert!(sl2.group_contains(&Matrix::from_ints(q, &[&[0, 1], &[-1, 0]])).unwrap());
        assert!(!sl2.group_contains(&Matrix::from_ints(q, &[&[2, 0], &[0, 1]])).unwrap());
        let sp4 = GroupType::new(GroupKind::C, 2);
        let shear = Matrix::from_ints(q, &[&[1, 0, 2, 3], &[0, 1, 3, 5], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        assert!(sp4.group_contains(&shear).unwrap());
        let swap = Matrix::from_ints(q, &[&[0, 0, 1, 0], &[0, 0, 0, 1], &[-1, 0, 0, 0], &[0, -1, 0, 0]]);
        assert!(sp4.group_contains(&swap).unwrap());
    }

    #[test]
    fn random_elements_are_members() {
        let mut rng = seeded_rng(1);
        for kind in [GroupKind::A, GroupKind::B, GroupKind::C, GroupKind::D] {
            for n in 1..=3 {
                let g = GroupType::new(kind, n);
                assert!(g.random_element(F5, &mut rng, 0).unwrap().is_identity());
                for _ in 0..20 {
                    let x = g.random_element(F5, &mut rng, 6).unwrap();
                    assert!(g.group_contains(&x).unwrap(), "{kind:?} {n}");
                    assert!(g.group_contains(&x.inverse().unwrap()).unwrap());
                    let m = g.random_algebra_element(F5, &mut rng).unwrap();
                    if kind != GroupKind::A {
                        assert!(g.algebra_contains(&m).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn signature_composition() {
        assert_eq!(sig(2, 1, 3).compose(sig(1, 1, 0)), sig(3, 3, 3));
        assert_eq!(sig(1, 0, 1).compose(sig(1, 0, 1)), sig(1, 0, 2));
        assert_eq!(sig(3, 0, 2).compose(sig(3, 0, 2)), sig(9, 0, 8));
        assert_eq!(sig(0, 1, 0).compose(sig(0, 1, 0)), sig(1, 0, 0));
    }

    #[test]
    fn chain_sizes_follow_recursion() {
        let a = ChainSpec::periodic(GroupKind::A, 2, sig(2, 1, 1)).unwrap();
        assert_eq!((1..=3).map(|i| a.rank_param(i)).collect::<Vec<_>>(), vec![2, 7, 22]);
        let b = ChainSpec::periodic(GroupKind::B, 1, sig(3, 0, 2)).unwrap();
        assert_eq!(b.group(2).matrix_size(), 3 * 3 + 2);
        let c = ChainSpec::new(GroupKind::C, 1, vec![sig(2, 0, 1)], vec![sig(3, 0, 0)]).unwrap();
        assert_eq!((1..=3).map(|i| c.rank_param(i)).collect::<Vec<_>>(), vec![1, 3, 9]);
        assert!(ChainSpec::periodic(GroupKind::B, 1, sig(3, 0, 1)).is_err());
        assert!(ChainSpec::periodic(GroupKind::C, 1, sig(1, 1, 0)).is_err());
    }

    #[test]
    fn doubling_embedding_is_block_diagonal() {
        let chain = ChainSpec::periodic(GroupKind::A, 2, sig(2, 0, 0)).unwrap();
        let a = Matrix::from_ints(F7, &[&[2, 3], &[1, 2]]);
        assert!(chain.group(1).group_contains(&a).unwrap());
        let e = embed_group(&chain, 1, &a).unwrap();
        assert_eq!(e, Matrix::block_diag(F7, &[&a, &a]));
    }

    #[test]
    fn embeddings_are_homomorphisms_into_the_target() {
        let mut rng = seeded_rng(8);
        let chains = [
            ChainSpec::periodic(GroupKind::A, 2, sig(2, 1, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(3, 0, 2)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(1, 0, 2)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(2, 0, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(4, 0, 3)).unwrap(),
            ChainSpec::periodic(GroupKind::C, 2, sig(3, 0, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::D, 2, sig(2, 0, 2)).unwrap(),
        ];
        for chain in &chains {
            let (src, dst) = (chain.group(1), chain.group(2));
            let id = Matrix::identity(F7, src.matrix_size());
            assert!(embed_group(chain, 1, &id).unwrap().is_identity());
            for _ in 0..10 {
                let g = src.random_element(F7, &mut rng, 5).unwrap();
                let h = src.random_element(F7, &mut rng, 5).unwrap();
                let eg = embed_group(chain, 1, &g).unwrap();
                assert!(dst.group_contains(&eg).unwrap(), "{chain:?}");
                let egh = embed_group(chain, 1, &(&g * &h)).unwrap();
                assert_eq!(egh, &eg * &embed_group(chain, 1, &h).unwrap());
                let ginv = embed_group(chain, 1, &g.inverse().unwrap()).unwrap();
                assert_eq!(ginv, eg.inverse().unwrap());
            }
        }
    }

    #[test]
    fn projection_examples() {
        let chain = ChainSpec::periodic(GroupKind::A, 2, sig(2, 0, 0)).unwrap();
        let p = Matrix::from_ints(F7, &[&[1, 2], &[3, 4]]);
        let p2 = Matrix::from_ints(F7, &[&[0, 5], &[6, 1]]);
        let m = Matrix::block_diag(F7, &[&p, &p2]);
        assert!(dual_equal(GroupKind::A, &project_dual(&chain, 1, &m).unwrap(), &(&p + &p2)));

        // (1,1,0): P − Qᵀ
        let chain = ChainSpec::periodic(GroupKind::A, 2, sig(1, 1, 0)).unwrap();
        let m = Matrix::from_fn(F7, 4, 4, |i, j| F7.from_i64((4 * i + j) as i64));
        let pr = project_dual(&chain, 1, &m).unwrap();
        let want = &m.block(0, 0, 2, 2) - &m.block(2, 2, 2, 2).transpose();
        assert_eq!(pr, want);
    }

    #[test]
    fn type_c_projection_takes_corner_blocks() {
        let chain = ChainSpec::periodic(GroupKind::C, 1, sig(1, 0, 1)).unwrap();
        let g = chain.group(2);
        let mut rng = seeded_rng(3);
        let m = g.random_algebra_element(F7, &mut rng).unwrap();
        let pr = project_dual(&chain, 1, &m).unwrap();
        assert_eq!(pr, m.submatrix(&[0, 2], &[0, 2]));
        assert!(chain.group(1).algebra_contains(&pr).unwrap());
    }

    #[test]
    fn projections_are_equivariant() {
        let mut rng = seeded_rng(4);
        let chains = [
            ChainSpec::periodic(GroupKind::A, 2, sig(1, 1, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::A, 1, sig(2, 1, 0)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(3, 0, 2)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(1, 0, 2)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(2, 0, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::C, 1, sig(3, 0, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::D, 2, sig(2, 0, 1)).unwrap(),
        ];
        for chain in &chains {
            let (src, dst) = (chain.group(1), chain.group(2));
            for _ in 0..20 {
                let g = src.random_element(F7, &mut rng, 5).unwrap();
                let m = dst.random_algebra_element(F7, &mut rng).unwrap();
                let eg = embed_group(chain, 1, &g).unwrap();
                let lhs = project_dual(chain, 1, &(&(&eg * &m) * &eg.inverse().unwrap())).unwrap();
                let rhs = &(&g * &project_dual(chain, 1, &m).unwrap()) * &g.inverse().unwrap();
                assert!(dual_equal(chain.kind, &lhs, &rhs), "{chain:?}");
                if chain.kind != GroupKind::A {
                    assert!(src.algebra_contains(&project_dual(chain, 1, &m).unwrap()).unwrap());
                }
            }
        }
    }

    #[test]
    fn projection_is_adjoint_to_the_algebra_embedding() {
        let mut rng = seeded_rng(12);
        for chain in [
            ChainSpec::periodic(GroupKind::A, 2, sig(2, 1, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(3, 0, 2)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(2, 0, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::D, 1, sig(3, 0, 1)).unwrap(),
        ] {
            let (src, dst) = (chain.group(1), chain.group(2));
            let emb = chain.embedding(1);
            for _ in 0..10 {
                let x = src.random_algebra_element(F7, &mut rng).unwrap();
                let m = dst.random_algebra_element(F7, &mut rng).unwrap();
                let lhs = (&emb.project(&m).unwrap() * &x).trace();
                let rhs = (&m * &emb.embed_algebra(&x).unwrap()).trace();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn lifts_project_back() {
        let mut rng = seeded_rng(5);
        for chain in [
            ChainSpec::periodic(GroupKind::A, 2, sig(1, 1, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(3, 0, 2)).unwrap(),
            ChainSpec::periodic(GroupKind::B, 1, sig(2, 0, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::C, 1, sig(2, 0, 1)).unwrap(),
            ChainSpec::periodic(GroupKind::D, 2, sig(3, 0, 0)).unwrap(),
        ] {
            for _ in 0..10 {
                let m = chain.group(1).random_algebra_element(F7, &mut rng).unwrap();
                let lift = lift_dual(&chain, 1, &m).unwrap();
                if chain.kind != GroupKind::A {
                    assert!(chain.group(2).algebra_contains(&lift).unwrap());
                }
                assert!(dual_equal(chain.kind, &project_dual(&chain, 1, &lift).unwrap(), &m));
            }
        }
    }

    #[test]
    fn h_form_permutation_gives_standard_form() {
        for (n, l) in [(1, 1), (1, 3), (2, 3), (1, 5)] {
            let p = h_permutation(F7, n, l);
            let h = h_form(F7, n, l);
            let std = GroupType::new(GroupKind::B, (l * (2 * n + 1) - 1) / 2).form(F7).unwrap();
            assert_eq!(&(&p * &h) * &p.transpose(), std);
        }
    }

    #[test]
    fn h_conversion_commutes_with_membership() {
        let mut rng = seeded_rng(6);
        let (n, l) = (1, 3);
        let p = h_permutation(F7, n, l);
        let big = GroupType::new(GroupKind::B, (l * (2 * n + 1) - 1) / 2);
        let h = h_form(F7, n, l);
        for _ in 0..20 {
            let m = big.random_algebra_element(F7, &mut rng).unwrap();
            let in_h = &(&p.transpose() * &m) * &p;
            assert!((&(&in_h * &h) + &(&h * &in_h.transpose())).is_zero());
            let g = GroupType::new(GroupKind::B, n).random_element(F7, &mut rng, 4).unwrap();
            let hg = h_embed(&g, l).unwrap();
            assert_eq!(&(&hg * &h) * &hg.transpose(), h);
            assert!(big.group_contains(&(&(&p * &hg) * &p.transpose())).unwrap());
            let back = h_project(&in_h, n, l).unwrap();
            assert!(GroupType::new(GroupKind::B, n).algebra_contains(&back).unwrap());
        }
    }

    #[test]
    fn classification_examples() {
        let c = |s: Signature, n1, ch| classify_case(&ChainSpec::periodic(GroupKind::A, n1, s).unwrap(), ch).unwrap();
        assert_eq!(c(sig(1, 0, 1), 1, 0).case, Case::One);
        let two = c(sig(2, 0, 1), 1, 0);
        assert_eq!(two.case, Case::Two);
        assert_eq!((two.counts.alpha, two.counts.gamma), (None, None));
        assert_eq!(c(sig(2, 1, 0), 2, 2).case, Case::ThreeB);
        assert_eq!(c(sig(2, 1, 0), 2, 3).case, Case::ThreeA);
        assert_eq!(c(sig(2, 1, 0), 1, 2).case, Case::ThreeA);
        assert_eq!(c(sig(2, 0, 0), 1, 2).case, Case::FourB);
        assert_eq!(c(sig(3, 0, 0), 1, 2).case, Case::FourA);
        assert_eq!(c(sig(3, 0, 0), 1, 0).case, Case::FourA);
        assert!(classify_case(&ChainSpec::periodic(GroupKind::C, 1, sig(2, 0, 0)).unwrap(), 0).is_err());
        let finite = ChainSpec::new(GroupKind::A, 1, vec![sig(2, 1, 0), sig(3, 0, 0)], vec![sig(1, 0, 1)]).unwrap();
        let t = classify_case(&finite, 0).unwrap();
        assert_eq!(t.case, Case::One);
        assert_eq!((t.counts.alpha, t.counts.beta, t.counts.gamma), (Some(2), Some(1), None));
    }

    #[test]
    fn classification_survives_prefix_drop_and_composition() {
        let chains = [
            ChainSpec::new(GroupKind::A, 3, vec![sig(1, 0, 2)], vec![sig(2, 1, 0), sig(1, 0, 0)]).unwrap(),
            ChainSpec::new(GroupKind::A, 1, vec![sig(2, 0, 1)], vec![sig(3, 0, 0)]).unwrap(),
            ChainSpec::new(GroupKind::A, 2, vec![], vec![sig(2, 0, 1), sig(1, 1, 0)]).unwrap(),
            ChainSpec::new(GroupKind::A, 5, vec![sig(1, 1, 1)], vec![sig(1, 0, 1)]).unwrap(),
        ];
        for chain in &chains {
            for ch in [0, 2, 3] {
                let base = classify_case(chain, ch).unwrap().case;
                assert_eq!(classify_case(&chain.drop_prefix(1), ch).unwrap().case, base);
                assert_eq!(classify_case(&chain.drop_prefix(3), ch).unwrap().case, base);
                let composed = chain.compose_consecutive();
                assert_eq!(composed.rank_param(2), chain.rank_param(3));
                assert_eq!(classify_case(&composed, ch).unwrap().case, base);
            }
        }
    }

    #[test]
    fn normalization_flips_and_is_idempotent() {
        let chain = ChainSpec::periodic(GroupKind::A, 1, sig(0, 1, 0)).unwrap();
        let (norm, _) = normalize_signatures(&chain, 3);
        assert_eq!(norm.repeat, vec![sig(1, 0, 0)]);
        let (again, flips) = normalize_signatures(&norm, 3);
        assert_eq!(again, norm);
        assert_eq!(flips, vec![0, 0, 0]);

        let chain = ChainSpec::new(GroupKind::A, 2, vec![sig(1, 2, 0), sig(2, 0, 1)], vec![sig(0, 1, 1), sig(3, 1, 0)]).unwrap();
        let (norm, flips) = normalize_signatures(&chain, 9);
        for i in 1..9 {
            let s = chain.signature(i);
            let exp = (flips[i - 1] + flips[i]) % 2;
            let want = if exp == 1 { s.flipped() } else { s };
            assert_eq!(norm.signature(i), want);
            assert!(want.l >= want.r);
            assert_eq!(norm.rank_param(i + 1), chain.rank_param(i + 1));
        }
    }

    #[test]
    fn trace_invariant_examples() {
        let f2 = FieldSpec::Finite(2);
        let chain = ChainSpec::periodic(GroupKind::A, 2, sig(2, 0, 0)).unwrap();
        let z = TruncatedPoint::zero(&chain, f2, 3);
        assert!(trace_invariant(&z, 2).unwrap().is_zero());
        let pt = TruncatedPoint::lifted(&chain, Matrix::unit(f2, 2, 2, 0, 0), 4).unwrap();
        assert!(check_point(&pt));
        assert!(pt.levels.iter().all(|m| m.trace().is_one()));
        assert!(trace_invariant(&pt, 2).unwrap().is_one());

        let growing = ChainSpec::periodic(GroupKind::A, 2, sig(2, 0, 1)).unwrap();
        let pt = TruncatedPoint::lifted(&growing, Matrix::unit(f2, 2, 2, 0, 0), 3).unwrap();
        assert!(trace_invariant(&pt, 2).unwrap().is_zero());
    }

    #[test]
    fn check_point_examples() {
        let chain = ChainSpec::periodic(GroupKind::A, 2, sig(1, 1, 1)).unwrap();
        assert!(check_point(&TruncatedPoint::zero(&chain, F7, 3)));
        let mut rng = seeded_rng(9);
        let base = Matrix::random(F7, 2, 2, &mut rng).unwrap();
        let mut pt = TruncatedPoint::lifted(&chain, base, 3).unwrap();
        assert!(check_point(&pt));
        let s = pt.levels[1].rows();
        pt.levels[1] = &pt.levels[1] + &Matrix::identity(F7, s);
        assert!(check_point(&pt));
        let v = pt.levels[1].get(0, 1) + &F7.one();
        pt.levels[1].set(0, 1, v);
        assert!(!check_point(&pt));
    }

    #[test]
    fn chain_json_round_trip() {
        let chain = ChainSpec::new(GroupKind::A, 3, vec![sig(1, 0, 2)], vec![sig(2, 1, 0)]).unwrap();
        let json = serde_json::to_value(chain.to_wire()).unwrap();
        assert_eq!(json["type"], "A");
        assert_eq!(json["repeat"][0], serde_json::json!([2, 1, 0]));
        let back: ChainWire = serde_json::from_value(json).unwrap();
        assert_eq!(ChainSpec::from_wire(&back).unwrap(), chain);
    }
}
