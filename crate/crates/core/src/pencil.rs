//! Tuple ranks, shift ranks and the off-diagonal block criterion.

use std::cmp::Reverse;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::gf;
use crate::matrix::Matrix;

/// Largest number of projective points or group elements we enumerate.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Nonempty list of equal-shape matrices over one field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PencilTuple(Vec<Matrix>);

impl PencilTuple {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        let first = matrices.first().ok_or_else(|| Error::Precondition("empty tuple".into()))?;
        for m in &matrices[1..] {
            if m.field() != first.field() {
                return Err(Error::FieldMismatch(first.field(), m.field()));
            }
            if (m.rows(), m.cols()) != (first.rows(), first.cols()) {
                return Err(Error::Dimension("tuple entries differ in shape".into()));
            }
        }
        Ok(PencilTuple(matrices))
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn field(&self) -> FieldSpec {
        self.0[0].field()
    }

    /// `Σ μ_i Q_i`.
    pub fn combine(&self, coords: &[Scalar]) -> Matrix {
        let mut acc = Matrix::zeros(self.field(), self.0[0].rows(), self.0[0].cols());
        for (m, c) in self.0.iter().zip(coords) {
            if !c.is_zero() {
                acc = &acc + &m.scale(c);
            }
        }
        acc
    }

    /// Leading principal truncation of every entry.
    pub fn truncate(&self, n: usize) -> PencilTuple {
        PencilTuple(self.0.iter().map(|m| m.block(0, 0, n, n)).collect())
    }
}

/// Point of projective space with first nonzero coordinate equal to one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProjectivePoint(pub Vec<Scalar>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftRank {
    pub lambda: Option<Scalar>,
    pub rank: usize,
}

/// `min rank(P − λI)` over λ in the base field, preferring λ = 0 on ties and
/// then the smallest λ. Without any eigenvalue in K the result is unshifted
/// with rank n.
pub fn shift_rank(p: &Matrix) -> Result<ShiftRank> {
    let n = p.rows();
    let eig = p.eigen_data()?;
    let best = eig
        .iter()
        .min_by_key(|e| (Reverse(e.geometric_multiplicity), !e.value.is_zero(), e.value.clone()));
    Ok(match best {
        Some(e) => ShiftRank { lambda: Some(e.value.clone()), rank: n - e.geometric_multiplicity },
        None => ShiftRank { lambda: None, rank: n },
    })
}

/// Tuple rank of `(P, I_n)`.
pub fn tuple_rank_identity(p: &Matrix) -> Result<usize> {
    Ok(shift_rank(p)?.rank.min(p.rows()))
}

/// Every point of ℙ^{k−1}(GF(p)) in lexicographic order of residues.
pub fn projective_points(field: FieldSpec, k: usize) -> Result<Vec<ProjectivePoint>> {
    let q = field.order().ok_or(Error::Unsupported { field, op: "projective enumeration" })?;
    let count = projective_count(q, k);
    if count > ENUMERATION_BUDGET {
        return Err(Error::Budget { needed: count, budget: ENUMERATION_BUDGET });
    }
    let mut out = Vec::with_capacity(count as usize);
    for lead in (0..k).rev() {
        let free = k - lead - 1;
        for code in 0..q.pow(free as u32) {
            let mut coords = vec![field.zero(); k];
            coords[lead] = field.one();
            let mut c = code;
            for slot in coords[lead + 1..].iter_mut().rev() {
                *slot = field.from_i64((c % q) as i64);
                c /= q;
            }
            out.push(ProjectivePoint(coords));
        }
    }
    Ok(out)
}

fn projective_count(q: u64, k: usize) -> u128 {
    ((q as u128).pow(k as u32) - 1) / (q as u128 - 1)
}

/// Minimal rank over all projective combinations, with the lexicographically
/// least minimizing point.
pub fn pencil_rank_enumerate(t: &PencilTuple) -> Result<(usize, ProjectivePoint)> {
    let mut best: Option<(usize, ProjectivePoint)> = None;
    for pt in projective_points(t.field(), t.len())? {
        let r = t.combine(&pt.0).rank();
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, pt));
        }
    }
    Ok(best.expect("projective space is nonempty"))
}

/// Tuple ranks of the leading truncations at sizes `1..=n_max`.
pub fn projection_stabilization(t: &PencilTuple, n_max: usize) -> Result<Vec<usize>> {
    if n_max > t.matrices()[0].rows().min(t.matrices()[0].cols()) {
        return Err(Error::Dimension(format!("n_max {n_max} exceeds the matrix size")));
    }
    let mut ranks = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let (r, _) = pencil_rank_enumerate(&t.truncate(n))?;
        if ranks.last().is_some_and(|&prev| r < prev) {
            return Err(Error::Construction(format!("truncation ranks decreased at size {n}")));
        }
        ranks.push(r);
    }
    Ok(ranks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Sampled { trials: usize },
}

/// A conjugator and index sets with `rank((gPg⁻¹)[rows, cols]) > k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffDiagWitness {
    pub g: Matrix,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl OffDiagWitness {
    pub fn block_rank(&self, p: &Matrix) -> Result<usize> {
        let q = p.transform(&self.g, crate::matrix::TransformMode::Similarity)?;
        Ok(q.submatrix(&self.rows, &self.cols).rank())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffDiagVerdict {
    pub holds: bool,
    pub witness: Option<OffDiagWitness>,
}

/// Order of GL_n(GF(q)).
pub fn gl_order(q: u64, n: usize) -> u128 {
    let qn = (q as u128).pow(n as u32);
    (0..n).map(|i| qn - (q as u128).pow(i as u32)).product()
}

/// All of GL_n(GF(p)) with inverses, in lexicographic residue order.
#[derive(Debug, Clone)]
pub struct GlTable {
    p: u32,
    n: usize,
    elements: Vec<(Vec<u32>, Vec<u32>)>,
}

impl GlTable {
    pub fn new(field: FieldSpec, n: usize) -> Result<Self> {
        let FieldSpec::Finite(p) = field else {
            return Err(Error::Unsupported { field, op: "group enumeration" });
        };
        let order = gl_order(p as u64, n);
        let raw = (p as u128).pow((n * n) as u32);
        if order > ENUMERATION_BUDGET || raw > 16 * ENUMERATION_BUDGET {
            return Err(Error::Budget { needed: order, budget: ENUMERATION_BUDGET });
        }
        let elements = gf::general_linear_group(p, n)
            .into_iter()
            .map(|g| {
                let gi = gf::inverse_mod_p(p, n, &g).expect("enumerated element is invertible");
                (g, gi)
            })
            .collect();
        Ok(GlTable { p, n, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec::Finite(self.p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(g, g⁻¹)` as residue arrays.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], &[u32])> {
        self.elements.iter().map(|(g, h)| (g.as_slice(), h.as_slice()))
    }
}

fn check_offdiag_pre(p: &Matrix, k: usize, m: usize) -> Result<()> {
    if !p.is_square() {
        return Err(Error::Dimension("P must be square".into()));
    }
    if !(p.rows() >= 2 * m && m > k) {
        return Err(Error::Precondition(format!("need n >= 2m >= 2(k+1), got n={}, m={m}, k={k}", p.rows())));
    }
    Ok(())
}

/// Exhaustive check over a precomputed group table, blocks `[m] × ([2m] \ [m])`.
pub fn offdiag_exhaustive(table: &GlTable, p: &Matrix, k: usize, m: usize) -> Result<OffDiagVerdict> {
    check_offdiag_pre(p, k, m)?;
    if p.field() != table.field() || p.rows() != table.n {
        return Err(Error::Dimension("group table does not match P".into()));
    }
    let n = table.n;
    let q = table.p as u64;
    let pm = p.residues().unwrap();
    let mut left = vec![0u32; m * n];
    let mut block = vec![0u32; m * m];
    for (g, gi) in table.iter() {
        for i in 0..m {
            for j in 0..n {
                let mut s = 0u64;
                for t in 0..n {
                    s += g[i * n + t] as u64 * pm[t * n + j] as u64 % q;
                }
                left[i * n + j] = (s % q) as u32;
            }
        }
        for i in 0..m {
            for j in 0..m {
                let mut s = 0u64;
                for t in 0..n {
                    s += left[i * n + t] as u64 * gi[t * n + m + j] as u64 % q;
                }
                block[i * m + j] = (s % q) as u32;
            }
        }
        if gf::rank_mod_p(table.p, m, m, &mut block) > k {
            return Ok(OffDiagVerdict {
                holds: false,
                witness: Some(OffDiagWitness {
                    g: Matrix::from_residues(table.p, n, n, g),
                    rows: (0..m).collect(),
                    cols: (m..2 * m).collect(),
                }),
            });
        }
    }
    Ok(OffDiagVerdict { holds: true, witness: None })
}

/// Whether every conjugate of `P` has off-diagonal `m × m` blocks of rank at
/// most `k`. A failure always carries a witness; a sampled pass is statistical.
pub fn offdiag_criterion_check<R: Rng + ?Sized>(
    p: &Matrix,
    k: usize,
    m: usize,
    mode: CheckMode,
    rng: &mut R,
) -> Result<OffDiagVerdict> {
    check_offdiag_pre(p, k, m)?;
    match mode {
        CheckMode::Exhaustive => {
            let table = GlTable::new(p.field(), p.rows())?;
            offdiag_exhaustive(&table, p, k, m)
        }
        CheckMode::Sampled { trials } => {
            let n = p.rows();
            for _ in 0..trials {
                let g = Matrix::random_invertible(n, p.field(), rng)?;
                let idx = sample(rng, n, 2 * m).into_vec();
                let mut rows = idx[..m].to_vec();
                let mut cols = idx[m..].to_vec();
                rows.sort_unstable();
                cols.sort_unstable();
                let w = OffDiagWitness { g, rows, cols };
                if w.block_rank(p)? > k {
                    return Ok(OffDiagVerdict { holds: false, witness: Some(w) });
                }
            }
            Ok(OffDiagVerdict { holds: true, witness: None })
        }
    }
}
