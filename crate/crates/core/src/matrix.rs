//! Dense matrices over an exact field.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::gf;
use crate::poly::UniPoly;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

/// Result of Gauss–Jordan elimination: `transform · M = rref`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rref {
    pub rank: usize,
    pub rref: Matrix,
    pub transform: Matrix,
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eigenvalue {
    pub value: Scalar,
    pub geometric_multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMode {
    /// `g M g⁻¹`
    Similarity,
    /// `g M gᵀ`
    Congruence,
}

impl Matrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix { field, rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        Matrix::from_fn(field, n, n, |i, j| if i == j { field.one() } else { field.zero() })
    }

    pub fn from_fn(field: FieldSpec, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { field, rows, cols, data }
    }

    pub fn from_rows(field: FieldSpec, rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data: Vec<Scalar> = rows.into_iter().flatten().collect();
        if let Some(bad) = data.iter().find(|s| s.field() != field) {
            return Err(Error::FieldMismatch(field, bad.field()));
        }
        Ok(Matrix { field, rows: r, cols: c, data })
    }

    /// Integer entries, reduced into `field`.
    pub fn from_ints(field: FieldSpec, rows: &[&[i64]]) -> Self {
        let c = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == c), "ragged rows");
        Matrix::from_fn(field, rows.len(), c, |i, j| field.from_i64(rows[i][j]))
    }

    /// Residues in row-major order.
    pub fn from_residues(p: u32, rows: usize, cols: usize, vals: &[u32]) -> Self {
        assert_eq!(vals.len(), rows * cols);
        Matrix {
            field: FieldSpec::Finite(p),
            rows,
            cols,
            data: vals.iter().map(|&v| Scalar::Fp { v: v % p, p }).collect(),
        }
    }

    /// Matrix unit with a one at `(i, j)` (0-based).
    pub fn unit(field: FieldSpec, rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Matrix::zeros(field, rows, cols);
        m.set(i, j, field.one());
        m
    }

    pub fn diag(field: FieldSpec, entries: &[Scalar]) -> Self {
        let n = entries.len();
        Matrix::from_fn(field, n, n, |i, j| if i == j { entries[i].clone() } else { field.zero() })
    }

    pub fn block_diag(field: FieldSpec, blocks: &[&Matrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Matrix::zeros(field, rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            m.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        m
    }

    /// The `n × n` matrix with ones on the anti-diagonal.
    pub fn anti_identity(field: FieldSpec, n: usize) -> Self {
        Matrix::from_fn(field, n, n, |i, j| if i + j + 1 == n { field.one() } else { field.zero() })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        debug_assert_eq!(v.field(), self.field);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Matrix::identity(self.field, self.rows)
    }

    /// Residues of a GF(p) matrix.
    pub fn residues(&self) -> Option<Vec<u32>> {
        self.data.iter().map(Scalar::residue).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.field, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        Matrix { data: self.data.iter().map(|a| a * c).collect(), ..self.clone() }
    }

    pub fn map(&self, f: impl FnMut(&Scalar) -> Scalar) -> Matrix {
        let data: Vec<Scalar> = self.data.iter().map(f).collect();
        let field = data.first().map_or(self.field, Scalar::field);
        Matrix { field, rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> Scalar {
        (0..self.rows.min(self.cols)).fold(self.field.zero(), |acc, i| &acc + self.get(i, i))
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(self.field, rows, cols, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn add_to_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                let v = self.get(r0 + i, c0 + j) + b.get(i, j);
                self.set(r0 + i, c0 + j, v);
            }
        }
    }

    /// `M[rows, cols]` for arbitrary index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.field, rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    pub fn column(&self, j: usize) -> Matrix {
        self.block(0, j, self.rows, 1)
    }

    /// Side-by-side concatenation; all parts share the row count.
    pub fn hstack(field: FieldSpec, rows: usize, parts: &[&Matrix]) -> Result<Matrix> {
        if parts.iter().any(|p| p.rows != rows || p.field != field) {
            return Err(Error::Dimension("hstack parts must share rows and field".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Matrix::zeros(field, rows, cols);
        let mut c0 = 0;
        for p in parts {
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        Ok(out)
    }

    /// Some `X` with `self · X = b`, or `None` if the system is inconsistent.
    pub fn solve(&self, b: &Matrix) -> Result<Option<Matrix>> {
        if b.rows != self.rows || b.field != self.field {
            return Err(Error::Dimension(format!(
                "cannot solve {}x{} against {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let r = self.rank_and_rref();
        let tb = &r.transform * b;
        if (r.rank..self.rows).any(|i| (0..b.cols).any(|j| !tb.get(i, j).is_zero())) {
            return Ok(None);
        }
        let mut x = Matrix::zeros(self.field, self.cols, b.cols);
        for (row, &pc) in r.pivots.iter().enumerate() {
            for j in 0..b.cols {
                x.set(pc, j, tb.get(row, j).clone());
            }
        }
        Ok(Some(x))
    }

    /// Leading principal `k × k` block.
    pub fn leading(&self, k: usize) -> Matrix {
        self.block(0, 0, k, k)
    }

    pub fn rank(&self) -> usize {
        if let FieldSpec::Finite(p) = self.field {
            let mut a = self.residues().unwrap();
            return gf::rank_mod_p(p, self.rows, self.cols, &mut a);
        }
        let mut a = self.clone();
        let mut rank = 0;
        for c in 0..a.cols {
            if rank == a.rows {
                break;
            }
            let Some(piv) = (rank..a.rows).find(|&r| !a.get(r, c).is_zero()) else {
                continue;
            };
            a.swap_rows(piv, rank);
            let inv = a.get(rank, c).inv().unwrap();
            for r in rank + 1..a.rows {
                if a.get(r, c).is_zero() {
                    continue;
                }
                let f = a.get(r, c) * &inv;
                a.row_axpy(r, rank, &f, c);
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    /// `row[dst] -= f · row[src]`, from column `from` on.
    fn row_axpy(&mut self, dst: usize, src: usize, f: &Scalar, from: usize) {
        for j in from..self.cols {
            let s = self.get(src, j);
            if s.is_zero() {
                continue;
            }
            let v = self.get(dst, j) - &(f * s);
            self.data[dst * self.cols + j] = v;
        }
    }

    fn scale_row(&mut self, r: usize, f: &Scalar) {
        for j in 0..self.cols {
            let v = self.get(r, j) * f;
            self.data[r * self.cols + j] = v;
        }
    }

    pub fn rank_and_rref(&self) -> Rref {
        let mut a = self.clone();
        let mut t = Matrix::identity(self.field, self.rows);
        let mut pivots = Vec::new();
        let mut rank = 0;
        for c in 0..a.cols {
            if rank == a.rows {
                break;
            }
            let Some(piv) = (rank..a.rows).find(|&r| !a.get(r, c).is_zero()) else {
                continue;
            };
            a.swap_rows(piv, rank);
            t.swap_rows(piv, rank);
            let inv = a.get(rank, c).inv().unwrap();
            a.scale_row(rank, &inv);
            t.scale_row(rank, &inv);
            for r in 0..a.rows {
                if r == rank || a.get(r, c).is_zero() {
                    continue;
                }
                let f = a.get(r, c).clone();
                a.row_axpy(r, rank, &f, 0);
                t.row_axpy(r, rank, &f, 0);
            }
            pivots.push(c);
            rank += 1;
        }
        Rref { rank, rref: a, transform: t, pivots }
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let r = self.rank_and_rref();
        if r.rank < self.rows {
            return Err(Error::Singular);
        }
        Ok(r.transform)
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn det(&self) -> Scalar {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let mut a = self.clone();
        let mut det = self.field.one();
        for c in 0..a.cols {
            let Some(piv) = (c..a.rows).find(|&r| !a.get(r, c).is_zero()) else {
                return self.field.zero();
            };
            if piv != c {
                a.swap_rows(piv, c);
                det = -det;
            }
            det = &det * a.get(c, c);
            let inv = a.get(c, c).inv().unwrap();
            for r in c + 1..a.rows {
                if a.get(r, c).is_zero() {
                    continue;
                }
                let f = a.get(r, c) * &inv;
                a.row_axpy(r, c, &f, c);
            }
        }
        det
    }

    /// Basis of the right kernel, as columns of the returned matrix.
    pub fn kernel(&self) -> Matrix {
        let r = self.rank_and_rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !r.pivots.contains(c)).collect();
        let mut k = Matrix::zeros(self.field, self.cols, free.len());
        for (idx, &f) in free.iter().enumerate() {
            k.set(f, idx, self.field.one());
            for (row, &pc) in r.pivots.iter().enumerate() {
                k.set(pc, idx, -r.rref.get(row, f));
            }
        }
        k
    }

    /// `det(xI − M)` by Berkowitz's division-free recursion.
    pub fn char_poly(&self) -> Result<UniPoly> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let f = self.field;
        let n = self.rows;
        // coefficients highest degree first
        let mut c = vec![f.one()];
        for k in 1..=n {
            let lead = self.leading(k - 1);
            let row = self.block(k - 1, 0, 1, k - 1);
            let mut col = self.block(0, k - 1, k - 1, 1);
            let mut toeplitz = vec![f.one(), -self.get(k - 1, k - 1)];
            for _ in 0..k.saturating_sub(1) {
                toeplitz.push(-(&row * &col).get(0, 0));
                col = &lead * &col;
            }
            let mut next = vec![f.zero(); k + 1];
            for (i, slot) in next.iter_mut().enumerate() {
                for (j, cj) in c.iter().enumerate().take(i.min(k - 1) + 1) {
                    *slot = &*slot + &(&toeplitz[i - j] * cj);
                }
            }
            c = next;
        }
        c.reverse();
        Ok(UniPoly::new(f, c))
    }

    /// All K-rational eigenvalues with geometric multiplicities, ascending.
    pub fn eigen_data(&self) -> Result<Vec<Eigenvalue>> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let candidates: Vec<Scalar> = match self.field {
            FieldSpec::Finite(_) => self.field.elements()?,
            FieldSpec::Rationals => self.char_poly()?.rational_roots()?.into_iter().map(Scalar::Q).collect(),
            f => return Err(Error::Unsupported { field: f, op: "eigenvalue search" }),
        };
        Ok(candidates
            .into_iter()
            .filter_map(|lambda| {
                let r = self.shifted(&lambda).rank();
                (r < n).then(|| Eigenvalue { value: lambda, geometric_multiplicity: n - r })
            })
            .collect())
    }

    /// `M − λI`.
    pub fn shifted(&self, lambda: &Scalar) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            let v = m.get(i, i) - lambda;
            m.set(i, i, v);
        }
        m
    }

    pub fn transform(&self, g: &Matrix, mode: TransformMode) -> Result<Matrix> {
        if g.field != self.field {
            return Err(Error::FieldMismatch(self.field, g.field));
        }
        if !self.is_square() || !g.is_square() || g.rows != self.rows {
            return Err(Error::Dimension(format!(
                "cannot transform {}x{} by {}x{}",
                self.rows, self.cols, g.rows, g.cols
            )));
        }
        let gi = g.inverse()?;
        Ok(match mode {
            TransformMode::Similarity => &(g * self) * &gi,
            TransformMode::Congruence => &(g * self) * &g.transpose(),
        })
    }

    /// Entrywise value at `t = 0` of a ℚ(t) matrix.
    pub fn limit_at_zero(&self) -> Result<Matrix> {
        if self.field != FieldSpec::RationalFunctions {
            return Err(Error::Unsupported { field: self.field, op: "limit at t=0" });
        }
        let zero = BigRational::zero();
        let mut data = Vec::with_capacity(self.data.len());
        for (idx, s) in self.data.iter().enumerate() {
            let v = s
                .as_ratfunc()
                .unwrap()
                .eval(&zero)
                .ok_or(Error::PoleAtZero { row: idx / self.cols + 1, col: idx % self.cols + 1 })?;
            data.push(Scalar::Q(v));
        }
        Ok(Matrix { field: FieldSpec::Rationals, rows: self.rows, cols: self.cols, data })
    }

    /// Embed a rational matrix into ℚ(t) as constants.
    pub fn to_ratfunc(&self) -> Result<Matrix> {
        match self.field {
            FieldSpec::RationalFunctions => Ok(self.clone()),
            FieldSpec::Rationals => Ok(Matrix {
                field: FieldSpec::RationalFunctions,
                rows: self.rows,
                cols: self.cols,
                data: self
                    .data
                    .iter()
                    .map(|s| FieldSpec::RationalFunctions.from_rational(s.as_rational().unwrap()))
                    .collect::<Result<_>>()?,
            }),
            f => Err(Error::Unsupported { field: f, op: "embedding into Q(t)" }),
        }
    }

    pub fn random<R: Rng + ?Sized>(field: FieldSpec, rows: usize, cols: usize, rng: &mut R) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(field.random(rng)?);
        }
        Ok(Matrix { field, rows, cols, data })
    }

    /// Rejection-sampled invertible matrix; deterministic in the rng state.
    pub fn random_invertible<R: Rng + ?Sized>(n: usize, field: FieldSpec, rng: &mut R) -> Result<Matrix> {
        loop {
            let m = Matrix::random(field, n, n, rng)?;
            if m.is_invertible() {
                return Ok(m);
            }
        }
    }

    /// Random matrix of exact rank `k`, as a product of full-rank factors.
    pub fn random_of_rank<R: Rng + ?Sized>(field: FieldSpec, n: usize, k: usize, rng: &mut R) -> Result<Matrix> {
        loop {
            let a = Matrix::random(field, n, k, rng)?;
            let b = Matrix::random(field, k, n, rng)?;
            let m = &a * &b;
            if m.rank() == k {
                return Ok(m);
            }
        }
    }

    pub fn to_wire(&self) -> MatrixWire {
        MatrixWire {
            field: self.field.to_string(),
            rows: (0..self.rows).map(|i| self.row(i).iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    pub fn from_wire(w: &MatrixWire) -> Result<Matrix> {
        let field: FieldSpec = w.field.parse()?;
        let rows = w
            .rows
            .iter()
            .map(|r| r.iter().map(|s| field.parse_scalar(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(field, rows)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_wire()).expect("matrix serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Matrix> {
        let w: MatrixWire = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Matrix::from_wire(&w)
    }
}

/// JSON shape `{"field": "gf:5", "rows": [["1", "2/3"], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixWire {
    pub field: String,
    pub rows: Vec<Vec<String>>,
}

impl Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        self.get(i, j)
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        Matrix {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
            ..self.clone()
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        Matrix {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
            ..self.clone()
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix { data: self.data.iter().map(|a| -a).collect(), ..self.clone() }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in mul");
        if let (FieldSpec::Finite(p), FieldSpec::Finite(q)) = (self.field, rhs.field) {
            assert_eq!(p, q);
            let (a, b) = (self.residues().unwrap(), rhs.residues().unwrap());
            let p64 = p as u64;
            let mut out = vec![0u32; self.rows * rhs.cols];
            for i in 0..self.rows {
                for j in 0..rhs.cols {
                    let mut s = 0u64;
                    for k in 0..self.cols {
                        s = (s + a[i * self.cols + k] as u64 * b[k * rhs.cols + j] as u64) % p64;
                    }
                    out[i * rhs.cols + j] = s as u32;
                }
            }
            return Matrix::from_residues(p, self.rows, rhs.cols, &out);
        }
        let f = self.field;
        Matrix::from_fn(f, self.rows, rhs.cols, |i, j| {
            let mut s = f.zero();
            for k in 0..self.cols {
                let (a, b) = (self.get(i, k), rhs.get(k, j));
                if !a.is_zero() && !b.is_zero() {
                    s = &s + &(a * b);
                }
            }
            s
        })
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Matrix {
            type Output = Matrix;
            fn $m(self, rhs: Matrix) -> Matrix {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Matrix> for Matrix {
            type Output = Matrix;
            fn $m(self, rhs: &Matrix) -> Matrix {
                (&self).$m(rhs)
            }
        }
        impl $tr<Matrix> for &Matrix {
            type Output = Matrix;
            fn $m(self, rhs: Matrix) -> Matrix {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        -&self
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|s| s.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}
