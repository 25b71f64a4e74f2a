//! Block identities for conjugation by the moving matrices `A(λ)`, `B(μ)`.
//!
//! The conjugate is polynomial of degree at most 2 in the group parameter, so
//! agreement at four parameter values is an identity. Block entries are
//! coordinate polynomials in the first pass and random integers in the second.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde_json::json;

use super::VerificationReport;
use crate::chains::{h_form, h_permutation, GroupKind, GroupType};
use crate::coordpoly::PolyMatrix;
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityCase {
    Two,
    ThreeA,
    FourA,
    C,
    D,
    B1,
    B2,
}

impl IdentityCase {
    pub const ALL: [IdentityCase; 7] =
        [IdentityCase::Two, IdentityCase::ThreeA, IdentityCase::FourA, IdentityCase::C, IdentityCase::D, IdentityCase::B1, IdentityCase::B2];
}

impl fmt::Display for IdentityCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IdentityCase::Two => "2",
            IdentityCase::ThreeA => "3a",
            IdentityCase::FourA => "4a",
            IdentityCase::C => "C",
            IdentityCase::D => "D",
            IdentityCase::B1 => "B1",
            IdentityCase::B2 => "B2",
        };
        f.write_str(s)
    }
}

impl FromStr for IdentityCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IdentityCase::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown identity case {s:?}")))
    }
}

const QQ: FieldSpec = FieldSpec::Rationals;

type Extract = Box<dyn Fn(&PolyMatrix) -> PolyMatrix>;
type Formula = Box<dyn Fn(&PolyMatrix, &Scalar) -> PolyMatrix>;
type Sampler = Box<dyn Fn(&mut crate::Rng) -> Result<Matrix>>;

/// `actual(conjugate)` must equal `expected(original, parameter)`.
struct BlockCheck {
    name: String,
    actual: Extract,
    expected: Formula,
}

struct Setup {
    ctx: GroupType,
    params: serde_json::Value,
    symbolic: PolyMatrix,
    sample: Sampler,
    conjugator: Box<dyn Fn(&Scalar) -> Matrix>,
    checks: Vec<BlockCheck>,
}

fn blk(h: &PolyMatrix, r0: usize, c0: usize, rows: usize, cols: usize) -> PolyMatrix {
    h.block(r0, c0, rows, cols)
}

fn check(name: impl Into<String>, actual: impl Fn(&PolyMatrix) -> PolyMatrix + 'static, expected: impl Fn(&PolyMatrix, &Scalar) -> PolyMatrix + 'static) -> BlockCheck {
    BlockCheck { name: name.into(), actual: Box::new(actual), expected: Box::new(expected) }
}

/// Identity plus `λ · I_m` blocks at the given block positions (signs attached).
fn block_unipotent(size: usize, m: usize, entries: &[(usize, usize, i64)], lambda: &Scalar) -> Matrix {
    let mut a = Matrix::identity(QQ, size);
    for &(r, c, sign) in entries {
        for t in 0..m {
            a.set(r + t, c + t, times(sign, lambda));
        }
    }
    a
}

fn times(k: i64, x: &Scalar) -> Scalar {
    &x.field().from_i64(k) * x
}

fn random_gl(n: usize) -> Sampler {
    Box::new(move |rng| Matrix::random(QQ, n, n, rng))
}

/// Case (2): `H ∈ gl_{(l+r)m+z}` with an `R`-row below the `Q` blocks.
fn case_two() -> Setup {
    let (m, l, r, z) = (1, 2, 1, 1);
    let n = (l + r) * m + z;
    let ctx = GroupType::new(GroupKind::A, n);
    let rrow = (l + r) * m;
    let mut checks = vec![check("P'11", move |h| blk(h, 0, 0, m, m), move |h, lam| blk(h, 0, 0, m, m).add(&blk(h, rrow, 0, m, m).scale(lam)))];
    for j in 1..l {
        checks.push(check(format!("P'{0}{0}", j + 1), move |h| blk(h, j * m, j * m, m, m), move |h, _| blk(h, j * m, j * m, m, m)));
    }
    for j in 0..r {
        let o = (l + j) * m;
        checks.push(check(format!("Q'{0}{0}", j + 1), move |h| blk(h, o, o, m, m), move |h, _| blk(h, o, o, m, m)));
    }
    Setup {
        ctx,
        params: json!({"m": m, "l": l, "r": r, "z": z}),
        symbolic: PolyMatrix::generic(QQ, ctx),
        sample: random_gl(n),
        conjugator: Box::new(move |lam| block_unipotent(n, m, &[(0, rrow, 1)], lam)),
        checks,
    }
}

/// Case (3a): `Λ` in block `(1, l+1)`, `R_{11}` in block `(l+1, 1)`.
fn case_three_a() -> Setup {
    let (m, l, r) = (1, 2, 2);
    let n = (l + r) * m;
    let ctx = GroupType::new(GroupKind::A, n);
    let q0 = l * m;
    let mut checks = vec![
        check("P'11", move |h| blk(h, 0, 0, m, m), move |h, lam| blk(h, 0, 0, m, m).add(&blk(h, q0, 0, m, m).scale(lam))),
        check("Q'11", move |h| blk(h, q0, q0, m, m), move |h, lam| blk(h, q0, q0, m, m).sub(&blk(h, q0, 0, m, m).scale(lam))),
    ];
    for j in 1..l {
        checks.push(check(format!("P'{0}{0}", j + 1), move |h| blk(h, j * m, j * m, m, m), move |h, _| blk(h, j * m, j * m, m, m)));
    }
    for j in 1..r {
        let o = (l + j) * m;
        checks.push(check(format!("Q'{0}{0}", j + 1), move |h| blk(h, o, o, m, m), move |h, _| blk(h, o, o, m, m)));
    }
    Setup {
        ctx,
        params: json!({"m": m, "l": l, "r": r}),
        symbolic: PolyMatrix::generic(QQ, ctx),
        sample: random_gl(n),
        conjugator: Box::new(move |lam| block_unipotent(n, m, &[(0, q0, 1)], lam)),
        checks,
    }
}

/// Case (4a): `Λ` in block `(1, 2)` of `gl_{lm}`.
fn case_four_a() -> Setup {
    let (m, l) = (1, 3);
    let n = l * m;
    let ctx = GroupType::new(GroupKind::A, n);
    let mut checks = vec![
        check("P'11", move |h| blk(h, 0, 0, m, m), move |h, lam| blk(h, 0, 0, m, m).add(&blk(h, m, 0, m, m).scale(lam))),
        check("P'22", move |h| blk(h, m, m, m, m), move |h, lam| blk(h, m, m, m, m).sub(&blk(h, m, 0, m, m).scale(lam))),
    ];
    for j in 2..l {
        checks.push(check(format!("P'{0}{0}", j + 1), move |h| blk(h, j * m, j * m, m, m), move |h, _| blk(h, j * m, j * m, m, m)));
    }
    Setup {
        ctx,
        params: json!({"m": m, "l": l}),
        symbolic: PolyMatrix::generic(QQ, ctx),
        sample: random_gl(n),
        conjugator: Box::new(move |lam| block_unipotent(n, m, &[(0, m, 1)], lam)),
        checks,
    }
}

/// Types C and D: `A(λ) = [[I, B], [0, I]]` with `B = λ(E_{12} ± E_{21})` on
/// `m`-blocks, so that `P' = P + BR` and `Q' = Q + BS − PB − BRB`.
fn case_cd(kind: GroupKind) -> Setup {
    let (m, l) = if kind == GroupKind::C { (1, 3) } else { (2, 3) };
    let n = l * m;
    let ctx = GroupType::new(kind, n);
    let sign: i64 = if kind == GroupKind::C { 1 } else { -1 };
    let p = move |h: &PolyMatrix, i: usize, j: usize| blk(h, i * m, j * m, m, m);
    let q = move |h: &PolyMatrix, i: usize, j: usize| blk(h, i * m, n + j * m, m, m);
    let r = move |h: &PolyMatrix, i: usize, j: usize| blk(h, n + i * m, j * m, m, m);
    let s = move |h: &PolyMatrix, i: usize, j: usize| blk(h, n + i * m, n + j * m, m, m);
    let sc = move |lam: &Scalar| times(sign, lam);
    let sq = |lam: &Scalar| lam * lam;
    let mut checks = vec![
        // P'11 = P11 + λR21
        check("P'11", move |h| p(h, 0, 0), move |h, lam| p(h, 0, 0).add(&r(h, 1, 0).scale(lam))),
        // P'22 = P22 ± λR12
        check("P'22", move |h| p(h, 1, 1), move |h, lam| p(h, 1, 1).add(&r(h, 0, 1).scale(&sc(lam)))),
        // Q'11 = Q11 + λS21 ∓ λP12 ± λ²R22
        check("Q'11", move |h| q(h, 0, 0), move |h, lam| {
            q(h, 0, 0).add(&s(h, 1, 0).scale(lam)).sub(&p(h, 0, 1).scale(&sc(lam))).sub(&r(h, 1, 1).scale(&sc(&sq(lam))))
        }),
        // Q'22 = Q22 ± λS12 − λP21 ± λ²R11
        check("Q'22", move |h| q(h, 1, 1), move |h, lam| {
            q(h, 1, 1).add(&s(h, 0, 1).scale(&sc(lam))).sub(&p(h, 1, 0).scale(lam)).sub(&r(h, 0, 0).scale(&sc(&sq(lam))))
        }),
        check("R'", move |h| blk(h, n, 0, n, n), move |h, _| blk(h, n, 0, n, n)),
    ];
    for k in 2..l {
        checks.push(check(format!("P'{0}{0}", k + 1), move |h| p(h, k, k), move |h, _| p(h, k, k)));
        checks.push(check(format!("Q'{0}{0}", k + 1), move |h| q(h, k, k), move |h, _| q(h, k, k)));
    }
    let sample: Sampler = Box::new(move |rng| ctx.random_algebra_element(QQ, rng));
    Setup {
        ctx,
        params: json!({"type": kind.to_string(), "m": m, "l": l, "n": n}),
        symbolic: PolyMatrix::generic(QQ, ctx),
        sample,
        conjugator: Box::new(move |lam| block_unipotent(2 * n, m, &[(0, n + m, 1), (m, n, sign)], lam)),
        checks,
    }
}

/// Block coordinates of `h_{2n+1,l}`: first group `ln`, middle `l`, last `ln`.
#[derive(Clone, Copy)]
struct HLayout {
    n: usize,
    l: usize,
}

impl HLayout {
    fn ln(self) -> usize {
        self.l * self.n
    }
    fn size(self) -> usize {
        self.l * (2 * self.n + 1)
    }
    fn third(self) -> usize {
        self.ln() + self.l
    }
    /// `P_{ij}`, `Q_{ij}`, `R_{ij}`, `S_{ij}` are `n × n`; `V_{ij}`, `W_{ij}` are `n × 1`.
    fn p(self, h: &PolyMatrix, i: usize, j: usize) -> PolyMatrix {
        blk(h, i * self.n, j * self.n, self.n, self.n)
    }
    fn q(self, h: &PolyMatrix, i: usize, j: usize) -> PolyMatrix {
        blk(h, i * self.n, self.third() + j * self.n, self.n, self.n)
    }
    fn r(self, h: &PolyMatrix, i: usize, j: usize) -> PolyMatrix {
        blk(h, self.third() + i * self.n, j * self.n, self.n, self.n)
    }
    fn s(self, h: &PolyMatrix, i: usize, j: usize) -> PolyMatrix {
        blk(h, self.third() + i * self.n, self.third() + j * self.n, self.n, self.n)
    }
    fn v(self, h: &PolyMatrix, i: usize, j: usize) -> PolyMatrix {
        blk(h, i * self.n, self.ln() + j, self.n, 1)
    }
    fn w(self, h: &PolyMatrix, i: usize, j: usize) -> PolyMatrix {
        blk(h, self.third() + i * self.n, self.ln() + j, self.n, 1)
    }
    fn diag_sum(self, h: &PolyMatrix, f: fn(Self, &PolyMatrix, usize, usize) -> PolyMatrix) -> PolyMatrix {
        (1..self.l).fold(f(self, h, 0, 0), |acc, k| acc.add(&f(self, h, k, k)))
    }
    fn anti_sum(self, h: &PolyMatrix, f: fn(Self, &PolyMatrix, usize, usize) -> PolyMatrix) -> PolyMatrix {
        let l = self.l;
        (1..l).fold(f(self, h, 0, l - 1), |acc, k| acc.add(&f(self, h, k, l - 1 - k)))
    }
    /// The generic element of `h_{2n+1,l}`: `Πᵀ X Π` for generic `X ∈ o_{l(2n+1)}`.
    fn generic(self) -> (GroupType, PolyMatrix) {
        let ctx = GroupType::new(GroupKind::B, (self.size() - 1) / 2);
        let pi = h_permutation(QQ, self.n, self.l);
        (ctx, PolyMatrix::generic(QQ, ctx).left_mul(&pi.transpose()).right_mul(&pi))
    }
    fn sampler(self) -> Sampler {
        Box::new(move |rng| {
            let ctx = GroupType::new(GroupKind::B, (self.size() - 1) / 2);
            let pi = h_permutation(QQ, self.n, self.l);
            let x = ctx.random_algebra_element(QQ, rng)?;
            Ok(&(&pi.transpose() * &x) * &pi)
        })
    }
}

/// `A(λ) = [[I,0,B],[0,I,0],[0,0,I]]` with `B_{1l} = −λI`, `B_{l1} = λI`.
fn case_b1() -> Setup {
    let hl = HLayout { n: 1, l: 3 };
    let (n, l, ln, third) = (hl.n, hl.l, hl.ln(), hl.third());
    let (ctx, symbolic) = hl.generic();
    // B as a constant ln × ln matrix at parameter λ.
    let bmat = move |lam: &Scalar| {
        let mut b = Matrix::zeros(QQ, ln, ln);
        for t in 0..n {
            b.set(t, (l - 1) * n + t, -lam);
            b.set((l - 1) * n + t, t, lam.clone());
        }
        PolyMatrix::from_matrix(&b, ctx)
    };
    let first = move |h: &PolyMatrix| blk(h, 0, 0, ln, ln);
    let rr = move |h: &PolyMatrix| blk(h, third, 0, ln, ln);
    let ss = move |h: &PolyMatrix| blk(h, third, third, ln, ln);
    let qq = move |h: &PolyMatrix| blk(h, 0, third, ln, ln);
    let vv = move |h: &PolyMatrix| blk(h, 0, ln, ln, l);
    let ww = move |h: &PolyMatrix| blk(h, third, ln, ln, l);
    let checks = vec![
        check("sum P'_kk", move |h| hl.diag_sum(h, HLayout::p), move |h, lam| {
            hl.diag_sum(h, HLayout::p).add(&hl.r(h, 0, l - 1).sub(&hl.r(h, l - 1, 0)).scale(lam))
        }),
        check("anti-sum Q'", move |h| hl.anti_sum(h, HLayout::q), move |h, lam| {
            let linear = hl.s(h, 0, 0).sub(&hl.s(h, l - 1, l - 1)).add(&hl.p(h, 0, 0)).sub(&hl.p(h, l - 1, l - 1));
            let quad = hl.r(h, 0, l - 1).add(&hl.r(h, l - 1, 0));
            hl.anti_sum(h, HLayout::q).add(&linear.scale(lam)).sub(&quad.scale(&(lam * lam)))
        }),
        check("anti-sum R'", move |h| hl.anti_sum(h, HLayout::r), move |h, _| hl.anti_sum(h, HLayout::r)),
        check("sum V'_kk", move |h| hl.diag_sum(h, HLayout::v), move |h, lam| {
            hl.diag_sum(h, HLayout::v).add(&hl.w(h, 0, l - 1).sub(&hl.w(h, l - 1, 0)).scale(lam))
        }),
        check("anti-sum W'", move |h| hl.anti_sum(h, HLayout::w), move |h, _| hl.anti_sum(h, HLayout::w)),
        check("P'", first, move |h, lam| first(h).add(&bmat(lam).mul(&rr(h)))),
        check("V'", vv, move |h, lam| vv(h).add(&bmat(lam).mul(&ww(h)))),
        check("Q'", qq, move |h, lam| {
            let b = bmat(lam);
            qq(h).add(&b.mul(&ss(h))).sub(&first(h).mul(&b)).sub(&b.mul(&rr(h)).mul(&b))
        }),
        check("S'", ss, move |h, lam| ss(h).sub(&rr(h).mul(&bmat(lam)))),
        check("R'", rr, move |h, _| rr(h)),
        check("W'", ww, move |h, _| ww(h)),
    ];
    let size = hl.size();
    Setup {
        ctx,
        params: json!({"n": n, "l": l}),
        symbolic,
        sample: hl.sampler(),
        conjugator: Box::new(move |lam| {
            let mut a = Matrix::identity(QQ, size);
            for t in 0..n {
                a.set(t, third + (l - 1) * n + t, -lam);
                a.set((l - 1) * n + t, third + t, lam.clone());
            }
            a
        }),
        checks,
    }
}

/// `B(μ) = Diag(I, g, I)` with `g = I + μ(E_{21} − E_{l,l−1})`; acts on `W` by
/// `W ↦ W g⁻¹`.
fn case_b2() -> Setup {
    let hl = HLayout { n: 1, l: 5 };
    let (n, l, ln, third) = (hl.n, hl.l, hl.ln(), hl.third());
    let (ctx, symbolic) = hl.generic();
    let ww = move |h: &PolyMatrix| blk(h, third, ln, ln, l);
    let ginv = move |mu: &Scalar| {
        let mut g = Matrix::identity(QQ, l);
        g.set(1, 0, -mu);
        g.set(l - 1, l - 2, mu.clone());
        PolyMatrix::from_matrix(&g, ctx)
    };
    let checks = vec![
        check("W'_1l - W'_l1", move |h| hl.w(h, 0, l - 1).sub(&hl.w(h, l - 1, 0)), move |h, mu| {
            hl.w(h, 0, l - 1).sub(&hl.w(h, l - 1, 0)).add(&hl.w(h, l - 1, 1).scale(mu))
        }),
        check("anti-sum W'", move |h| hl.anti_sum(h, HLayout::w), move |h, mu| {
            hl.anti_sum(h, HLayout::w).add(&hl.w(h, 1, l - 1).sub(&hl.w(h, l - 1, 1)).scale(mu))
        }),
        check("W'", ww, move |h, mu| ww(h).mul(&ginv(mu))),
        check("sum P'_kk", move |h| hl.diag_sum(h, HLayout::p), move |h, _| hl.diag_sum(h, HLayout::p)),
        check("anti-sum Q'", move |h| hl.anti_sum(h, HLayout::q), move |h, _| hl.anti_sum(h, HLayout::q)),
        check("anti-sum R'", move |h| hl.anti_sum(h, HLayout::r), move |h, _| hl.anti_sum(h, HLayout::r)),
    ];
    let size = hl.size();
    Setup {
        ctx,
        params: json!({"n": n, "l": l}),
        symbolic,
        sample: hl.sampler(),
        conjugator: Box::new(move |mu| {
            let mut a = Matrix::identity(QQ, size);
            a.set(ln + 1, ln, mu.clone());
            a.set(ln + l - 1, ln + l - 2, -mu);
            a
        }),
        checks,
    }
}

fn setup(case: IdentityCase) -> Setup {
    match case {
        IdentityCase::Two => case_two(),
        IdentityCase::ThreeA => case_three_a(),
        IdentityCase::FourA => case_four_a(),
        IdentityCase::C => case_cd(GroupKind::C),
        IdentityCase::D => case_cd(GroupKind::D),
        IdentityCase::B1 => case_b1(),
        IdentityCase::B2 => case_b2(),
    }
}

const PARAMETERS: [i64; 4] = [0, 1, 2, 3];
const NUMERIC_SAMPLES: usize = 3;

fn conjugator_in_group(s: &Setup, a: &Matrix) -> Result<bool> {
    match s.ctx.kind {
        GroupKind::A => Ok(a.det().is_one()),
        GroupKind::B => {
            let h = h_form(QQ, 1, a.rows() / 3);
            Ok(&(a * &h) * &a.transpose() == h)
        }
        _ => s.ctx.group_contains(a),
    }
}

/// Checks the displayed block formulas; with `corrupt` the first formula uses
/// `−λ`, which must produce a failing report.
pub fn verify_conjugation_identity<R: Rng + ?Sized>(case: IdentityCase, corrupt: bool, rng: &mut R) -> Result<VerificationReport> {
    let id = format!("identity-{case}");
    let s = setup(case);
    let mut params = s.params.clone();
    params["corrupt"] = json!(corrupt);
    let mut rng = crate::seeded_rng(rng.gen());
    let mut points: Vec<(&str, PolyMatrix)> = vec![("symbolic", s.symbolic.clone())];
    for _ in 0..NUMERIC_SAMPLES {
        points.push(("numeric", PolyMatrix::from_matrix(&(s.sample)(&mut rng)?, s.ctx)));
    }
    for lam in PARAMETERS.map(|x| QQ.from_i64(x)) {
        let a = (s.conjugator)(&lam);
        if !conjugator_in_group(&s, &a)? {
            return Err(Error::Construction(format!("conjugator for {case} left the group")));
        }
        let ainv = a.inverse()?;
        for (pass, h) in &points {
            let conj = h.left_mul(&a).right_mul(&ainv);
            for (idx, c) in s.checks.iter().enumerate() {
                let used = if corrupt && idx == 0 { -&lam } else { lam.clone() };
                let got = (c.actual)(&conj);
                let want = (c.expected)(h, &used);
                if let Some((i, j)) = got.first_difference(&want) {
                    let witness = json!({
                        "check": c.name,
                        "pass": pass,
                        "parameter": lam.to_string(),
                        "entry": [i, j],
                        "expected": want.get(i, j).to_string(),
                        "actual": got.get(i, j).to_string(),
                    });
                    return Ok(VerificationReport::fail(&id, params, witness));
                }
            }
        }
    }
    Ok(VerificationReport::pass(&id, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Verdict;
    use crate::seeded_rng;

    #[test]
    fn all_cases_hold() {
        let mut rng = seeded_rng(0);
        for case in IdentityCase::ALL {
            let r = verify_conjugation_identity(case, false, &mut rng).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{case}: {}", r.witness);
        }
    }

    #[test]
    fn corrupted_cases_fail_with_witness() {
        let mut rng = seeded_rng(0);
        for case in IdentityCase::ALL {
            let r = verify_conjugation_identity(case, true, &mut rng).unwrap();
            assert_eq!(r.verdict, Verdict::Fail, "{case}");
            assert_eq!(r.witness["pass"], "symbolic");
            assert_eq!(r.witness["parameter"], "1");
        }
    }

    #[test]
    fn case_two_at_zero_is_identity() {
        let s = setup(IdentityCase::Two);
        assert!((s.conjugator)(&QQ.zero()).is_identity());
    }

    #[test]
    fn case_two_symbolic_entry() {
        let s = setup(IdentityCase::Two);
        let lam = QQ.from_i64(2);
        let a = (s.conjugator)(&lam);
        let conj = s.symbolic.left_mul(&a).right_mul(&a.inverse().unwrap());
        assert_eq!(conj.get(0, 0).to_string(), "p[1,1] + 2*p[4,1]");
    }
}
