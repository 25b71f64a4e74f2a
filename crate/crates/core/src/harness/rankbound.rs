//! Contrapositive sampling for the bounded-rank lemmas.
//!
//! A sample `M` whose blocks exceed the conclusion's bounds must have a
//! conjugate violating the hypothesis. Samples inside the bounds are vacuous.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde_json::json;

use super::{Verdict, VerificationReport};
use crate::chains::h_form;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankLemma {
    /// Symplectic: `rk R ≤ m` on the orbit.
    Sp,
    /// Even orthogonal: `rk R ≤ 2m` on the orbit.
    Od,
    /// H-form: `rk R ≤ m` and dependent outer `W` columns on the orbit.
    B,
}

impl fmt::Display for RankLemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankLemma::Sp => "sp",
            RankLemma::Od => "od",
            RankLemma::B => "b",
        })
    }
}

impl FromStr for RankLemma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sp" => Ok(RankLemma::Sp),
            "od" => Ok(RankLemma::Od),
            "b" => Ok(RankLemma::B),
            _ => Err(Error::Parse(format!("unknown rank lemma {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankBoundParams {
    pub lemma: RankLemma,
    pub field: FieldSpec,
    pub n: usize,
    pub m: usize,
    /// Number of H-form copies; only used by [`RankLemma::B`].
    pub l: usize,
    pub trials: usize,
}

impl RankBoundParams {
    pub fn default_for(lemma: RankLemma) -> Self {
        let n = if lemma == RankLemma::B { 2 } else { 8 };
        RankBoundParams { lemma, field: FieldSpec::Finite(101), n, m: 1, l: 3, trials: 200 }
    }
}

const MAX_ATTEMPTS: usize = 64;
const REQUIRED_RATE: f64 = 0.95;

/// A random symmetric (`skew = false`) or skew matrix of rank at most `r`.
fn form_of_rank<R: Rng + ?Sized>(field: FieldSpec, n: usize, r: usize, skew: bool, rng: &mut R) -> Result<Matrix> {
    let r = if skew { r / 2 * 2 } else { r }.min(n);
    let x = Matrix::random(field, n, r, rng)?;
    let d = if skew {
        let h = r / 2;
        let mut j = Matrix::zeros(field, r, r);
        j.set_block(0, h, &Matrix::identity(field, h));
        j.set_block(h, 0, &-&Matrix::identity(field, h));
        j
    } else {
        Matrix::identity(field, r)
    };
    Ok(&(&x * &d) * &x.transpose())
}

fn random_skew<R: Rng + ?Sized>(field: FieldSpec, n: usize, rng: &mut R) -> Result<Matrix> {
    let a = Matrix::random(field, n, n, rng)?;
    Ok(&a - &a.transpose())
}

/// Sampling, bounds and generators for one lemma.
struct Lemma {
    p: RankBoundParams,
}

impl Lemma {
    fn size(&self) -> usize {
        match self.p.lemma {
            RankLemma::B => self.p.l * (2 * self.p.n + 1),
            _ => 2 * self.p.n,
        }
    }

    fn ln(&self) -> usize {
        self.p.l * self.p.n
    }

    /// Lower-left block.
    fn r_block(&self, m: &Matrix) -> Matrix {
        let (size, half) = (self.size(), self.off_block());
        m.block(size - half, 0, half, half)
    }

    /// Upper-right block.
    fn q_block(&self, m: &Matrix) -> Matrix {
        let (size, half) = (self.size(), self.off_block());
        m.block(0, size - half, half, half)
    }

    fn off_block(&self) -> usize {
        match self.p.lemma {
            RankLemma::B => self.ln(),
            _ => self.p.n,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Matrix> {
        let RankBoundParams { field, n, m, .. } = self.p;
        match self.p.lemma {
            RankLemma::Sp | RankLemma::Od => {
                let skew = self.p.lemma == RankLemma::Od;
                let bound = if skew { 2 * m } else { m };
                let p = Matrix::random_of_rank(field, n, rng.gen_range(0..=n), rng)?;
                let q = form_of_rank(field, n, rng.gen_range(0..=n), skew, rng)?;
                let r = form_of_rank(field, n, rng.gen_range(0..=bound), skew, rng)?;
                let mut out = Matrix::zeros(field, 2 * n, 2 * n);
                out.set_block(0, 0, &p);
                out.set_block(0, n, &q);
                out.set_block(n, 0, &r);
                out.set_block(n, n, &-&p.transpose());
                Ok(out)
            }
            RankLemma::B => {
                // M ∈ h iff M·H is skew, and H² = I; so M = K·H for skew K.
                // Blocks of K·H: P = K13, V = K12·J, Q = K11, R = K33, W = K32·J.
                let (ln, l) = (self.ln(), self.p.l);
                let mut k = Matrix::zeros(field, self.size(), self.size());
                let third = ln + l;
                k.set_block(0, 0, &form_of_rank(field, ln, rng.gen_range(0..=ln), true, rng)?);
                k.set_block(third, third, &form_of_rank(field, ln, rng.gen_range(0..=m), true, rng)?);
                k.set_block(ln, ln, &random_skew(field, l, rng)?);
                let k12 = Matrix::random(field, ln, l, rng)?;
                k.set_block(0, ln, &k12);
                k.set_block(ln, 0, &-&k12.transpose());
                let k13 = Matrix::random_of_rank(field, ln, rng.gen_range(0..=ln), rng)?;
                k.set_block(0, third, &k13);
                k.set_block(third, 0, &-&k13.transpose());
                Ok(&k * &h_form(field, self.p.n, l))
            }
        }
    }

    /// Whether the conclusion's rank bounds fail for `m`.
    fn exceeds_bounds(&self, x: &Matrix) -> bool {
        let RankBoundParams { n, m, .. } = self.p;
        let q = self.q_block(x).rank();
        let p = x.block(0, 0, self.off_block(), self.off_block()).rank();
        match self.p.lemma {
            RankLemma::Sp => q > m || (n > 6 * m && (2 * p > 3 * m || x.rank() > 5 * m)),
            RankLemma::Od => q > 2 * m || (n >= 20 * m + 2 && x.rank() > 10 * m),
            RankLemma::B => {
                let c = m + 4;
                let v = x.block(0, self.ln(), self.ln(), self.p.l).rank();
                q > c || 2 * p > 3 * c || v > 4 * c || x.rank() > 22 * c
            }
        }
    }

    /// Whether `x` violates the lemma's hypothesis.
    fn violates_hypothesis(&self, x: &Matrix) -> bool {
        let m = self.p.m;
        let r = self.r_block(x).rank();
        match self.p.lemma {
            RankLemma::Sp => r > m,
            RankLemma::Od => r > 2 * m,
            RankLemma::B => {
                let (ln, l) = (self.ln(), self.p.l);
                let w = x.block(ln + l, ln, ln, l);
                let outer = w.submatrix(&(0..ln).collect::<Vec<_>>(), &[0, l - 1]);
                r > m || outer.rank() == 2
            }
        }
    }

    fn generator<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Matrix> {
        let field = self.p.field;
        let size = self.size();
        let half = self.off_block();
        let id = |k| Matrix::identity(field, k);
        let mut g = id(size);
        match self.p.lemma {
            RankLemma::Sp | RankLemma::Od => {
                let skew = self.p.lemma == RankLemma::Od;
                let corner = |rng: &mut R| -> Result<Matrix> {
                    let a = Matrix::random(field, half, half, rng)?;
                    Ok(if skew { &a - &a.transpose() } else { &a + &a.transpose() })
                };
                match rng.gen_range(0..3) {
                    // (0 I; ∓I A)
                    0 => {
                        g = Matrix::zeros(field, size, size);
                        g.set_block(0, half, &id(half));
                        g.set_block(half, 0, &if skew { id(half) } else { -&id(half) });
                        if rng.gen_bool(0.5) {
                            g.set_block(half, half, &corner(rng)?);
                        }
                    }
                    1 => g.set_block(0, half, &corner(rng)?),
                    _ => {
                        let h = Matrix::random_invertible(half, field, rng)?;
                        g.set_block(0, 0, &h);
                        g.set_block(half, half, &h.inverse()?.transpose());
                    }
                }
            }
            RankLemma::B => {
                let (ln, l) = (self.ln(), self.p.l);
                let third = ln + l;
                match rng.gen_range(0..4) {
                    // swap of the outer groups
                    0 => {
                        g = Matrix::zeros(field, size, size);
                        g.set_block(0, third, &id(ln));
                        g.set_block(ln, ln, &id(l));
                        g.set_block(third, 0, &id(ln));
                    }
                    // [[I, A, −½AJAᵀ], [0, I, −JAᵀ], [0, 0, I]]
                    1 => {
                        let a = Matrix::random(field, ln, l, rng)?;
                        let j = Matrix::anti_identity(field, l);
                        let half_inv = field.from_i64(2).inv().ok_or(Error::Unsupported { field, op: "H-form shear" })?;
                        let c = (&(&a * &j) * &a.transpose()).scale(&-&half_inv);
                        g.set_block(0, ln, &a);
                        g.set_block(0, third, &c);
                        g.set_block(ln, third, &-&(&j * &a.transpose()));
                    }
                    2 => g.set_block(0, third, &random_skew(field, ln, rng)?),
                    _ => {
                        let h = Matrix::random_invertible(ln, field, rng)?;
                        g.set_block(0, 0, &h);
                        g.set_block(third, third, &h.inverse()?.transpose());
                    }
                }
            }
        }
        Ok(g)
    }

    fn find_witness<R: Rng + ?Sized>(&self, x: &Matrix, rng: &mut R) -> Result<Option<Matrix>> {
        for _ in 0..MAX_ATTEMPTS {
            let mut g = self.generator(rng)?;
            for _ in 1..rng.gen_range(1..=3) {
                g = &g * &self.generator(rng)?;
            }
            if self.violates_hypothesis(&(&(&g * x) * &g.inverse()?)) {
                return Ok(Some(g));
            }
        }
        Ok(None)
    }
}

/// Samples `trials` algebra elements and searches for hypothesis-violating
/// conjugates of those exceeding the bounds.
pub fn verify_rank_bound_samples<R: Rng + ?Sized>(params: &RankBoundParams, rng: &mut R) -> Result<VerificationReport> {
    let id = format!("rankbound-{}", params.lemma);
    let lemma = Lemma { p: *params };
    if params.lemma == RankLemma::B && (params.l < 2 || params.field.characteristic() == 2) {
        return Err(Error::Precondition("H-form sampling needs l ≥ 2 and odd characteristic".into()));
    }
    let mut report_params = json!({
        "field": params.field.to_string(),
        "n": params.n,
        "m": params.m,
        "trials": params.trials,
    });
    if params.lemma == RankLemma::B {
        report_params["l"] = json!(params.l);
    }
    let (mut violating, mut witnessed) = (0usize, 0usize);
    let mut unwitnessed = None;
    for _ in 0..params.trials {
        let x = lemma.sample(rng)?;
        if !lemma.exceeds_bounds(&x) {
            continue;
        }
        violating += 1;
        match lemma.find_witness(&x, rng)? {
            Some(_) => witnessed += 1,
            None => {
                unwitnessed.get_or_insert(x);
            }
        }
    }
    let stats = json!({ "samples": params.trials, "violating": violating, "witnessed": witnessed });
    if violating == 0 {
        return Ok(VerificationReport::new(&id, report_params, Verdict::Pass, stats));
    }
    let rate = witnessed as f64 / violating as f64;
    if rate >= REQUIRED_RATE {
        let mut w = stats;
        w["rate"] = json!(rate);
        return Ok(VerificationReport::new(&id, report_params, Verdict::StatisticalPass, w));
    }
    let mut w = stats;
    w["rate"] = json!(rate);
    w["unwitnessed"] = unwitnessed.map(|x| x.to_json()).unwrap_or_default();
    Ok(VerificationReport::fail(&id, report_params, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{GroupKind, GroupType};
    use crate::seeded_rng;

    fn lemma(kind: RankLemma) -> Lemma {
        Lemma { p: RankBoundParams::default_for(kind) }
    }

    #[test]
    fn samples_lie_in_the_algebra() {
        let mut rng = seeded_rng(1);
        for kind in [RankLemma::Sp, RankLemma::Od] {
            let l = lemma(kind);
            let gk = if kind == RankLemma::Sp { GroupKind::C } else { GroupKind::D };
            for _ in 0..10 {
                assert!(GroupType::new(gk, l.p.n).algebra_contains(&l.sample(&mut rng).unwrap()).unwrap());
            }
        }
        let l = lemma(RankLemma::B);
        let h = h_form(l.p.field, l.p.n, l.p.l);
        for _ in 0..10 {
            let x = l.sample(&mut rng).unwrap();
            assert!((&(&x * &h) + &(&h * &x.transpose())).is_zero());
            assert!(!l.violates_hypothesis(&x));
        }
    }

    #[test]
    fn generators_lie_in_the_group() {
        let mut rng = seeded_rng(2);
        for kind in [RankLemma::Sp, RankLemma::Od] {
            let l = lemma(kind);
            let gk = if kind == RankLemma::Sp { GroupKind::C } else { GroupKind::D };
            for _ in 0..20 {
                assert!(GroupType::new(gk, l.p.n).group_contains(&l.generator(&mut rng).unwrap()).unwrap());
            }
        }
        let l = lemma(RankLemma::B);
        let h = h_form(l.p.field, l.p.n, l.p.l);
        for _ in 0..20 {
            let g = l.generator(&mut rng).unwrap();
            assert_eq!(&(&g * &h) * &g.transpose(), h);
        }
    }

    #[test]
    fn sp_swap_exposes_q_block() {
        let l = lemma(RankLemma::Sp);
        let f = l.p.field;
        let mut x = Matrix::zeros(f, 16, 16);
        x.set(0, 8, f.one());
        x.set(1, 9, f.one());
        assert!(l.exceeds_bounds(&x) && !l.violates_hypothesis(&x));
        let mut rng = seeded_rng(3);
        assert!(l.find_witness(&x, &mut rng).unwrap().is_some());
    }

    #[test]
    fn zero_is_vacuous() {
        let mut rng = seeded_rng(0);
        let p = RankBoundParams { trials: 0, ..RankBoundParams::default_for(RankLemma::Od) };
        assert_eq!(verify_rank_bound_samples(&p, &mut rng).unwrap().verdict, Verdict::Pass);
        assert!(!lemma(RankLemma::Od).exceeds_bounds(&Matrix::zeros(p.field, 16, 16)));
    }

    #[test]
    fn defaults_reach_required_rate() {
        let mut rng = seeded_rng(4);
        for kind in [RankLemma::Sp, RankLemma::Od, RankLemma::B] {
            let p = RankBoundParams { trials: 40, ..RankBoundParams::default_for(kind) };
            let r = verify_rank_bound_samples(&p, &mut rng).unwrap();
            assert_ne!(r.verdict, Verdict::Fail, "{kind}: {}", r.witness);
        }
    }
}
