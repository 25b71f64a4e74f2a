//! Randomized cross-checks of the pencil, orbit, descriptor and chain kernels.

use std::collections::BTreeMap;

use rand::Rng;
use serde_json::json;

use super::VerificationReport;
use crate::chains::{dual_equal, embed_group, project_dual, ChainSpec, GroupKind, Signature};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::matrix::Matrix;
use crate::orbit::{chain_stabilization, degeneration_witness, raise_sum_rank, topleft_realization, ClosedSetDescriptor};
use crate::pencil::{offdiag_exhaustive, pencil_rank_enumerate, tuple_rank_identity, GlTable, PencilTuple};

const GF2: FieldSpec = FieldSpec::Finite(2);

/// Compares the closed tuple-rank formula with projective enumeration of the
/// pencil `(P, I)` for every `P ∈ gl_n(F_2)`, `n ≤ n_max`.
pub fn verify_tuple_rank_oracle(n_max: usize) -> Result<VerificationReport> {
    const ID: &str = "tuplerank-oracle";
    if n_max > 4 {
        return Err(Error::Budget { needed: 1 << (n_max * n_max), budget: 1 << 16 });
    }
    let mut checked = 0u64;
    for n in 1..=n_max {
        let id = Matrix::identity(GF2, n);
        for code in 0u64..1 << (n * n) {
            let vals: Vec<u32> = (0..n * n).map(|b| (code >> b & 1) as u32).collect();
            let p = Matrix::from_residues(2, n, n, &vals);
            let closed = tuple_rank_identity(&p)?;
            let (enumerated, _) = pencil_rank_enumerate(&PencilTuple::new(vec![p.clone(), id.clone()])?)?;
            if closed != enumerated {
                let w = json!({"P": p.to_json(), "identity": closed, "enumerated": enumerated});
                return Ok(VerificationReport::fail(ID, json!({"n_max": n_max}), w));
            }
            checked += 1;
        }
    }
    let mut r = VerificationReport::pass(ID, json!({"n_max": n_max}));
    r.witness = json!({"checked": checked});
    Ok(r)
}

/// `λI + (rank r)` over `F_2`, so that both outcomes of the criterion occur.
fn shifted_low_rank<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Matrix> {
    let base = Matrix::random_of_rank(GF2, n, rng.gen_range(0..=n), rng)?;
    Ok(if rng.gen_bool(0.5) { &base + &Matrix::identity(GF2, n) } else { base })
}

/// Exhaustive `GL_4(F_2)` off-diagonal check with `(k, m) = (1, 2)` against
/// the tuple rank: the criterion holds exactly when the tuple rank is `≤ 1`.
pub fn verify_offdiag<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<VerificationReport> {
    const ID: &str = "offdiag";
    let (n, k, m) = (4, 1, 2);
    let params = json!({"field": "gf:2", "n": n, "k": k, "m": m, "count": count});
    let table = GlTable::new(GF2, n)?;
    let mut holding = 0;
    for _ in 0..count {
        let p = shifted_low_rank(n, rng)?;
        let verdict = offdiag_exhaustive(&table, &p, k, m)?;
        let tr = tuple_rank_identity(&p)?;
        if verdict.holds != (tr <= k) {
            let w = json!({"P": p.to_json(), "tuple_rank": tr, "holds": verdict.holds});
            return Ok(VerificationReport::fail(ID, params, w));
        }
        if let Some(w) = &verdict.witness {
            if w.block_rank(&p)? <= k {
                return Ok(VerificationReport::fail(ID, params, json!({"P": p.to_json(), "bad_witness": w.g.to_json()})));
            }
        }
        holding += verdict.holds as usize;
    }
    let mut r = VerificationReport::pass(ID, params);
    r.witness = json!({"holding": holding, "failing": count - holding});
    Ok(r)
}

/// `topleft_realization` on random `P ∈ gl_{2n}` of rank `k < n` and targets
/// of rank `≤ k`, `n ≤ 3`.
pub fn verify_topleft<R: Rng + ?Sized>(field: FieldSpec, instances: usize, rng: &mut R) -> Result<VerificationReport> {
    const ID: &str = "topleft";
    let params = json!({"field": field.to_string(), "instances": instances});
    for _ in 0..instances {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(0..n);
        let conj = Matrix::random_invertible(2 * n, field, rng)?;
        let p = &(&conj * &Matrix::random_of_rank(field, 2 * n, k, rng)?) * &conj.inverse()?;
        let q = Matrix::random_of_rank(field, n, rng.gen_range(0..=k), rng)?;
        let fail = |reason: &str| {
            let w = json!({"P": p.to_json(), "Q": q.to_json(), "reason": reason});
            Ok(VerificationReport::fail(ID, params.clone(), w))
        };
        let g = match topleft_realization(&p, &q) {
            Ok(g) => g,
            Err(e) => return fail(&e.to_string()),
        };
        let moved = &(&g * &p) * &g.inverse()?;
        if moved.block(0, 0, n, n) != q {
            return fail("top-left block differs");
        }
        if moved.rank() != p.rank() {
            return fail("rank changed");
        }
    }
    Ok(VerificationReport::pass(ID, params))
}

/// `raise_sum_rank` on `ℓ ∈ [2, 4]` conjugated rank-1 matrices in `gl_6`.
pub fn verify_raise_rank<R: Rng + ?Sized>(field: FieldSpec, instances: usize, rng: &mut R) -> Result<VerificationReport> {
    const ID: &str = "raise-rank";
    let (n, k) = (6, 1);
    let params = json!({"field": field.to_string(), "instances": instances, "n": n, "k": k});
    for _ in 0..instances {
        let count = rng.gen_range(2..=4);
        let ps = (0..count).map(|_| Matrix::random_of_rank(field, n, k, rng)).collect::<Result<Vec<_>>>()?;
        let fail = |reason: String| {
            let w = json!({"P": ps.iter().map(Matrix::to_json).collect::<Vec<_>>(), "reason": reason});
            Ok(VerificationReport::fail(ID, params.clone(), w))
        };
        let gs = match raise_sum_rank(&ps) {
            Ok(gs) => gs,
            Err(e) => return fail(e.to_string()),
        };
        let mut sum = Matrix::zeros(field, n, n);
        for (g, p) in gs.iter().zip(&ps) {
            sum = &sum + &(&(g * p) * &g.inverse()?);
        }
        let r = sum.rank();
        if r <= k || r > 3 * k || tuple_rank_identity(&sum)? != r {
            return fail(format!("sum has rank {r}"));
        }
    }
    Ok(VerificationReport::pass(ID, params))
}

/// A random descriptor: `k ∈ [−1, 4]` and up to three exceptional bounds.
pub fn random_descriptor<R: Rng + ?Sized>(field: FieldSpec, rng: &mut R) -> Result<ClosedSetDescriptor> {
    let k = rng.gen_range(-1..=4);
    let entries = (0..rng.gen_range(0..=3))
        .map(|_| Ok((field.random(rng)?, rng.gen_range(-1..=6))))
        .collect::<Result<BTreeMap<Scalar, i64>>>()?;
    ClosedSetDescriptor::canonicalize(field, k, entries)
}

/// Lattice laws on random triples, and stabilization of random descending
/// chains at their number of strict steps.
pub fn verify_descriptor_lattice<R: Rng + ?Sized>(field: FieldSpec, cases: usize, rng: &mut R) -> Result<VerificationReport> {
    const ID: &str = "descriptor-lattice";
    let params = json!({"field": field.to_string(), "cases": cases});
    for _ in 0..cases {
        let a = random_descriptor(field, rng)?;
        let b = random_descriptor(field, rng)?;
        let c = random_descriptor(field, rng)?;
        let laws: [(&str, bool); 12] = [
            ("union idempotent", a.union(&a)? == a),
            ("intersect idempotent", a.intersect(&a)? == a),
            ("union commutative", a.union(&b)? == b.union(&a)?),
            ("intersect commutative", a.intersect(&b)? == b.intersect(&a)?),
            ("union associative", a.union(&b)?.union(&c)? == a.union(&b.union(&c)?)?),
            ("intersect associative", a.intersect(&b)?.intersect(&c)? == a.intersect(&b.intersect(&c)?)?),
            ("absorption", a.union(&a.intersect(&b)?)? == a && a.intersect(&a.union(&b)?)? == a),
            ("reflexive", a.contains(&a)?),
            ("antisymmetric", !(a.contains(&b)? && b.contains(&a)?) || a == b),
            ("transitive", !(a.contains(&b)? && b.contains(&c)?) || a.contains(&c)?),
            ("order is union", a.contains(&b)? == (a.union(&b)? == a)),
            ("meet is lower bound", a.contains(&a.intersect(&b)?)? && b.contains(&a.intersect(&b)?)?),
        ];
        if let Some((law, _)) = laws.iter().find(|(_, ok)| !ok) {
            let w = json!({"law": law, "a": a.to_json(), "b": b.to_json(), "c": c.to_json()});
            return Ok(VerificationReport::fail(ID, params, w));
        }

        // Strict steps first, then repeats.
        let mut chain = vec![a];
        for _ in 0..rng.gen_range(1..=6) {
            let next = chain.last().unwrap().intersect(&random_descriptor(field, rng)?)?;
            if &next != chain.last().unwrap() {
                chain.push(next);
            }
        }
        let strict = chain.len() - 1;
        let last = chain.last().unwrap().clone();
        chain.extend(std::iter::repeat_n(last, rng.gen_range(0..=3)));
        let stable = chain_stabilization(&chain)?;
        if stable != strict {
            let w = json!({"chain": chain.iter().map(ClosedSetDescriptor::to_json).collect::<Vec<_>>(), "stabilization": stable, "strict_steps": strict});
            return Ok(VerificationReport::fail(ID, params, w));
        }
    }
    Ok(VerificationReport::pass(ID, params))
}

fn random_skew_of_rank<R: Rng + ?Sized>(field: FieldSpec, n: usize, rank: usize, rng: &mut R) -> Result<Matrix> {
    let h = rank / 2;
    let x = Matrix::random(field, n, 2 * h, rng)?;
    let mut j = Matrix::zeros(field, 2 * h, 2 * h);
    j.set_block(0, h, &Matrix::identity(field, h));
    j.set_block(h, 0, &-&Matrix::identity(field, h));
    Ok(&(&x * &j) * &x.transpose())
}

/// Degeneration curves over `ℚ(t)`: `lim g R gᵀ = Q`, `lim g W = V` for
/// targets with `rk Q ≤ rk R − 2k`.
pub fn verify_degeneration<R: Rng + ?Sized>(n_max: usize, k_max: usize, targets: usize, rng: &mut R) -> Result<VerificationReport> {
    const ID: &str = "degeneration";
    let q = FieldSpec::Rationals;
    let params = json!({"n_max": n_max, "k_max": k_max, "targets": targets});
    let mut checked = 0;
    for n in 1..=n_max {
        for k in 0..=k_max.min(n) {
            let full = n / 2 * 2;
            if full < 2 * k {
                continue;
            }
            for _ in 0..targets {
                let r = random_skew_of_rank(q, n, full, rng)?;
                let w = Matrix::random_of_rank(q, n, n, rng)?.block(0, 0, n, k);
                let target_rank = rng.gen_range(0..=(full - 2 * k) / 2) * 2;
                let qm = random_skew_of_rank(q, n, target_rank, rng)?;
                let v = Matrix::random(q, n, k, rng)?;
                if r.rank() != full || w.rank() != k {
                    continue;
                }
                let fail = |reason: String| {
                    let w = json!({"R": r.to_json(), "W": w.to_json(), "Q": qm.to_json(), "V": v.to_json(), "reason": reason});
                    Ok(VerificationReport::fail(ID, params.clone(), w))
                };
                let g = match degeneration_witness(&r, &w, &qm, &v) {
                    Ok(g) => g,
                    Err(e) => return fail(e.to_string()),
                };
                let (rt, wt) = (r.to_ratfunc()?, w.to_ratfunc()?);
                let moved_r = &(&g * &rt) * &g.transpose();
                let moved_w = &g * &wt;
                if moved_r.limit_at_zero()? != qm || moved_w.limit_at_zero()? != v {
                    return fail("limit differs from the target".into());
                }
                if g.det().is_zero() {
                    return fail("curve is singular".into());
                }
                checked += 1;
            }
        }
    }
    let mut rep = VerificationReport::pass(ID, params);
    rep.witness = json!({"checked": checked});
    Ok(rep)
}

fn equivariance_chain(kind: GroupKind) -> Result<ChainSpec> {
    let (n1, sig) = match kind {
        GroupKind::A => (2, Signature::new(1, 1, 1)),
        GroupKind::B => (1, Signature::new(1, 0, 2)),
        GroupKind::C | GroupKind::D => (1, Signature::new(2, 0, 1)),
    };
    ChainSpec::periodic(kind, n1, sig)
}

/// `π(ι(g) M ι(g)⁻¹) = g π(M) g⁻¹` on random pairs at the first two levels.
pub fn verify_equivariance<R: Rng + ?Sized>(kind: GroupKind, field: FieldSpec, trials: usize, rng: &mut R) -> Result<VerificationReport> {
    let id = format!("equivariance-{kind}");
    let chain = equivariance_chain(kind)?;
    let params = json!({"field": field.to_string(), "trials": trials, "chain": chain.to_wire()});
    for t in 0..trials {
        let level = 1 + t % 2;
        let g = chain.group(level).random_element(field, rng, 4)?;
        let m = chain.group(level + 1).random_algebra_element(field, rng)?;
        let e = embed_group(&chain, level, &g)?;
        let lhs = project_dual(&chain, level, &(&(&e * &m) * &e.inverse()?))?;
        let rhs = &(&g * &project_dual(&chain, level, &m)?) * &g.inverse()?;
        if !dual_equal(kind, &lhs, &rhs) {
            let w = json!({"level": level, "g": g.to_json(), "M": m.to_json()});
            return Ok(VerificationReport::fail(&id, params, w));
        }
    }
    Ok(VerificationReport::pass(&id, params))
}
