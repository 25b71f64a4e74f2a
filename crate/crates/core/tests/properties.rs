use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;

use glinf::chains::{ChainSpec, GroupKind, Signature};
use glinf::graph::{reduce, replay, Multigraph, Reduction};
use glinf::harness::random_descriptor;
use glinf::orbit::{skew_normal_form, ClosedSetDescriptor};
use glinf::pencil::{pencil_rank_enumerate, shift_rank, tuple_rank_identity, PencilTuple};
use glinf::{seeded_rng, FieldSpec, Matrix};

fn field_strategy() -> impl Strategy<Value = FieldSpec> {
    prop_oneof![
        Just(FieldSpec::Finite(2)),
        Just(FieldSpec::Finite(3)),
        Just(FieldSpec::Finite(5)),
        Just(FieldSpec::Finite(101)),
        Just(FieldSpec::Rationals),
    ]
}

fn finite_field() -> impl Strategy<Value = FieldSpec> {
    prop_oneof![Just(FieldSpec::Finite(2)), Just(FieldSpec::Finite(3)), Just(FieldSpec::Finite(5))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_is_transpose_invariant(f in field_strategy(), r in 1..6usize, c in 1..6usize, seed: u64) {
        let m = Matrix::random(f, r, c, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(m.rank(), m.transpose().rank());
        prop_assert!(m.rank() <= r.min(c));
        prop_assert_eq!(m.kernel().cols(), c - m.rank());
    }

    #[test]
    fn random_of_rank_has_that_rank(f in field_strategy(), n in 1..7usize, seed: u64) {
        let mut rng = seeded_rng(seed);
        let k = rng.gen_range(0..=n);
        prop_assert_eq!(Matrix::random_of_rank(f, n, k, &mut rng).unwrap().rank(), k);
    }

    #[test]
    fn inverse_and_det(f in field_strategy(), n in 1..6usize, seed: u64) {
        let mut rng = seeded_rng(seed);
        let a = Matrix::random_invertible(n, f, &mut rng).unwrap();
        let b = Matrix::random(f, n, n, &mut rng).unwrap();
        prop_assert!((&a * &a.inverse().unwrap()).is_identity());
        prop_assert_eq!((&a * &b).det(), &a.det() * &b.det());
        prop_assert_eq!(b.is_invertible(), !b.det().is_zero());
    }

    #[test]
    fn charpoly_annihilates(f in field_strategy(), n in 1..5usize, seed: u64) {
        let m = Matrix::random(f, n, n, &mut seeded_rng(seed)).unwrap();
        let chi = m.char_poly().unwrap();
        prop_assert!(chi.is_monic());
        prop_assert_eq!(chi.degree(), Some(n));
        let mut acc = Matrix::zeros(f, n, n);
        for c in chi.coeffs().iter().rev() {
            acc = &(&acc * &m) + &Matrix::identity(f, n).scale(c);
        }
        prop_assert!(acc.is_zero());
    }

    #[test]
    fn matrix_json_round_trip(f in field_strategy(), r in 1..5usize, c in 1..5usize, seed: u64) {
        let m = Matrix::random(f, r, c, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(Matrix::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn tuple_rank_matches_enumeration(f in finite_field(), n in 1..5usize, seed: u64) {
        let p = Matrix::random_of_rank(f, n, n, &mut seeded_rng(seed)).unwrap();
        let p = &p * &Matrix::random(f, n, n, &mut seeded_rng(seed ^ 1)).unwrap();
        let t = PencilTuple::new(vec![p.clone(), Matrix::identity(f, n)]).unwrap();
        let (rank, point) = pencil_rank_enumerate(&t).unwrap();
        prop_assert_eq!(tuple_rank_identity(&p).unwrap(), rank);
        prop_assert_eq!(t.combine(&point.0).rank(), rank);
    }

    #[test]
    fn shift_rank_is_attained(f in field_strategy(), n in 1..5usize, seed: u64) {
        let p = Matrix::random(f, n, n, &mut seeded_rng(seed)).unwrap();
        let s = shift_rank(&p).unwrap();
        if let Some(l) = &s.lambda {
            prop_assert_eq!(p.shifted(l).rank(), s.rank);
        }
        prop_assert!(s.rank <= p.rank());
    }

    #[test]
    fn skew_normal_form_is_a_congruence(n in 1..6usize, seed: u64) {
        let q = FieldSpec::Rationals;
        let x = Matrix::random(q, n, n, &mut seeded_rng(seed)).unwrap();
        let r = &x - &x.transpose();
        let (g, blocks) = skew_normal_form(&r).unwrap();
        let moved = &(&g * &r) * &g.transpose();
        prop_assert_eq!(2 * blocks, r.rank());
        for i in 0..n {
            for j in 0..n {
                let expect = if i % 2 == 0 && j == i + 1 && i < 2 * blocks {
                    q.one()
                } else if j % 2 == 0 && i == j + 1 && j < 2 * blocks {
                    q.from_i64(-1)
                } else {
                    q.zero()
                };
                prop_assert_eq!(moved.get(i, j), &expect);
            }
        }
    }

    #[test]
    fn descriptor_lattice(seed: u64) {
        let f = FieldSpec::Finite(5);
        let mut rng = seeded_rng(seed);
        let a = random_descriptor(f, &mut rng).unwrap();
        let b = random_descriptor(f, &mut rng).unwrap();
        let u = a.union(&b).unwrap();
        let m = a.intersect(&b).unwrap();
        prop_assert!(u.contains(&a).unwrap() && u.contains(&b).unwrap());
        prop_assert!(a.contains(&m).unwrap() && b.contains(&m).unwrap());
        prop_assert_eq!(&u, &b.union(&a).unwrap());
        prop_assert_eq!(a.contains(&b).unwrap(), u == a);
        prop_assert!(ClosedSetDescriptor::empty(f).union(&a).unwrap() == a);
        for l in f.elements().unwrap() {
            prop_assert_eq!(u.bound_at(&l), a.bound_at(&l).max(b.bound_at(&l)));
            prop_assert_eq!(m.bound_at(&l), a.bound_at(&l).min(b.bound_at(&l)));
        }
    }

    #[test]
    fn descriptor_json_round_trip(seed: u64) {
        let f = FieldSpec::Finite(7);
        let d = random_descriptor(f, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(ClosedSetDescriptor::from_json(f, &d.to_json()).unwrap(), d);
    }

    #[test]
    fn canonical_form_drops_dominated_shifts(k in -1..4i64, entries in proptest::collection::btree_map(0..5i64, -1..5i64, 0..4)) {
        let f = FieldSpec::Finite(5);
        let d = ClosedSetDescriptor::canonicalize(f, k, entries.iter().map(|(l, b)| (f.from_i64(*l), *b))).unwrap();
        prop_assert!(d.exceptional().values().all(|&b| b > k));
        for (l, b) in &entries {
            prop_assert_eq!(d.bound_at(&f.from_i64(*l)), (*b).max(k));
        }
    }

    #[test]
    fn reduction_iff_every_component_loops(
        n in 1..8usize,
        edges in proptest::collection::vec((0..8usize, 0..8usize), 0..14),
    ) {
        let mut g = Multigraph::new();
        for v in 0..n {
            g.add_vertex(format!("v{v}"));
        }
        for (x, y) in edges {
            if x < n && y < n {
                g.add_edge(format!("v{x}"), format!("v{y}")).unwrap();
            }
        }
        let every_loops = g.components().iter().all(|c| c.iter().any(|v| g.has_loop(v)));
        match reduce(&g) {
            Reduction::Certificate(cert) => {
                prop_assert!(every_loops);
                prop_assert!(replay(&g, &cert));
            }
            Reduction::Obstruction(comp) => {
                prop_assert!(!every_loops);
                prop_assert!(!comp.iter().any(|v| g.has_loop(v)));
            }
        }
    }

    #[test]
    fn truncated_certificates_do_not_replay(
        n in 1..6usize,
        edges in proptest::collection::vec((0..6usize, 0..6usize), 1..10),
    ) {
        let mut g = Multigraph::new();
        for v in 0..n {
            g.add_vertex(format!("v{v}"));
        }
        g.add_edge("v0", "v0").unwrap();
        for (x, y) in edges {
            if x < n && y < n {
                g.add_edge(format!("v{x}"), format!("v{y}")).unwrap();
            }
        }
        if let Reduction::Certificate(mut cert) = reduce(&g) {
            cert.0.pop();
            prop_assert!(!replay(&g, &cert));
        }
    }

    #[test]
    fn chain_wire_round_trip(l in 1..3usize, r in 0..2usize, z in 0..3usize, n1 in 1..4usize) {
        let c = ChainSpec::new(GroupKind::A, n1, vec![Signature::new(1, 0, 0)], vec![Signature::new(l, r, z)]).unwrap();
        prop_assert_eq!(ChainSpec::from_wire(&c.to_wire()).unwrap(), c.clone());
        let expected = c.rank_param(1) * (l + r) + z;
        prop_assert_eq!(c.rank_param(3), expected);
    }

    #[test]
    fn signature_composition_is_associative(a in (0..3usize, 0..3usize, 0..3usize), b in (0..3usize, 0..3usize, 0..3usize), c in (0..3usize, 0..3usize, 0..3usize)) {
        let (a, b, c) = (Signature::new(a.0, a.1, a.2), Signature::new(b.0, b.1, b.2), Signature::new(c.0, c.1, c.2));
        prop_assert_eq!(a.compose(b).compose(c), a.compose(b.compose(c)));
        prop_assert_eq!(a.flipped().flipped(), a);
    }
}

#[test]
fn descriptor_profiles_are_total_over_the_field() {
    let f = FieldSpec::Finite(3);
    let d = ClosedSetDescriptor::canonicalize(f, 1, [(f.from_i64(2), 3)]).unwrap();
    let profile: BTreeMap<String, i64> = f.elements().unwrap().iter().map(|l| (l.to_string(), d.bound_at(l))).collect();
    assert_eq!(profile, BTreeMap::from([("0".into(), 1), ("1".into(), 1), ("2".into(), 3)]));
}
