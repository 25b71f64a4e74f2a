use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use glinf::graph::{char2_gamma, reduce};
use glinf::harness::{char2_derivative_rank, verify_conjugation_identity, IdentityCase};
use glinf::pencil::{offdiag_exhaustive, pencil_rank_enumerate, tuple_rank_identity, GlTable, PencilTuple};
use glinf::{seeded_rng, FieldSpec};
use glinf_bench::{gl2_pencil, random_square, shifted_of_rank};

fn linear_algebra(c: &mut Criterion) {
    let mut group = c.benchmark_group("rank");
    for n in [8, 16, 32] {
        let gf = random_square(FieldSpec::Finite(101), n, 1);
        let qq = random_square(FieldSpec::Rationals, n, 1);
        group.bench_with_input(BenchmarkId::new("gf101", n), &gf, |b, m| b.iter(|| m.rank()));
        group.bench_with_input(BenchmarkId::new("qq", n), &qq, |b, m| b.iter(|| m.rank()));
    }
    group.finish();

    let mut group = c.benchmark_group("charpoly");
    for n in [4, 8, 12] {
        let m = random_square(FieldSpec::Rationals, n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| m.char_poly().unwrap()));
    }
    group.finish();
}

fn pencils(c: &mut Criterion) {
    let p = shifted_of_rank(FieldSpec::Finite(7), 12, 3, 3);
    c.bench_function("tuple_rank_identity/gf7/12", |b| b.iter(|| tuple_rank_identity(black_box(&p)).unwrap()));

    let t = PencilTuple::new(gl2_pencil(6, 4)).unwrap();
    c.bench_function("pencil_rank_enumerate/gf2/6", |b| b.iter(|| pencil_rank_enumerate(black_box(&t)).unwrap()));

    let table = GlTable::new(FieldSpec::Finite(2), 4).unwrap();
    let p = shifted_of_rank(FieldSpec::Finite(2), 4, 1, 5);
    c.bench_function("offdiag_exhaustive/gl4f2", |b| b.iter(|| offdiag_exhaustive(&table, black_box(&p), 1, 2).unwrap()));
}

fn graphs(c: &mut Criterion) {
    let mut group = c.benchmark_group("char2");
    for n in [4, 8] {
        let g = char2_gamma(n).unwrap();
        group.bench_with_input(BenchmarkId::new("reduce", n), &g, |b, g| b.iter(|| reduce(g)));
        group.bench_with_input(BenchmarkId::new("derivative_rank", n), &n, |b, &n| b.iter(|| char2_derivative_rank(n).unwrap()));
    }
    group.finish();
}

fn identities(c: &mut Criterion) {
    let mut group = c.benchmark_group("identity");
    group.sample_size(10);
    for case in [IdentityCase::C, IdentityCase::B1] {
        group.bench_function(case.to_string(), |b| {
            b.iter(|| verify_conjugation_identity(case, false, &mut seeded_rng(0)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, linear_algebra, pencils, graphs, identities);
criterion_main!(benches);
