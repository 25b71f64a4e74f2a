//! Fixed inputs for the kernel benchmarks.

use glinf::{seeded_rng, FieldSpec, Matrix};

pub fn random_square(field: FieldSpec, n: usize, seed: u64) -> Matrix {
    Matrix::random(field, n, n, &mut seeded_rng(seed)).expect("finite or rational field")
}

/// `λI + N` with `N` of the given rank, so the shift rank is `rank`.
pub fn shifted_of_rank(field: FieldSpec, n: usize, rank: usize, seed: u64) -> Matrix {
    let mut rng = seeded_rng(seed);
    let low = Matrix::random_of_rank(field, n, rank, &mut rng).expect("rank within size");
    &low + &Matrix::identity(field, n).scale(&field.from_i64(3))
}

pub fn gl2_pencil(n: usize, seed: u64) -> Vec<Matrix> {
    let f = FieldSpec::Finite(2);
    vec![random_square(f, n, seed), Matrix::identity(f, n)]
}
