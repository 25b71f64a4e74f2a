//! Exact computations around stable subsets of classical Lie algebras of
//! countable rank: pencil ranks, diagonal-embedding chains, orbit
//! constructions, and multigraph reduction certificates.

pub mod chains;
pub mod coordpoly;
pub mod error;
pub mod field;
pub mod gf;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod orbit;
pub mod pencil;
pub mod poly;

pub use error::{Error, Result};
pub use field::{FieldSpec, RatFunc, Scalar};
pub use matrix::{Eigenvalue, Matrix, Rref, TransformMode};
pub use poly::UniPoly;

/// The crate's deterministic random source.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
