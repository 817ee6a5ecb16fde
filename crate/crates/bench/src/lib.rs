//! Seeded workloads shared by the benchmarks in `benches/`.

use nalgebra::DMatrix;
use normdeflate::{make_mixed_diagonal, DenseOperator, NormSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform `[-1, 1)` entries from a fixed seed.
pub fn random_operator(rows: usize, cols: usize, source: NormSpec, target: NormSpec, seed: u64) -> DenseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    DenseOperator::new(a, source, target).expect("dimensions match the norms")
}

/// The same matrix under `ℓᵖ → ℓᵖ`.
pub fn lp_operator(d: usize, p: f64, seed: u64) -> DenseOperator {
    let s = NormSpec::lp(p, d).expect("valid exponent");
    random_operator(d, d, s, s, seed)
}

/// `diag(1, 1/2, …, 1/d)` on the mixed `(k,1)` space.
pub fn mixed_diagonal(d: usize, k: usize) -> DenseOperator {
    let alpha: Vec<f64> = (1..=d).map(|i| 1.0 / i as f64).collect();
    make_mixed_diagonal(&alpha, k).expect("1 <= k < d")
}
