//! Fixtures shared by the benchmarks under `benches/`.

use tvdise::{Dataset, GaussianParams, MixturePair};

/// `N(0, I)` against `N(0.5·1, I)` in `p` dimensions.
pub fn shifted_pair(p: usize) -> MixturePair {
    let q = GaussianParams::new(vec![0.5; p], tvdise::DenseMatrix::identity(p)).expect("identity is positive definite");
    MixturePair::new(GaussianParams::standard(p), q).expect("dimensions agree")
}

/// `n` samples from each side of [`shifted_pair`].
pub fn samples(p: usize, n: usize, seed: u64) -> (Dataset, Dataset) {
    let pair = shifted_pair(p);
    (pair.p.sample(n, seed), pair.q.sample(n, seed.wrapping_add(1)))
}
