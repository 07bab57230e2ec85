//! Monte Carlo TV from two density models.
//!
//! Draws x from (P + Q)/2 and averages |Q(x) - P(x)| / (P(x) + Q(x)), which
//! is written as |tanh(Δ/2)| with Δ = log P(x) - log Q(x) so it never
//! divides by a vanishing density. Work is split into fixed-size chunks
//! with derived seeds and reduced in chunk order, so the result does not
//! depend on the thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{Distribution, GaussianParams};
use crate::rng::{self, derive_seed, NormalSource, SeededRng};

const CHUNK: usize = 4096;

/// A density that can be sampled and evaluated in log space.
pub trait DensityModel: Sync {
    fn dim(&self) -> usize;

    /// Log-density at `x`; `scratch` has at least `dim` entries.
    fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64;

    fn sample_into(&self, rng: &mut SeededRng, normals: &mut NormalSource, scratch: &mut [f64], out: &mut [f64]);
}

impl DensityModel for GaussianParams {
    fn dim(&self) -> usize {
        GaussianParams::dim(self)
    }

    fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.log_density_with(x, scratch)
    }

    fn sample_into(&self, rng: &mut SeededRng, normals: &mut NormalSource, scratch: &mut [f64], out: &mut [f64]) {
        GaussianParams::sample_into(self, rng, normals, scratch, out);
    }
}

impl DensityModel for Distribution {
    fn dim(&self) -> usize {
        Distribution::dim(self)
    }

    fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        match self {
            Distribution::Gaussian(g) => g.log_density_with(x, scratch),
            Distribution::Univariate(u) => u.log_density(x[0]),
        }
    }

    fn sample_into(&self, rng: &mut SeededRng, normals: &mut NormalSource, scratch: &mut [f64], out: &mut [f64]) {
        Distribution::sample_into(self, rng, normals, scratch, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub tv: f64,
    /// Standard deviation of the per-draw terms over `sqrt(n)`.
    pub std_error: f64,
    pub n: usize,
}

/// `|Q - P| / (P + Q)` from the log-densities.
#[inline]
pub fn ratio_term(log_p: f64, log_q: f64) -> f64 {
    if log_p == log_q {
        // also covers both -inf
        return 0.0;
    }
    (0.5 * (log_p - log_q)).tanh().abs()
}

pub fn mixture_ratio_tv<P, Q>(p: &P, q: &Q, n: usize, seed: u64) -> McResult
where
    P: DensityModel + ?Sized,
    Q: DensityModel + ?Sized,
{
    let dim = p.dim();
    let n_chunks = n.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = rng::seeded(derive_seed(seed, c as u64));
            let mut normals = NormalSource::new();
            let mut x = vec![0.0; dim];
            let mut scratch = vec![0.0; dim.max(1)];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                if rng.gen::<bool>() {
                    p.sample_into(&mut rng, &mut normals, &mut scratch, &mut x);
                } else {
                    q.sample_into(&mut rng, &mut normals, &mut scratch, &mut x);
                }
                let t = ratio_term(p.log_density(&x, &mut scratch), q.log_density(&x, &mut scratch));
                s += t;
                s2 += t * t;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let nf = n.max(1) as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    McResult {
        tv: mean,
        std_error: (var / nf).sqrt(),
        n,
    }
}
