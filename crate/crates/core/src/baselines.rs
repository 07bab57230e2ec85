//! Competing TV estimators: Gaussian parameter fit (PE), kernel density
//! estimation (KDE), nearest-neighbour ratio (NNRE) and the k-NN distance
//! estimator (EE).
//!
//! Every estimator first puts its inputs in a canonical row order, so the
//! result does not depend on how the caller ordered the samples.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distributions::GaussianParams;
use crate::error::{Error, Result};
use crate::estimate::{Method, TvEstimate};
use crate::linalg::{self, DenseMatrix};
use crate::mc::{self, DensityModel};
use crate::rng::{self, derive_seed, NormalSource, SeededRng};

/// Default number of mixture draws for PE and KDE.
pub const DEFAULT_N_MC: usize = 100_000;

const DISTANCE_JITTER: f64 = 1e-12;

fn check_dims(real: &Dataset, synth: &Dataset) -> Result<()> {
    if real.dim() != synth.dim() {
        return Err(Error::DimensionMismatch {
            expected: real.dim(),
            found: synth.dim(),
        });
    }
    Ok(())
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Rows sorted lexicographically.
fn canonical(data: &Dataset) -> Dataset {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| lex_cmp(data.row(a), data.row(b)).then(a.cmp(&b)));
    data.select(&idx)
}

/// Maximum-likelihood Gaussian fit, jittered once if the covariance does
/// not factor. Returns the model and the jitter used.
pub fn fit_gaussian(data: &Dataset) -> Result<(GaussianParams, f64)> {
    let p = data.dim();
    if data.len() < p + 2 {
        return Err(Error::TooFewSamples {
            needed: p + 2,
            found: data.len(),
        });
    }
    let (mean, cov) = linalg::mean_and_covariance(data.samples());
    match GaussianParams::new(mean.clone(), cov.clone()) {
        Ok(g) => Ok((g, 0.0)),
        Err(Error::NotPositiveDefinite { .. }) => {
            let eps = 1e-8 * cov.trace() / p as f64;
            let mut jittered = cov;
            jittered.add_diagonal(eps);
            Ok((GaussianParams::new(mean, jittered)?, eps))
        }
        Err(e) => Err(e),
    }
}

/// Parameter-estimation TV: fit a Gaussian to each set, then Monte Carlo
/// over the fitted mixture.
pub fn pe_estimate(real: &Dataset, synth: &Dataset, n_mc: usize, seed: u64) -> Result<TvEstimate> {
    check_dims(real, synth)?;
    let (gp, jp) = fit_gaussian(&canonical(real))?;
    let (gq, jq) = fit_gaussian(&canonical(synth))?;
    let r = mc::mixture_ratio_tv(&gp, &gq, n_mc, seed);
    Ok(TvEstimate::new(Method::Pe, r.tv, n_mc)
        .with("std_error", r.std_error)
        .with("jitter", jp.max(jq)))
}

/// Product-Gaussian kernel density estimate.
#[derive(Debug, Clone)]
pub struct KdeModel {
    points: Dataset,
    bandwidths: Vec<f64>,
    /// Points divided by their bandwidths, row-major.
    scaled: Vec<f64>,
    log_norm: f64,
}

impl KdeModel {
    /// Fits with the per-dimension Silverman bandwidth.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, found: n });
        }
        let data = canonical(data);
        let p = data.dim();
        let factor = silverman_factor(p, n);
        let (_, cov) = linalg::mean_and_covariance(data.samples());
        let nf = n as f64;
        let mut bw = Vec::with_capacity(p);
        for j in 0..p {
            // unbiased sample standard deviation
            let sd = (cov[(j, j)] * nf / (nf - 1.0)).sqrt();
            if !(sd > 0.0) {
                return Err(Error::ZeroVariance { column: j });
            }
            bw.push(sd * factor);
        }
        Self::with_bandwidths(data, bw)
    }

    pub fn with_bandwidths(points: Dataset, bandwidths: Vec<f64>) -> Result<Self> {
        let p = points.dim();
        if bandwidths.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bandwidths.len(),
            });
        }
        if let Some(j) = bandwidths.iter().position(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::ZeroVariance { column: j });
        }
        if points.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, found: 0 });
        }
        let mut scaled = Vec::with_capacity(points.len() * p);
        for row in points.rows() {
            scaled.extend(row.iter().zip(&bandwidths).map(|(x, h)| x / h));
        }
        let log_norm = -(points.len() as f64).ln()
            - bandwidths.iter().map(|h| h.ln()).sum::<f64>()
            - 0.5 * p as f64 * (2.0 * PI).ln();
        Ok(Self {
            points,
            bandwidths,
            scaled,
            log_norm,
        })
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn points(&self) -> &Dataset {
        &self.points
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut s = vec![0.0; x.len().max(1)];
        self.log_density_with(x, &mut s)
    }

    fn log_density_with(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let p = self.bandwidths.len();
        for ((s, xi), h) in scratch.iter_mut().zip(x).zip(&self.bandwidths) {
            *s = xi / h;
        }
        let z = &scratch[..p];
        // streaming log-sum-exp
        let mut m = f64::NEG_INFINITY;
        let mut acc = 0.0;
        for c in self.scaled.chunks_exact(p.max(1)) {
            let d2: f64 = c.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = -0.5 * d2;
            if v <= m {
                acc += (v - m).exp();
            } else {
                acc = acc * (m - v).exp() + 1.0;
                m = v;
            }
        }
        self.log_norm + m + acc.ln()
    }
}

impl DensityModel for KdeModel {
    fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.log_density_with(x, scratch)
    }

    fn sample_into(&self, rng: &mut SeededRng, normals: &mut NormalSource, _: &mut [f64], out: &mut [f64]) {
        let i = rng.gen_range(0..self.points.len());
        for ((o, c), h) in out.iter_mut().zip(self.points.row(i)).zip(&self.bandwidths) {
            *o = c + h * normals.sample(rng);
        }
    }
}

/// `(4 / ((p + 2) n))^(1 / (p + 4))`.
pub fn silverman_factor(p: usize, n: usize) -> f64 {
    (4.0 / ((p as f64 + 2.0) * n as f64)).powf(1.0 / (p as f64 + 4.0))
}

/// Kernel-density TV: Monte Carlo over the mixture of the two KDE fits.
pub fn kde_estimate(real: &Dataset, synth: &Dataset, n_mc: usize, seed: u64) -> Result<TvEstimate> {
    check_dims(real, synth)?;
    let kp = KdeModel::fit(real)?;
    let kq = KdeModel::fit(synth)?;
    let r = mc::mixture_ratio_tv(&kp, &kq, n_mc, seed);
    Ok(TvEstimate::new(Method::Kde, r.tv, n_mc).with("std_error", r.std_error))
}

/// Neighbour count for the k-NN estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "KSetting", into = "KSetting")]
pub enum KChoice {
    /// `⌊√M⌋` for NNRE, `⌊√N⌋` for EE.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KSetting {
    Count(usize),
    Name(String),
}

impl TryFrom<KSetting> for KChoice {
    type Error = String;

    fn try_from(s: KSetting) -> std::result::Result<Self, String> {
        match s {
            KSetting::Count(0) => Err("k must be at least 1".into()),
            KSetting::Count(k) => Ok(KChoice::Fixed(k)),
            KSetting::Name(n) if n == "auto" => Ok(KChoice::Auto),
            KSetting::Name(n) => Err(format!("k must be a count or \"auto\", got {n:?}")),
        }
    }
}

impl From<KChoice> for KSetting {
    fn from(k: KChoice) -> Self {
        match k {
            KChoice::Auto => KSetting::Name("auto".into()),
            KChoice::Fixed(k) => KSetting::Count(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KnnConfig {
    #[serde(default)]
    pub k: KChoice,
}

impl KnnConfig {
    pub fn fixed(k: usize) -> Self {
        Self { k: KChoice::Fixed(k) }
    }

    fn resolve(&self, auto_base: usize) -> usize {
        match self.k {
            KChoice::Auto => ((auto_base as f64).sqrt().floor() as usize).max(1),
            KChoice::Fixed(k) => k,
        }
    }
}

/// The `k` nearest rows of `pool` to `x` as `(squared distance, index)`,
/// nearest first, ties to the smaller index. `skip` is left out.
fn k_nearest(pool: &DenseMatrix, x: &[f64], k: usize, skip: Option<usize>, best: &mut Vec<(f64, usize)>) {
    best.clear();
    for (i, row) in pool.row_iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        // indices arrive in increasing order, so an equal distance never
        // displaces an earlier neighbour
        if best.len() == k && d2 >= best[k - 1].0 {
            continue;
        }
        let pos = best.partition_point(|&(d, _)| d <= d2);
        if best.len() == k {
            best.pop();
        }
        best.insert(pos, (d2, i));
    }
}

fn stack_rows(a: &Dataset, b: &Dataset) -> DenseMatrix {
    let p = a.dim();
    let mut data = Vec::with_capacity((a.len() + b.len()) * p);
    data.extend_from_slice(a.samples().as_slice());
    data.extend_from_slice(b.samples().as_slice());
    DenseMatrix::from_row_major(a.len() + b.len(), p, data).expect("finite rows")
}

/// `½|x - 1|`.
#[inline]
fn g_tilde(x: f64) -> f64 {
    0.5 * (x - 1.0).abs()
}

/// Nearest-neighbour ratio TV over the pooled sample.
///
/// For every synthetic point the `k` nearest pooled neighbours (itself
/// excluded) give `Nᵢ` real and `Mᵢ` synthetic counts; the estimate is the
/// mean of `½|η Nᵢ / (Mᵢ + 1) - 1|` with `η = M / N`.
pub fn nnre_estimate(real: &Dataset, synth: &Dataset, cfg: &KnnConfig) -> Result<TvEstimate> {
    check_dims(real, synth)?;
    let (n, m) = (real.len(), synth.len());
    if n == 0 || m == 0 {
        return Err(Error::TooFewSamples {
            needed: 1,
            found: n.min(m),
        });
    }
    let k = cfg.resolve(m);
    let pool_size = n + m - 1;
    if k == 0 || k > pool_size {
        return Err(Error::KTooLarge { k, pool: pool_size });
    }
    let real = canonical(real);
    let synth = canonical(synth);
    let pool = stack_rows(&real, &synth);
    let eta = m as f64 / n as f64;
    let terms: Vec<f64> = (0..m)
        .into_par_iter()
        .map_init(Vec::new, |best, j| {
            let q = n + j;
            k_nearest(&pool, pool.row(q), k, Some(q), best);
            let ni = best.iter().filter(|&&(_, i)| i < n).count();
            let mi = k - ni;
            g_tilde(eta * ni as f64 / (mi as f64 + 1.0))
        })
        .collect();
    let raw = terms.iter().sum::<f64>() / m as f64;
    Ok(TvEstimate::new(Method::Nnre, raw, m)
        .with("k", k as f64)
        .with("eta", eta))
}

/// k-NN distance estimator.
///
/// The synthetic sample is split into an evaluation half (`N` points) and
/// a reference half (`M₂`); `M₁ = M₂` real points are drawn without
/// replacement. Each evaluation point contributes
/// `½|M₂ρ₂ᵖ / (M₁ρ₁ᵖ) - 1|` where `ρ₁`, `ρ₂` are its k-th neighbour
/// distances into the real and synthetic references.
pub fn ee_estimate(real: &Dataset, synth: &Dataset, cfg: &KnnConfig, seed: u64) -> Result<TvEstimate> {
    check_dims(real, synth)?;
    if synth.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            found: synth.len(),
        });
    }
    let p = synth.dim();
    let real = canonical(real);
    let synth = canonical(synth);
    let n_eval = synth.len() / 2;
    let m2 = synth.len() - n_eval;
    let m1 = m2;
    if real.len() < m1 {
        return Err(Error::TooFewSamples {
            needed: m1,
            found: real.len(),
        });
    }
    let k = cfg.resolve(n_eval);
    if k == 0 || k > m2 {
        return Err(Error::KTooLarge { k, pool: m2 });
    }
    let perm = index::sample(&mut rng::seeded(derive_seed(seed, 0)), synth.len(), synth.len()).into_vec();
    let eval = synth.select(&perm[..n_eval]);
    let ref_synth = synth.select(&perm[n_eval..]);
    let mut pick = index::sample(&mut rng::seeded(derive_seed(seed, 1)), real.len(), m1).into_vec();
    pick.sort_unstable();
    let ref_real = real.select(&pick);

    let log_scale = (m2 as f64).ln() - (m1 as f64).ln();
    let terms: Vec<f64> = (0..n_eval)
        .into_par_iter()
        .map_init(Vec::new, |best, i| {
            let x = eval.row(i);
            k_nearest(ref_real.samples(), x, k, None, best);
            let rho1 = best[k - 1].0.sqrt().max(DISTANCE_JITTER);
            k_nearest(ref_synth.samples(), x, k, None, best);
            let rho2 = best[k - 1].0.sqrt().max(DISTANCE_JITTER);
            let log_ratio = log_scale + p as f64 * (rho2.ln() - rho1.ln());
            g_tilde(log_ratio.exp())
        })
        .collect();
    let raw = terms.iter().sum::<f64>() / n_eval as f64;
    Ok(TvEstimate::new(Method::Ee, raw, n_eval)
        .with("k", k as f64)
        .with("n_reference", m2 as f64))
}

/// Runs one baseline by method, with `n_mc` draws where relevant.
pub fn estimate(
    method: Method,
    real: &Dataset,
    synth: &Dataset,
    n_mc: usize,
    knn: &KnnConfig,
    seed: u64,
) -> Result<TvEstimate> {
    match method {
        Method::Pe => pe_estimate(real, synth, n_mc, seed),
        Method::Kde => kde_estimate(real, synth, n_mc, seed),
        Method::Nnre => nnre_estimate(real, synth, knn),
        Method::Ee => ee_estimate(real, synth, knn, seed),
        other => Err(Error::InvalidParameter(format!("{other} is not a baseline"))),
    }
}
