use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Mu2Mode, NoiseTarget, SimulationConfig};
use crate::baselines;
use crate::data::Dataset;
use crate::dise;
use crate::distributions::{Distribution, GaussianParams, MixturePair};
use crate::error::Result;
use crate::estimate::{Method, TvEstimate};
use crate::features::FeatureMapSpec;
use crate::linalg::{self, DenseMatrix};
use crate::oracle;
use crate::rng::{self, derive_seed, NormalSource};

/// A symmetric noise matrix and the diagonal shift applied to keep I + E
/// positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    pub e: DenseMatrix,
    pub shift: f64,
}

/// `E = (A + Aᵀ)/2` with `A` of i.i.d. N(0, s²) entries.
///
/// If I + E does not factor, E is shifted by `(|g| + 1e-6) I` where `g` is
/// the smallest Gershgorin lower bound of I + E.
pub fn make_noise_matrix(p: usize, s: f64, seed: u64) -> NoiseMatrix {
    let mut rng = rng::seeded(seed);
    let mut normals = NormalSource::new();
    let mut a = vec![0.0; p * p];
    for v in a.iter_mut() {
        *v = s * normals.sample(&mut rng);
    }
    let mut e = DenseMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            e.row_mut(i)[j] = 0.5 * (a[i * p + j] + a[j * p + i]);
        }
    }
    let mut ie = e.clone();
    ie.add_diagonal(1.0);
    let mut shift = 0.0;
    if linalg::cholesky(&ie).is_err() {
        let proxy = (0..p)
            .map(|i| {
                let off: f64 = (0..p).filter(|&j| j != i).map(|j| ie[(i, j)].abs()).sum();
                ie[(i, i)] - off
            })
            .fold(f64::INFINITY, f64::min);
        shift = proxy.abs() + 1e-6;
        e.add_diagonal(shift);
    }
    NoiseMatrix { e, shift }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication_id: usize,
    pub method: Method,
    pub tv_est: f64,
    pub tv_true: f64,
    pub abs_error: f64,
    pub wall_time_ms: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub mean_abs_error: f64,
    pub sd_abs_error: f64,
    /// Replications with a finite error.
    pub n_replications: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationInfo {
    pub replication_id: usize,
    pub seed: u64,
    pub tv_true: f64,
    pub tv_true_std_error: f64,
    pub noise_shift: f64,
    pub mu2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationOutput {
    pub records: Vec<ReplicationRecord>,
    pub summary: Vec<SummaryRow>,
    pub replications: Vec<ReplicationInfo>,
}

impl SimulationOutput {
    pub fn summary_for(&self, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.method == method)
    }

    pub fn records_csv(&self) -> String {
        let mut s = String::from("replication_id,method,tv_est,tv_true,abs_error,wall_time_ms,seed\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{:?},{:?},{:?},{:?},{}",
                r.replication_id, r.method, r.tv_est, r.tv_true, r.abs_error, r.wall_time_ms, r.seed
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("method,mean_abs_error,sd_abs_error,n_replications\n");
        for r in &self.summary {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{}",
                r.method, r.mean_abs_error, r.sd_abs_error, r.n_replications
            );
        }
        s
    }

    /// Writes `records.csv`, `summary.csv` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, config: &SimulationConfig) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("records.csv"), self.records_csv())?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
        let manifest = serde_json::json!({
            "library": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "replications": self.replications,
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

struct Observed {
    train: (Dataset, Dataset),
    test: Option<(Dataset, Dataset)>,
}

fn add_sample_noise(d: &Dataset, s: f64, seed: u64) -> Dataset {
    let mut rng = rng::seeded(seed);
    let mut normals = NormalSource::new();
    let (mut m, _) = d.clone().into_parts();
    for i in 0..m.rows() {
        for v in m.row_mut(i) {
            *v += s * normals.sample(&mut rng);
        }
    }
    Dataset::new(m)
}

/// The pair for replication `seed`, with its noise shift and μ₂.
fn build_pair(cfg: &SimulationConfig, seed: u64) -> Result<(MixturePair, f64, Vec<f64>)> {
    if let Some(pair) = &cfg.fixed_pair {
        return Ok((pair.clone(), 0.0, Vec::new()));
    }
    let p = cfg.p;
    let mut rng = rng::seeded(derive_seed(seed, 0));
    let t = match cfg.mu2_mode {
        Mu2Mode::Uniform01 => 1.0,
        Mu2Mode::Scaled(t) => t,
    };
    let mu2: Vec<f64> = (0..p).map(|_| t * rng.gen::<f64>()).collect();
    let s_cov = match cfg.noise_target {
        NoiseTarget::Covariance => cfg.noise_scale,
        NoiseTarget::Samples => cfg.cov_noise_scale,
    };
    let noise = make_noise_matrix(p, s_cov, derive_seed(seed, 1));
    let mut cov = noise.e;
    cov.add_diagonal(1.0);
    let q = GaussianParams::new(mu2.clone(), cov)?;
    Ok((MixturePair::new(GaussianParams::standard(p), q)?, noise.shift, mu2))
}

fn draw(cfg: &SimulationConfig, pair: &MixturePair, seed: u64) -> Observed {
    let need_test = cfg.methods.contains(&Method::Dise);
    let noisy = |d: Dataset, stream: u64| match cfg.noise_target {
        NoiseTarget::Samples if cfg.noise_scale > 0.0 => {
            add_sample_noise(&d, cfg.noise_scale, derive_seed(seed, stream))
        }
        _ => d,
    };
    let train = (
        noisy(pair.p.sample(cfg.n_train, derive_seed(seed, 2)), 12),
        noisy(pair.q.sample(cfg.n_train, derive_seed(seed, 3)), 13),
    );
    let test = need_test.then(|| {
        (
            noisy(pair.p.sample(cfg.n_test, derive_seed(seed, 4)), 14),
            noisy(pair.q.sample(cfg.n_test, derive_seed(seed, 5)), 15),
        )
    });
    Observed { train, test }
}

fn dise_config_for(cfg: &SimulationConfig, pair: &MixturePair) -> dise::DiseConfig {
    let mut d = cfg.dise.clone();
    if d.feature_spec.is_none() {
        d.feature_spec =
            Some(FeatureMapSpec::for_pair(pair).unwrap_or(FeatureMapSpec::gaussian_quadratic(pair.dim())));
    }
    d
}

/// True TV by Monte Carlo with `n_test` draws. A fixed pair uses
/// quadrature in one dimension or the closed form for equal covariances
/// when those apply.
fn true_tv(cfg: &SimulationConfig, pair: &MixturePair, seed: u64) -> (f64, f64) {
    if cfg.fixed_pair.is_none() {
        let e = oracle::mc_true_tv(pair, cfg.n_test, derive_seed(seed, 6));
        return (e.tv, e.std_error().unwrap_or(f64::NAN));
    }
    if pair.dim() == 1 {
        if let Ok(v) = oracle::quadrature_tv_1d(&pair.p, &pair.q, 1e-9) {
            return (v, 0.0);
        }
    }
    if let (Distribution::Gaussian(a), Distribution::Gaussian(b)) = (&pair.p, &pair.q) {
        if let Ok(v) = oracle::closed_form_tv_equal_cov(a, b) {
            return (v, 0.0);
        }
    }
    let e = oracle::mc_true_tv(pair, cfg.n_test, derive_seed(seed, 6));
    (e.tv, e.std_error().unwrap_or(f64::NAN))
}

fn run_method(
    cfg: &SimulationConfig,
    pair: &MixturePair,
    obs: &Observed,
    method: Method,
    seed: u64,
) -> Result<TvEstimate> {
    let (real, synth) = &obs.train;
    let mseed = derive_seed(seed, 100 + method as u64);
    match method {
        Method::Dise => {
            let (tr, ts) = obs.test.as_ref().expect("test sets drawn for DisE");
            dise::estimate_tv(&dise_config_for(cfg, pair), real, synth, Some((tr, ts)), mseed)
        }
        m => baselines::estimate(m, real, synth, cfg.n_mc, &cfg.knn, mseed),
    }
}

/// Runs every replication of the study.
///
/// Replication `r` uses seed `base_seed ^ r`. Failures of a single
/// estimator are logged and recorded as NaN rows.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let reps: Vec<Result<(Vec<ReplicationRecord>, ReplicationInfo)>> = (0..cfg.n_replications)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.base_seed ^ r as u64;
            let (pair, shift, mu2) = build_pair(cfg, seed)?;
            let (tv_true, tv_se) = true_tv(cfg, &pair, seed);
            let obs = draw(cfg, &pair, seed);
            let mut records = Vec::with_capacity(cfg.methods.len());
            for &method in &cfg.methods {
                let start = Instant::now();
                let est = run_method(cfg, &pair, &obs, method, seed);
                let elapsed = start.elapsed().as_secs_f64() * 1e3;
                let tv_est = match est {
                    Ok(e) => e.tv,
                    Err(err) => {
                        log::warn!("replication {r}: {method} failed: {err}");
                        f64::NAN
                    }
                };
                records.push(ReplicationRecord {
                    replication_id: r,
                    method,
                    tv_est,
                    tv_true,
                    abs_error: (tv_est - tv_true).abs(),
                    wall_time_ms: if cfg.record_wall_time { elapsed } else { 0.0 },
                    seed,
                });
            }
            log::debug!("replication {r} done, true TV {tv_true:.4}");
            Ok((
                records,
                ReplicationInfo {
                    replication_id: r,
                    seed,
                    tv_true,
                    tv_true_std_error: tv_se,
                    noise_shift: shift,
                    mu2,
                },
            ))
        })
        .collect();
    let mut records = Vec::new();
    let mut replications = Vec::new();
    for r in reps {
        let (rec, info) = r?;
        records.extend(rec);
        replications.push(info);
    }
    let summary = summarize(&cfg.methods, &records);
    Ok(SimulationOutput {
        records,
        summary,
        replications,
    })
}

fn summarize(methods: &[Method], records: &[ReplicationRecord]) -> Vec<SummaryRow> {
    methods
        .iter()
        .map(|&method| {
            let errs: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.abs_error.is_finite())
                .map(|r| r.abs_error)
                .collect();
            let n = errs.len();
            let mean = if n > 0 { errs.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let sd = if n > 1 {
                (errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                f64::NAN
            };
            SummaryRow {
                method,
                mean_abs_error: mean,
                sd_abs_error: sd,
                n_replications: n,
            }
        })
        .collect()
}
