use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::read_embeddings;
use crate::baselines::{self, KnnConfig, DEFAULT_N_MC};
use crate::data::Dataset;
use crate::dise::{self, DiseConfig};
use crate::error::{Error, Result};
use crate::estimate::{Method, TvEstimate};
use crate::rng::derive_seed;

/// Direction in which candidates are declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOrder {
    /// First candidate closest to the real data.
    #[default]
    BestToWorst,
    WorstToBest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSet {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingTask {
    pub real_embeddings: PathBuf,
    pub candidate_sets: Vec<CandidateSet>,
    #[serde(default)]
    pub per_class: bool,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub order: RankOrder,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub dise: DiseConfig,
    #[serde(default)]
    pub knn: KnnConfig,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Dise]
}

fn default_seed() -> u64 {
    42
}

fn default_n_mc() -> usize {
    DEFAULT_N_MC
}

impl RankingTask {
    pub fn new(real: impl Into<PathBuf>, candidates: Vec<(String, PathBuf)>) -> Self {
        Self {
            real_embeddings: real.into(),
            candidate_sets: candidates
                .into_iter()
                .map(|(name, path)| CandidateSet { name, path })
                .collect(),
            per_class: false,
            methods: default_methods(),
            order: RankOrder::default(),
            seed: default_seed(),
            dise: DiseConfig::default(),
            knn: KnnConfig::default(),
            n_mc: DEFAULT_N_MC,
        }
    }

    /// Resolves relative file paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.real_embeddings);
        for c in &mut self.candidate_sets {
            fix(&mut c.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidate_sets.len() < 2 {
            return Err(Error::InvalidConfig("at least two candidate sets are needed".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must not be empty".into()));
        }
        if let Some(m) = self.methods.iter().find(|m| !Method::ESTIMATORS.contains(m)) {
            return Err(Error::InvalidConfig(format!("{m} is not an estimator")));
        }
        if self.n_mc == 0 {
            return Err(Error::InvalidConfig("n_mc must be at least 1".into()));
        }
        self.dise.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateReport {
    pub name: String,
    pub tv_mean: f64,
    /// Spread over classes; 0 without per-class evaluation.
    pub tv_sd: f64,
    /// Noise of `tv_mean` used for tie detection.
    pub std_error: f64,
    pub n_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRanking {
    pub candidates: Vec<CandidateReport>,
    /// Candidate names by increasing TV.
    pub ordering: Vec<String>,
    /// Declared neighbours whose TVs are within two noise units.
    pub ties: Vec<(String, String)>,
    pub correct_ranking: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    pub order: RankOrder,
    pub declared: Vec<String>,
    pub per_class: bool,
    pub seed: u64,
    pub methods: BTreeMap<Method, MethodRanking>,
}

fn estimate_one(task: &RankingTask, method: Method, real: &Dataset, cand: &Dataset, seed: u64) -> Result<TvEstimate> {
    match method {
        Method::Dise => dise::estimate_tv(&task.dise, real, cand, None, seed),
        m => baselines::estimate(m, real, cand, task.n_mc, &task.knn, seed),
    }
}

fn by_class(data: &Dataset, classes: &[i64]) -> BTreeMap<i64, Dataset> {
    let mut idx: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &c) in classes.iter().enumerate() {
        idx.entry(c).or_default().push(i);
    }
    idx.into_iter().map(|(c, rows)| (c, data.select(&rows))).collect()
}

fn report_for(name: &str, ests: &[TvEstimate]) -> CandidateReport {
    let n = ests.len();
    let mean = ests.iter().map(|e| e.tv).sum::<f64>() / n as f64;
    if n == 1 {
        return CandidateReport {
            name: name.to_owned(),
            tv_mean: mean,
            tv_sd: 0.0,
            std_error: ests[0].std_error().unwrap_or(0.0),
            n_classes: 1,
        };
    }
    let sd = (ests.iter().map(|e| (e.tv - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    // noise of a mean over classes from the per-class standard errors
    let se = ests
        .iter()
        .map(|e| e.std_error().unwrap_or(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
        / n as f64;
    CandidateReport {
        name: name.to_owned(),
        tv_mean: mean,
        tv_sd: sd,
        std_error: se,
        n_classes: n,
    }
}

/// Compares declared neighbours: TVs must strictly increase from best to
/// worst, with a gap larger than `2·sqrt(se₁² + se₂²)`.
fn judge(order: RankOrder, candidates: Vec<CandidateReport>) -> MethodRanking {
    let mut best_first: Vec<&CandidateReport> = candidates.iter().collect();
    if order == RankOrder::WorstToBest {
        best_first.reverse();
    }
    let mut ties = Vec::new();
    let mut correct = true;
    for w in best_first.windows(2) {
        let (a, b) = (w[0], w[1]);
        let noise = 2.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        let gap = b.tv_mean - a.tv_mean;
        if gap.abs() <= noise {
            ties.push((a.name.clone(), b.name.clone()));
            correct = false;
        } else if gap < 0.0 {
            correct = false;
        }
    }
    let mut sorted: Vec<&CandidateReport> = candidates.iter().collect();
    sorted.sort_by(|a, b| a.tv_mean.total_cmp(&b.tv_mean));
    let ordering = sorted.iter().map(|c| c.name.clone()).collect();
    MethodRanking {
        candidates,
        ordering,
        ties,
        correct_ranking: correct,
    }
}

/// Estimates TV(real, candidate) for every candidate and method and checks
/// the result against the declared order.
pub fn run_ranking(task: &RankingTask) -> Result<RankingReport> {
    task.validate()?;
    let (real, real_classes) = read_embeddings(&task.real_embeddings, task.per_class)?;
    let mut cands = Vec::with_capacity(task.candidate_sets.len());
    for c in &task.candidate_sets {
        let (d, cl) = read_embeddings(&c.path, task.per_class)?;
        if d.dim() != real.dim() {
            return Err(Error::DimensionMismatch {
                expected: real.dim(),
                found: d.dim(),
            });
        }
        cands.push((c.name.clone(), d, cl));
    }
    let real_by_class = real_classes.as_ref().map(|c| by_class(&real, c));
    let mut methods = BTreeMap::new();
    for &method in &task.methods {
        let mut reports = Vec::with_capacity(cands.len());
        for (ci, (name, data, classes)) in cands.iter().enumerate() {
            let seed = derive_seed(task.seed, ci as u64);
            let ests = match (&real_by_class, classes) {
                (Some(rc), Some(cc)) => {
                    let cand_by_class = by_class(data, cc);
                    let mut out = Vec::new();
                    for (class, r) in rc {
                        let Some(c) = cand_by_class.get(class) else {
                            log::warn!("candidate {name} has no rows of class {class}");
                            continue;
                        };
                        out.push(estimate_one(task, method, r, c, derive_seed(seed, *class as u64))?);
                    }
                    if out.is_empty() {
                        return Err(Error::InvalidConfig(format!(
                            "candidate {name} shares no class with the real data"
                        )));
                    }
                    out
                }
                _ => vec![estimate_one(task, method, &real, data, seed)?],
            };
            reports.push(report_for(name, &ests));
        }
        methods.insert(method, judge(task.order, reports));
    }
    Ok(RankingReport {
        order: task.order,
        declared: task.candidate_sets.iter().map(|c| c.name.clone()).collect(),
        per_class: task.per_class,
        seed: task.seed,
        methods,
    })
}
