//! Discriminative TV estimation.
//!
//! A linear-in-features classifier h(x) = βᵀψ(x) is fit by minimizing the
//! ridge-penalized squared loss of the sigmoid link
//!
//! ```text
//! L(β) = (1/N) Σ (σ(βᵀψ(x_i)) - y_i)² + λ‖β‖²
//! ```
//!
//! over the labelled pool (real = 1, synthetic = 0). The plug-in rule
//! `1{h(x) > 0}` is scored on held-out data and its class-balanced risk R
//! gives the estimate `TV = 1 - 2R`, a lower bound on the true distance up
//! to sampling noise.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, REAL, SYNTHETIC};
use crate::error::{Error, Result};
use crate::estimate::{Method, TvEstimate};
use crate::features::{FeatureMapSpec, Standardization};
use crate::linalg::DenseMatrix;
use crate::optim::{self, LbfgsOptions, Objective};
use crate::rng::derive_seed;
use crate::special::sigmoid;

/// Constant in the automatic ridge strength.
pub const DEFAULT_LAMBDA_C: f64 = 0.001;

/// Ridge strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lambda {
    /// `c · d · ln(N) / N` for `N` training rows and feature dimension `d`.
    Auto { c: f64 },
    Fixed(f64),
}

impl Default for Lambda {
    fn default() -> Self {
        Lambda::Auto { c: DEFAULT_LAMBDA_C }
    }
}

impl Lambda {
    pub fn resolve(self, d: usize, n_train: usize) -> f64 {
        match self {
            Lambda::Auto { c } => {
                let n = n_train.max(2) as f64;
                c * d as f64 * n.ln() / n
            }
            Lambda::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiseConfig {
    pub lambda: Lambda,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Fraction of each class held out when no evaluation set is supplied.
    pub eval_fraction: f64,
    /// Feature map; defaults to the quadratic map of the data dimension.
    pub feature_spec: Option<FeatureMapSpec>,
    pub standardize: bool,
}

impl Default for DiseConfig {
    fn default() -> Self {
        Self {
            lambda: Lambda::default(),
            max_iters: 500,
            grad_tol: 1e-7,
            eval_fraction: 1.0 / 3.0,
            feature_spec: None,
            standardize: true,
        }
    }
}

impl DiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::InvalidConfig("eval_fraction must lie in (0, 1)".into()));
        }
        match self.lambda {
            Lambda::Fixed(v) if !(v >= 0.0) => {
                Err(Error::InvalidConfig("lambda must be non-negative".into()))
            }
            Lambda::Auto { c } if !(c >= 0.0) => {
                Err(Error::InvalidConfig("lambda constant must be non-negative".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn with_features(mut self, spec: FeatureMapSpec) -> Self {
        self.feature_spec = Some(spec);
        self
    }

    fn spec_for(&self, p: usize) -> Result<FeatureMapSpec> {
        let spec = self
            .feature_spec
            .unwrap_or_else(|| FeatureMapSpec::gaussian_quadratic(p));
        if spec.input_dim() != p {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim(),
                found: p,
            });
        }
        Ok(spec)
    }
}

/// Signed residual `σ(z) - y` and curvature weight `σ(z)σ(-z)`.
///
/// Both are computed from the tail-safe side of the sigmoid so that
/// negating `z` and flipping `y` negates the residual exactly.
#[inline]
fn residual_and_weight(z: f64, y: u8) -> (f64, f64) {
    let s_pos = sigmoid(z);
    let s_neg = sigmoid(-z);
    let r = if y == REAL { -s_neg } else { s_pos };
    (r, s_pos * s_neg)
}

/// Loss and gradient of the penalized squared-sigmoid objective.
///
/// `loss = (1/N) Σ (σ(βᵀψ_i) - y_i)² + λ‖β‖²`,
/// `grad = (2/N) Σ (σ_i - y_i) σ_i (1 - σ_i) ψ_i + 2λβ`.
pub fn objective_and_gradient(
    beta: &[f64],
    features: &DenseMatrix,
    labels: &[u8],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; beta.len()];
    let loss = loss_and_gradient_into(beta, features, labels, lambda, &mut grad)?;
    Ok((loss, grad))
}

fn loss_and_gradient_into(
    beta: &[f64],
    features: &DenseMatrix,
    labels: &[u8],
    lambda: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let d = features.cols();
    if beta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: beta.len(),
        });
    }
    if labels.len() != features.rows() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            found: labels.len(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter("lambda must be non-negative".into()));
    }
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = features.rows();
    let mut loss = 0.0;
    for (row, &y) in features.row_iter().zip(labels) {
        let z: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let (r, w) = residual_and_weight(z, y);
        loss += r * r;
        let coef = r * w;
        if coef != 0.0 {
            for (g, v) in grad.iter_mut().zip(row) {
                *g += coef * v;
            }
        }
    }
    let inv_n = if n > 0 { 1.0 / n as f64 } else { 0.0 };
    let mut penalty = 0.0;
    for (g, b) in grad.iter_mut().zip(beta) {
        *g = 2.0 * inv_n * *g + 2.0 * lambda * b;
        penalty += b * b;
    }
    let loss = loss * inv_n + lambda * penalty;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(loss)
}

struct SquaredSigmoidLoss<'a> {
    features: &'a DenseMatrix,
    labels: &'a [u8],
    lambda: f64,
}

impl Objective for SquaredSigmoidLoss<'_> {
    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        loss_and_gradient_into(x, self.features, self.labels, self.lambda, grad)
    }
}

const MODEL_FORMAT: &str = "tvdise-classifier";
const MODEL_VERSION: u32 = 1;

/// The fitted predictor ĥ(x) = βᵀψ(x) with β on the raw (unstandardized)
/// feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    pub beta: Vec<f64>,
    #[serde(rename = "feature_tag")]
    pub feature_spec: FeatureMapSpec,
    pub train_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub lambda: f64,
    pub n_train: usize,
    /// Objective value after every accepted optimizer step.
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: FittedClassifier,
}

impl FittedClassifier {
    /// ĥ(x).
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        let psi = self.feature_spec.apply(x)?;
        Ok(psi.iter().zip(&self.beta).map(|(a, b)| a * b).sum())
    }

    /// Plug-in rule `1{ĥ(x) > 0}`.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(if self.decision(x)? > 0.0 { REAL } else { SYNTHETIC })
    }

    /// Misclassification counts on a (real, synthetic) pair.
    fn errors(&self, real: &Dataset, synth: &Dataset) -> Result<(usize, usize)> {
        let d = self.feature_spec.out_dim();
        let mut psi = vec![0.0; d];
        let mut count = |data: &Dataset, truth: u8| -> Result<usize> {
            let mut wrong = 0;
            for x in data.rows() {
                self.feature_spec.apply_into(x, &mut psi)?;
                let h: f64 = psi.iter().zip(&self.beta).map(|(a, b)| a * b).sum();
                let pred = if h > 0.0 { REAL } else { SYNTHETIC };
                wrong += usize::from(pred != truth);
            }
            Ok(wrong)
        };
        Ok((count(real, REAL)?, count(synth, SYNTHETIC)?))
    }

    /// Class-balanced plug-in risk on held-out data, as a TV estimate.
    pub fn evaluate(&self, real: &Dataset, synth: &Dataset) -> Result<TvEstimate> {
        if real.is_empty() || synth.is_empty() {
            return Err(Error::TooFewSamples {
                needed: 1,
                found: real.len().min(synth.len()),
            });
        }
        let (er, es) = self.errors(real, synth)?;
        let (nr, ns) = (real.len() as f64, synth.len() as f64);
        let (fr, fs) = (er as f64 / nr, es as f64 / ns);
        let risk = 0.5 * (fr + fs);
        let var_risk = 0.25 * (fr * (1.0 - fr) / nr + fs * (1.0 - fs) / ns);
        Ok(TvEstimate::from_risk(Method::Dise, risk, real.len() + synth.len())
            .with("std_error", 2.0 * var_risk.sqrt())
            .with("lambda", self.lambda)
            .with("iterations", self.iterations as f64)
            .with("converged", f64::from(u8::from(self.converged)))
            .with("train_loss", self.train_loss)
            .with("grad_norm", self.grad_norm)
            .with("n_train", self.n_train as f64))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        if doc.model.beta.len() != doc.model.feature_spec.out_dim() {
            return Err(Error::DimensionMismatch {
                expected: doc.model.feature_spec.out_dim(),
                found: doc.model.beta.len(),
            });
        }
        Ok(doc.model)
    }
}

/// Fits β from zero on a labelled training set.
///
/// Non-convergence is not an error: the result carries `converged = false`.
pub fn fit(config: &DiseConfig, train: &Dataset) -> Result<FittedClassifier> {
    config.validate()?;
    let labels = train
        .labels()
        .ok_or_else(|| Error::InvalidParameter("training data must be labelled".into()))?;
    if !labels.contains(&REAL) || !labels.contains(&SYNTHETIC) {
        return Err(Error::DegenerateLabels);
    }
    let spec = config.spec_for(train.dim())?;
    let (features, standardization) = if config.standardize {
        spec.apply_dataset_standardized(train)?
    } else {
        let m = spec.apply_dataset(train)?;
        let s = Standardization::identity(m.cols());
        (m, s)
    };
    let lambda = config.lambda.resolve(spec.out_dim(), train.len());
    let objective = SquaredSigmoidLoss {
        features: &features,
        labels,
        lambda,
    };
    let opts = LbfgsOptions {
        max_iters: config.max_iters,
        grad_tol: config.grad_tol,
        ..LbfgsOptions::default()
    };
    let report = optim::minimize(&objective, &vec![0.0; spec.out_dim()], &opts)?;
    if !report.converged {
        log::debug!(
            "classifier fit stopped after {} iterations with |grad| = {:e}",
            report.iterations,
            report.grad_norm
        );
    }
    Ok(FittedClassifier {
        beta: standardization.unstandardize_beta(&report.x),
        feature_spec: spec,
        train_loss: report.value,
        iterations: report.iterations,
        converged: report.converged,
        grad_norm: report.grad_norm,
        lambda,
        n_train: train.len(),
        loss_history: report.history,
    })
}

/// Stratified hold-out split of each class.
pub fn stratified_split(
    real: &Dataset,
    synth: &Dataset,
    eval_fraction: f64,
    seed: u64,
) -> ((Dataset, Dataset), (Dataset, Dataset)) {
    let (re, rt) = Dataset::split_indices(real.len(), eval_fraction, derive_seed(seed, 1));
    let (se, st) = Dataset::split_indices(synth.len(), eval_fraction, derive_seed(seed, 2));
    (
        (real.select(&rt), synth.select(&st)),
        (real.select(&re), synth.select(&se)),
    )
}

/// TV estimate from a real and a synthetic sample.
///
/// With `eval = None` each class is split (stratified, `eval_fraction`
/// held out); otherwise the whole of `real`/`synth` trains and `eval` is
/// scored.
pub fn estimate_tv(
    config: &DiseConfig,
    real: &Dataset,
    synth: &Dataset,
    eval: Option<(&Dataset, &Dataset)>,
    seed: u64,
) -> Result<TvEstimate> {
    config.validate()?;
    if real.is_empty() || synth.is_empty() {
        return Err(Error::TooFewSamples {
            needed: 1,
            found: real.len().min(synth.len()),
        });
    }
    if real.dim() != synth.dim() {
        return Err(Error::DimensionMismatch {
            expected: real.dim(),
            found: synth.dim(),
        });
    }
    let (model, estimate, external) = match eval {
        Some((er, es)) => {
            let train = Dataset::stack_labeled(real, synth)?;
            let model = fit(config, &train)?;
            let est = model.evaluate(er, es)?;
            (model, est, true)
        }
        None => {
            let ((tr, ts), (er, es)) = stratified_split(real, synth, config.eval_fraction, seed);
            let train = Dataset::stack_labeled(&tr, &ts)?;
            let model = fit(config, &train)?;
            let est = model.evaluate(&er, &es)?;
            (model, est, false)
        }
    };
    log::trace!("fitted {} with {} iterations", model.feature_spec, model.iterations);
    Ok(estimate.with("eval_external", f64::from(u8::from(external))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{GaussianParams, MixturePair};
    use crate::rng::{self, NormalSource};

    fn gauss1(mean: f64) -> GaussianParams {
        GaussianParams::new(vec![mean], DenseMatrix::identity(1)).unwrap()
    }

    #[test]
    fn zero_beta_balanced_loss() {
        let f = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, -2.0]]).unwrap();
        let (loss, grad) = objective_and_gradient(&[0.0, 0.0], &f, &[1, 0], 0.0).unwrap();
        assert_eq!(loss, 0.25);
        assert_eq!(grad[0], 0.0);
    }

    #[test]
    fn penalty_term() {
        // zero feature rows: the data term is constant 0.25 regardless of β
        let f = DenseMatrix::zeros(2, 3);
        let (loss, grad) = objective_and_gradient(&[1.0, 0.0, 0.0], &f, &[1, 0], 0.3).unwrap();
        assert!((loss - 0.25 - 0.3).abs() < 1e-15);
        assert!((grad[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let f = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            objective_and_gradient(&[0.0; 2], &f, &[1, 0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            objective_and_gradient(&[0.0; 3], &f, &[1], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn saturated_logits_stay_finite() {
        let f = DenseMatrix::from_rows(&[vec![1.0, 1e4], vec![1.0, -1e4]]).unwrap();
        let (loss, grad) = objective_and_gradient(&[0.0, 1.0], &f, &[0, 1], 0.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng::seeded(5);
        let mut ns = NormalSource::new();
        for trial in 0..20 {
            let d = 2 + trial % 12;
            let n = 40;
            let data: Vec<f64> = (0..n * d).map(|_| ns.sample(&mut r)).collect();
            let f = DenseMatrix::from_row_major(n, d, data).unwrap();
            let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            let beta: Vec<f64> = (0..d).map(|_| 0.5 * ns.sample(&mut r)).collect();
            let (_, g) = objective_and_gradient(&beta, &f, &labels, 0.01).unwrap();
            for k in 0..d {
                let h = 1e-5;
                let mut bp = beta.clone();
                let mut bm = beta.clone();
                bp[k] += h;
                bm[k] -= h;
                let fp = objective_and_gradient(&bp, &f, &labels, 0.01).unwrap().0;
                let fm = objective_and_gradient(&bm, &f, &labels, 0.01).unwrap().0;
                let fd = (fp - fm) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-3), "{fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn degenerate_labels_rejected() {
        let data = Dataset::labeled(DenseMatrix::zeros(3, 1), vec![1, 1, 1]).unwrap();
        assert!(matches!(fit(&DiseConfig::default(), &data), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn fit_is_deterministic_and_monotone() {
        let pair = MixturePair::new(gauss1(0.7), gauss1(-0.7)).unwrap();
        let train = pair.sample_mixture(2000, 3);
        let a = fit(&DiseConfig::default(), &train).unwrap();
        let b = fit(&DiseConfig::default(), &train).unwrap();
        assert_eq!(a.beta, b.beta);
        assert!(a.converged, "{a:?}");
        assert!(a.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn separated_pair_recovers_bayes_sign() {
        let pair = MixturePair::new(gauss1(3.0), gauss1(-3.0)).unwrap();
        let train = pair.sample_mixture(10_000, 21);
        let model = fit(&DiseConfig::default(), &train).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|i| -5.0 + 0.01 * i as f64).collect();
        let agree = grid
            .iter()
            .filter(|&&x| x != 0.0)
            .filter(|&&x| model.predict(&[x]).unwrap() == u8::from(x > 0.0))
            .count();
        assert!(agree as f64 >= 0.99 * 1000.0, "{agree}");
    }

    #[test]
    fn identical_distributions_give_small_tv() {
        let g = gauss1(0.0);
        let real = crate::distributions::sample_gaussian(&g, 10_000, 1);
        let synth = crate::distributions::sample_gaussian(&g, 10_000, 2);
        let est = estimate_tv(&DiseConfig::default(), &real, &synth, None, 7).unwrap();
        assert!(est.tv <= 0.03, "{est:?}");
        let risk = est.risk.unwrap();
        assert!((risk - 0.5).abs() <= 0.02, "{risk}");
    }

    #[test]
    fn disjoint_supports_give_unit_tv() {
        let pair = MixturePair::new(gauss1(10.0), gauss1(-10.0)).unwrap();
        let (r, s) = pair.sample_mixture(1000, 4).split_by_label().unwrap();
        let est = estimate_tv(&DiseConfig::default(), &r, &s, None, 1).unwrap();
        assert!(est.tv >= 0.999, "{est:?}");
    }

    #[test]
    fn model_json_round_trip() {
        let pair = MixturePair::new(gauss1(1.0), gauss1(-1.0)).unwrap();
        let model = fit(&DiseConfig::default(), &pair.sample_mixture(500, 2)).unwrap();
        let json = model.to_json().unwrap();
        assert!(json.contains("\"feature_tag\": \"gq:p=1\""));
        let back = FittedClassifier::from_json(&json).unwrap();
        assert_eq!(back.beta, model.beta);
        assert_eq!(back.feature_spec, model.feature_spec);
        let bad = json.replace("\"version\": 1", "\"version\": 9");
        assert!(FittedClassifier::from_json(&bad).is_err());
    }

    #[test]
    fn auto_lambda() {
        assert!((Lambda::Auto { c: 1.0 }.resolve(6, 1000) - 6.0 * 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert_eq!(Lambda::Fixed(0.5).resolve(6, 1000), 0.5);
    }

    #[test]
    fn config_validation() {
        let bad = DiseConfig { eval_fraction: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DiseConfig { grad_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DiseConfig { lambda: Lambda::Fixed(-1.0), ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
