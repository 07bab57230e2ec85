//! Component distributions ℙ and ℚ, their equal-weight mixture, and the
//! exact posterior η(x) = ℙ(x) / (ℙ(x) + ℚ(x)) with its Bayes rule.
//!
//! Log-densities return `-inf` outside the support; strict callers use
//! [`Distribution::log_density_strict`] to get an [`Error::OutOfSupport`].

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, REAL, SYNTHETIC};
use crate::error::{Error, Result};
use crate::linalg::{self, CholeskyFactor, DenseMatrix};
use crate::rng::{self, NormalSource};
use crate::special::{ln_gamma, sigmoid};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Multivariate normal N(μ, Σ) with its cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    mean: Vec<f64>,
    cov: DenseMatrix,
    chol: CholeskyFactor,
    log_norm_const: f64,
}

impl GaussianParams {
    pub fn new(mean: Vec<f64>, cov: DenseMatrix) -> Result<Self> {
        if cov.rows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.rows(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("mean must be finite".into()));
        }
        let chol = linalg::cholesky(&cov)?;
        let p = mean.len() as f64;
        let log_norm_const = -0.5 * p * LN_2PI - 0.5 * linalg::log_det(&chol);
        Ok(Self {
            mean,
            cov,
            chol,
            log_norm_const,
        })
    }

    pub fn standard(p: usize) -> Self {
        Self::new(vec![0.0; p], DenseMatrix::identity(p)).expect("identity is positive definite")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &DenseMatrix {
        &self.cov
    }

    pub fn chol(&self) -> &CholeskyFactor {
        &self.chol
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_norm_const
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_norm_const - 0.5 * linalg::mahalanobis_sq(x, &self.mean, &self.chol)?)
    }

    /// Log-density with a caller-provided scratch buffer of length `dim`.
    #[inline]
    pub(crate) fn log_density_with(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.log_norm_const
            - 0.5 * linalg::mahalanobis_sq_unchecked(x, &self.mean, &self.chol, scratch)
    }

    /// Writes one draw `μ + L z` into `out`.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        normals: &mut NormalSource,
        z: &mut [f64],
        out: &mut [f64],
    ) {
        normals.fill(rng, z);
        self.chol.lower_mul(z, out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
    }
}

/// `n` i.i.d. draws from `g`; deterministic given `seed`.
pub fn sample_gaussian(g: &GaussianParams, n: usize, seed: u64) -> Dataset {
    let p = g.dim();
    let mut rng = rng::seeded(seed);
    let mut normals = NormalSource::new();
    let mut z = vec![0.0; p];
    let mut data = vec![0.0; n * p];
    for row in data.chunks_exact_mut(p.max(1)).take(n) {
        g.sample_into(&mut rng, &mut normals, &mut z, row);
    }
    Dataset::new(DenseMatrix::from_row_major(n, p, data).expect("finite draws"))
}

/// One of the four univariate exponential-family members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UnivariateFamily {
    Normal { mean: f64, var: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
}

/// Family tag used for feature-map selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    Gaussian,
    Exponential,
    Gamma,
    Beta,
}

impl UnivariateFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Normal { mean, var } => mean.is_finite() && var > 0.0 && var.is_finite(),
            Self::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Self::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
            Self::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid parameters for {self:?}"
            )))
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Self::Normal { .. } => FamilyKind::Gaussian,
            Self::Exponential { .. } => FamilyKind::Exponential,
            Self::Gamma { .. } => FamilyKind::Gamma,
            Self::Beta { .. } => FamilyKind::Beta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Normal { .. } => "normal",
            Self::Exponential { .. } => "exponential",
            Self::Gamma { .. } => "gamma",
            Self::Beta { .. } => "beta",
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        match self {
            Self::Normal { .. } => x.is_finite(),
            Self::Exponential { .. } | Self::Gamma { .. } => x > 0.0 && x.is_finite(),
            Self::Beta { .. } => x > 0.0 && x < 1.0,
        }
    }

    /// Exact log-density; `-inf` outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            // Exponential density is finite at the boundary point 0
            if let Self::Exponential { rate } = *self {
                if x == 0.0 {
                    return rate.ln();
                }
            }
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Normal { mean, var } => {
                let d = x - mean;
                -0.5 * (LN_2PI + var.ln()) - 0.5 * d * d / var
            }
            Self::Exponential { rate } => rate.ln() - rate * x,
            Self::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Self::Beta { a, b } => {
                let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::Exponential { rate } => 1.0 / rate,
            Self::Gamma { shape, rate } => shape / rate,
            Self::Beta { a, b } => a / (a + b),
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            Self::Normal { var, .. } => var.sqrt(),
            Self::Exponential { rate } => 1.0 / rate,
            Self::Gamma { shape, rate } => shape.sqrt() / rate,
            Self::Beta { a, b } => ((a * b) / ((a + b) * (a + b) * (a + b + 1.0))).sqrt(),
        }
    }

    /// Interval holding all but a negligible fraction of the mass.
    pub fn covering_interval(&self) -> (f64, f64) {
        match *self {
            Self::Normal { mean, var } => {
                let s = var.sqrt();
                (mean - 12.0 * s, mean + 12.0 * s)
            }
            Self::Exponential { rate } => (0.0, 40.0 / rate),
            Self::Gamma { .. } => {
                let cap = self.mean() + 40.0 * self.sd();
                (0.0, cap)
            }
            Self::Beta { .. } => (0.0, 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, normals: &mut NormalSource) -> f64 {
        match *self {
            Self::Normal { mean, var } => mean + var.sqrt() * normals.sample(rng),
            Self::Exponential { rate } => rng::exponential(rng, rate),
            Self::Gamma { shape, rate } => rng::gamma(rng, normals, shape, rate),
            Self::Beta { a, b } => rng::beta(rng, normals, a, b),
        }
    }
}

/// Either a multivariate Gaussian or a univariate family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub enum Distribution {
    Gaussian(GaussianParams),
    Univariate(UnivariateFamily),
}

/// Serialized form of a [`Distribution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    Gaussian { mean: Vec<f64>, cov: DenseMatrix },
    Normal { mean: f64, var: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        let uni = match spec {
            DistributionSpec::Gaussian { mean, cov } => {
                return Ok(Self::Gaussian(GaussianParams::new(mean, cov)?))
            }
            DistributionSpec::Normal { mean, var } => UnivariateFamily::Normal { mean, var },
            DistributionSpec::Exponential { rate } => UnivariateFamily::Exponential { rate },
            DistributionSpec::Gamma { shape, rate } => UnivariateFamily::Gamma { shape, rate },
            DistributionSpec::Beta { a, b } => UnivariateFamily::Beta { a, b },
        };
        uni.validate()?;
        Ok(Self::Univariate(uni))
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Gaussian(g) => DistributionSpec::Gaussian {
                mean: g.mean,
                cov: g.cov,
            },
            Distribution::Univariate(u) => match u {
                UnivariateFamily::Normal { mean, var } => DistributionSpec::Normal { mean, var },
                UnivariateFamily::Exponential { rate } => DistributionSpec::Exponential { rate },
                UnivariateFamily::Gamma { shape, rate } => DistributionSpec::Gamma { shape, rate },
                UnivariateFamily::Beta { a, b } => DistributionSpec::Beta { a, b },
            },
        }
    }
}

impl From<GaussianParams> for Distribution {
    fn from(g: GaussianParams) -> Self {
        Self::Gaussian(g)
    }
}

impl From<UnivariateFamily> for Distribution {
    fn from(u: UnivariateFamily) -> Self {
        Self::Univariate(u)
    }
}

impl Distribution {
    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.dim(),
            Self::Univariate(_) => 1,
        }
    }

    /// Family tag when this is a one-dimensional distribution.
    pub fn univariate_kind(&self) -> Option<FamilyKind> {
        match self {
            Self::Gaussian(g) if g.dim() == 1 => Some(FamilyKind::Gaussian),
            Self::Gaussian(_) => None,
            Self::Univariate(u) => Some(u.kind()),
        }
    }

    /// Log-density, `-inf` outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Gaussian(g) => g.log_density(x),
            Self::Univariate(u) => {
                if x.len() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        found: x.len(),
                    });
                }
                Ok(u.log_density(x[0]))
            }
        }
    }

    /// Log-density that reports points outside the support as errors.
    pub fn log_density_strict(&self, x: &[f64]) -> Result<f64> {
        let v = self.log_density(x)?;
        if v == f64::NEG_INFINITY {
            let family = match self {
                Self::Gaussian(_) => "gaussian",
                Self::Univariate(u) => u.name(),
            };
            return Err(Error::OutOfSupport { family, x: x[0] });
        }
        Ok(v)
    }

    /// Density of a scalar for one-dimensional distributions. At a finite
    /// support boundary the one-sided limit is returned.
    pub fn density_1d(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian(g) => g.log_density(&[x]).map_or(0.0, f64::exp),
            Self::Univariate(u) => {
                let x = match u {
                    UnivariateFamily::Gamma { .. } | UnivariateFamily::Beta { .. } if x == 0.0 => {
                        f64::MIN_POSITIVE
                    }
                    UnivariateFamily::Beta { .. } if x == 1.0 => 1.0 - f64::EPSILON / 2.0,
                    _ => x,
                };
                u.log_density(x).exp()
            }
        }
    }

    /// Covering interval for one-dimensional distributions.
    pub fn covering_interval_1d(&self) -> Option<(f64, f64)> {
        match self {
            Self::Gaussian(g) if g.dim() == 1 => {
                let s = g.cov()[(0, 0)].sqrt();
                let m = g.mean()[0];
                Some((m - 12.0 * s, m + 12.0 * s))
            }
            Self::Gaussian(_) => None,
            Self::Univariate(u) => Some(u.covering_interval()),
        }
    }

    /// Support boundaries (finite endpoints where the density may jump).
    pub fn support_breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Univariate(UnivariateFamily::Exponential { .. })
            | Self::Univariate(UnivariateFamily::Gamma { .. }) => vec![0.0],
            Self::Univariate(UnivariateFamily::Beta { .. }) => vec![0.0, 1.0],
            _ => Vec::new(),
        }
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        normals: &mut NormalSource,
        z: &mut [f64],
        out: &mut [f64],
    ) {
        match self {
            Self::Gaussian(g) => g.sample_into(rng, normals, z, out),
            Self::Univariate(u) => out[0] = u.sample(rng, normals),
        }
    }

    /// `n` i.i.d. draws; deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        if let Self::Gaussian(g) = self {
            return sample_gaussian(g, n, seed);
        }
        let p = self.dim();
        let mut rng = rng::seeded(seed);
        let mut normals = NormalSource::new();
        let mut z = vec![0.0; p];
        let mut data = vec![0.0; n * p];
        for row in data.chunks_exact_mut(p) {
            self.sample_into(&mut rng, &mut normals, &mut z, row);
        }
        Dataset::new(DenseMatrix::from_row_major(n, p, data).expect("finite draws"))
    }
}

/// The pair (ℙ, ℚ) defining the mixture 𝔻 = (ℙ + ℚ)/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePair {
    pub p: Distribution,
    pub q: Distribution,
}

impl MixturePair {
    pub fn new(p: impl Into<Distribution>, q: impl Into<Distribution>) -> Result<Self> {
        let (p, q) = (p.into(), q.into());
        if p.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: q.dim(),
            });
        }
        Ok(Self { p, q })
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn swapped(&self) -> Self {
        Self {
            p: self.q.clone(),
            q: self.p.clone(),
        }
    }

    /// `log ℙ(x) - log ℚ(x)`; errors when both densities vanish.
    pub fn log_ratio(&self, x: &[f64]) -> Result<f64> {
        let lp = self.p.log_density(x)?;
        let lq = self.q.log_density(x)?;
        if lp == f64::NEG_INFINITY && lq == f64::NEG_INFINITY {
            return Err(Error::BothZero);
        }
        Ok(lp - lq)
    }

    /// η(x) = ℙ(x) / (ℙ(x) + ℚ(x)), computed as a sigmoid of the log-ratio.
    pub fn eta(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.log_ratio(x)?))
    }

    /// Bayes rule `1{log ℙ(x) - log ℚ(x) > 0}`; ties go to 0.
    pub fn bayes_classify(&self, x: &[f64]) -> Result<u8> {
        Ok(if self.log_ratio(x)? > 0.0 { REAL } else { SYNTHETIC })
    }

    /// `n` draws from the mixture; each row picks ℙ (label 1) or ℚ (label 0)
    /// by a fair coin.
    pub fn sample_mixture(&self, n: usize, seed: u64) -> Dataset {
        let p = self.dim();
        let mut rng = rng::seeded(seed);
        let mut normals = NormalSource::new();
        let mut z = vec![0.0; p];
        let mut data = vec![0.0; n * p];
        let mut labels = Vec::with_capacity(n);
        for row in data.chunks_exact_mut(p) {
            if rng.gen::<bool>() {
                self.p.sample_into(&mut rng, &mut normals, &mut z, row);
                labels.push(REAL);
            } else {
                self.q.sample_into(&mut rng, &mut normals, &mut z, row);
                labels.push(SYNTHETIC);
            }
        }
        Dataset::labeled(
            DenseMatrix::from_row_major(n, p, data).expect("finite draws"),
            labels,
        )
        .expect("one label per row")
    }
}

/// Log-ratio of two Gaussians written out through their parameters:
/// `½[log(det Σ₂ / det Σ₁) + (x-μ₂)ᵀΣ₂⁻¹(x-μ₂) - (x-μ₁)ᵀΣ₁⁻¹(x-μ₁)]`.
pub fn gaussian_log_ratio_closed_form(
    g1: &GaussianParams,
    g2: &GaussianParams,
    x: &[f64],
) -> Result<f64> {
    let m1 = linalg::mahalanobis_sq(x, g1.mean(), g1.chol())?;
    let m2 = linalg::mahalanobis_sq(x, g2.mean(), g2.chol())?;
    Ok(0.5 * (linalg::log_det(g2.chol()) - linalg::log_det(g1.chol()) + m2 - m1))
}

/// Standard normal log-density constant, exposed for tests.
pub fn standard_normal_log_mode() -> f64 {
    -0.5 * (2.0 * PI).ln()
}
