//! Feature maps ψ defining the linear hypothesis class h(x) = βᵀψ(x).
//!
//! Two kinds exist: the full quadratic map for Gaussian pairs and the fixed
//! univariate maps for pairs of exponential-family members. Each map spans
//! the exact log-density ratio of its pair, so the Bayes rule lies in the
//! class.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distributions::{FamilyKind, MixturePair};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// One coordinate of a univariate map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    One,
    X,
    XSquared,
    LogX,
    LogOneMinusX,
}

impl Term {
    fn eval(self, x: f64) -> f64 {
        match self {
            Term::One => 1.0,
            Term::X => x,
            Term::XSquared => x * x,
            Term::LogX => x.ln(),
            Term::LogOneMinusX => (-x).ln_1p(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMapSpec {
    /// `(1, x_1..x_p, x_i x_j for i <= j)` with `d = (p+2)(p+1)/2`.
    GaussianQuadratic { p: usize },
    /// Univariate map for an unordered pair of families; stored with
    /// `first <= second`.
    Univariate { first: FamilyKind, second: FamilyKind },
}

impl FeatureMapSpec {
    pub fn gaussian_quadratic(p: usize) -> Self {
        Self::GaussianQuadratic { p }
    }

    pub fn univariate(a: FamilyKind, b: FamilyKind) -> Self {
        let (first, second) = if a <= b { (a, b) } else { (b, a) };
        Self::Univariate { first, second }
    }

    /// Map whose span contains the log-ratio of `pair`.
    pub fn for_pair(pair: &MixturePair) -> Result<Self> {
        match (pair.p.univariate_kind(), pair.q.univariate_kind()) {
            (Some(a), Some(b)) => Ok(Self::univariate(a, b)),
            (None, None) => Ok(Self::gaussian_quadratic(pair.dim())),
            _ => Err(Error::InvalidParameter(
                "no feature map for a multivariate/univariate pair".into(),
            )),
        }
    }

    pub fn input_dim(&self) -> usize {
        match *self {
            Self::GaussianQuadratic { p } => p,
            Self::Univariate { .. } => 1,
        }
    }

    pub fn out_dim(&self) -> usize {
        match *self {
            Self::GaussianQuadratic { p } => (p + 2) * (p + 1) / 2,
            Self::Univariate { .. } => self.terms().len(),
        }
    }

    /// Coordinates of a univariate map, in output order.
    pub fn terms(&self) -> &'static [Term] {
        use FamilyKind::*;
        use Term::*;
        match *self {
            Self::GaussianQuadratic { .. } => &[],
            Self::Univariate { first, second } => match (first, second) {
                (Gaussian, Gaussian) | (Gaussian, Exponential) => &[One, X, XSquared],
                (Gaussian, Gamma) => &[One, X, XSquared, LogX],
                (Gaussian, Beta) => &[One, X, XSquared, LogX, LogOneMinusX],
                (Exponential, Exponential) => &[One, X],
                (Exponential, Gamma) | (Gamma, Gamma) => &[One, X, LogX],
                (Exponential, Beta) | (Gamma, Beta) => &[One, X, LogX, LogOneMinusX],
                (Beta, Beta) => &[One, LogX, LogOneMinusX],
                _ => unreachable!("pairs are stored ordered"),
            },
        }
    }

    /// ψ(x) written into `out` (length `out_dim`).
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        match *self {
            Self::GaussianQuadratic { p } => {
                out[0] = 1.0;
                out[1..=p].copy_from_slice(x);
                let mut k = p + 1;
                for i in 0..p {
                    for j in i..p {
                        out[k] = x[i] * x[j];
                        k += 1;
                    }
                }
            }
            Self::Univariate { .. } => {
                let v = x[0];
                for (o, &t) in out.iter_mut().zip(self.terms()) {
                    match t {
                        Term::LogX if !(v > 0.0) => {
                            return Err(Error::DomainViolation {
                                row: None,
                                reason: format!("log x at x = {v}"),
                            })
                        }
                        Term::LogOneMinusX if !(v < 1.0) => {
                            return Err(Error::DomainViolation {
                                row: None,
                                reason: format!("log(1 - x) at x = {v}"),
                            })
                        }
                        _ => {}
                    }
                    *o = t.eval(v);
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// Row-wise ψ over a dataset.
    pub fn apply_dataset(&self, data: &Dataset) -> Result<DenseMatrix> {
        let d = self.out_dim();
        let mut out = vec![0.0; data.len() * d];
        for (i, (x, row)) in data.rows().zip(out.chunks_exact_mut(d)).enumerate() {
            self.apply_into(x, row).map_err(|e| match e {
                Error::DomainViolation { reason, .. } => Error::DomainViolation {
                    row: Some(i),
                    reason,
                },
                other => other,
            })?;
        }
        DenseMatrix::from_row_major(data.len(), d, out)
    }

    /// Row-wise ψ plus column standardization statistics; the returned
    /// matrix is already standardized.
    pub fn apply_dataset_standardized(&self, data: &Dataset) -> Result<(DenseMatrix, Standardization)> {
        let mut m = self.apply_dataset(data)?;
        let s = Standardization::fit(&m);
        s.apply_in_place(&mut m);
        Ok((m, s))
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

fn family_tag(k: FamilyKind) -> &'static str {
    match k {
        FamilyKind::Gaussian => "gauss",
        FamilyKind::Exponential => "exp",
        FamilyKind::Gamma => "gamma",
        FamilyKind::Beta => "beta",
    }
}

fn parse_family(s: &str) -> Option<FamilyKind> {
    Some(match s {
        "gauss" | "gaussian" | "normal" => FamilyKind::Gaussian,
        "exp" | "exponential" => FamilyKind::Exponential,
        "gamma" => FamilyKind::Gamma,
        "beta" => FamilyKind::Beta,
        _ => return None,
    })
}

impl fmt::Display for FeatureMapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::GaussianQuadratic { p } => write!(f, "gq:p={p}"),
            Self::Univariate { first, second } => {
                write!(f, "t1:{}-{}", family_tag(first), family_tag(second))
            }
        }
    }
}

impl FromStr for FeatureMapSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized feature tag {s:?}"));
        if let Some(rest) = s.strip_prefix("gq:p=") {
            let p: usize = rest.parse().map_err(|_| bad())?;
            if p == 0 {
                return Err(bad());
            }
            return Ok(Self::gaussian_quadratic(p));
        }
        if let Some(rest) = s.strip_prefix("t1:") {
            let (a, b) = rest.split_once('-').ok_or_else(bad)?;
            let a = parse_family(a).ok_or_else(bad)?;
            let b = parse_family(b).ok_or_else(bad)?;
            return Ok(Self::univariate(a, b));
        }
        Err(bad())
    }
}

impl Serialize for FeatureMapSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FeatureMapSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-column centering and scaling. Column 0 (the intercept) and
/// constant columns pass through unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn fit(m: &DenseMatrix) -> Self {
        let (n, d) = (m.rows(), m.cols());
        let mut s = Self::identity(d);
        if n == 0 {
            return s;
        }
        let mut sum = vec![0.0; d];
        for row in m.row_iter() {
            for (a, v) in sum.iter_mut().zip(row) {
                *a += v;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|v| v / n as f64).collect();
        let mut ss = vec![0.0; d];
        for row in m.row_iter() {
            for ((a, v), mu) in ss.iter_mut().zip(row).zip(&mean) {
                *a += (v - mu) * (v - mu);
            }
        }
        for j in 1..d {
            let sd = (ss[j] / n as f64).sqrt();
            if sd > 1e-12 * (1.0 + mean[j].abs()) {
                s.mean[j] = mean[j];
                s.scale[j] = sd;
            }
        }
        s
    }

    pub fn apply_in_place(&self, m: &mut DenseMatrix) {
        for i in 0..m.rows() {
            for (j, v) in m.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
    }

    /// Coefficients on raw features giving the same predictor as `beta`
    /// on standardized features. Requires column 0 to be the intercept.
    pub fn unstandardize_beta(&self, beta: &[f64]) -> Vec<f64> {
        let mut raw = vec![0.0; beta.len()];
        let mut intercept = beta.first().copied().unwrap_or(0.0);
        for j in 1..beta.len() {
            raw[j] = beta[j] / self.scale[j];
            intercept -= raw[j] * self.mean[j];
        }
        if !raw.is_empty() {
            raw[0] = intercept;
        }
        raw
    }
}
