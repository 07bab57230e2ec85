use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Estimators known to the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dise,
    Pe,
    Kde,
    Nnre,
    Ee,
    /// Monte Carlo ground truth from the true densities.
    Mc,
    /// One-dimensional quadrature ground truth.
    Quad,
    /// Closed form for equal-covariance Gaussians.
    Closed,
}

impl Method {
    pub const ESTIMATORS: [Method; 5] = [Method::Dise, Method::Pe, Method::Kde, Method::Nnre, Method::Ee];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dise => "dise",
            Method::Pe => "pe",
            Method::Kde => "kde",
            Method::Nnre => "nnre",
            Method::Ee => "ee",
            Method::Mc => "mc",
            Method::Quad => "quad",
            Method::Closed => "closed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "dise" => Method::Dise,
            "pe" => Method::Pe,
            "kde" => Method::Kde,
            "nnre" => Method::Nnre,
            "ee" => Method::Ee,
            "mc" => Method::Mc,
            "quad" => Method::Quad,
            "closed" => Method::Closed,
            other => return Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        })
    }
}

/// A total variation estimate with its diagnostics.
///
/// `tv` is always clamped to `[0, 1]`; the unclamped value is kept under
/// the `tv_raw` diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub method: Method,
    pub tv: f64,
    /// Held-out misclassification rate, for classifier-based estimates.
    pub risk: Option<f64>,
    pub n_eval: usize,
    pub diagnostics: BTreeMap<String, f64>,
}

impl TvEstimate {
    pub fn new(method: Method, raw_tv: f64, n_eval: usize) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("tv_raw".to_owned(), raw_tv);
        Self {
            method,
            tv: clamp_unit(raw_tv),
            risk: None,
            n_eval,
            diagnostics,
        }
    }

    /// `tv = clamp(1 - 2 risk, 0, 1)`.
    pub fn from_risk(method: Method, risk: f64, n_eval: usize) -> Self {
        let mut e = Self::new(method, 1.0 - 2.0 * risk, n_eval);
        e.risk = Some(risk);
        e
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_owned(), value);
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }

    /// Standard error of `tv`, when the method reports one.
    pub fn std_error(&self) -> Option<f64> {
        self.diagnostic("std_error")
    }

    pub fn raw_tv(&self) -> f64 {
        self.diagnostic("tv_raw").unwrap_or(self.tv)
    }
}

pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn risk_conversion_clamps() {
        let e = TvEstimate::from_risk(Method::Dise, 0.52, 100);
        assert_eq!(e.tv, 0.0);
        assert!((e.raw_tv() + 0.04).abs() < 1e-15);
        let e = TvEstimate::from_risk(Method::Dise, 0.1, 100);
        assert!((e.tv - 0.8).abs() < 1e-15);
        assert_eq!(e.risk, Some(0.1));
    }

    #[test]
    fn method_names() {
        for m in Method::ESTIMATORS {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("svm".parse::<Method>().is_err());
        assert_eq!(serde_json::to_string(&Method::Nnre).unwrap(), "\"nnre\"");
    }
}
