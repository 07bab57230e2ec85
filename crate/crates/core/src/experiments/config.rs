use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::{KnnConfig, DEFAULT_N_MC};
use crate::dise::DiseConfig;
use crate::distributions::MixturePair;
use crate::error::{Error, Result};
use crate::estimate::Method;

/// How the second mean is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mu2Mode {
    /// μ₂ ~ U[0, 1]ᵖ.
    #[default]
    Uniform01,
    /// μ₂ = t · U with U ~ U[0, 1]ᵖ.
    Scaled(f64),
}

/// Where the noise of scale `s` enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    /// Σ₂ = I + E with E built from N(0, s²) entries.
    #[default]
    Covariance,
    /// N(0, s²) added to every coordinate of every observed sample; the
    /// true TV is still that of the clean pair.
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub p: usize,
    /// Samples per distribution for fitting.
    pub n_train: usize,
    /// Samples per distribution for DisE evaluation; also the true-TV
    /// Monte Carlo size.
    pub n_test: usize,
    #[serde(default = "default_replications")]
    pub n_replications: usize,
    #[serde(default = "default_noise")]
    pub noise_scale: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub mu2_mode: Mu2Mode,
    #[serde(default)]
    pub noise_target: NoiseTarget,
    /// Scale of E when `noise_target = samples`.
    #[serde(default = "default_noise")]
    pub cov_noise_scale: f64,
    /// Mixture draws for PE and KDE.
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    /// Replaces the Gaussian setting with a fixed pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_pair: Option<MixturePair>,
    /// Off by default so output files are reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub dise: DiseConfig,
    #[serde(default)]
    pub knn: KnnConfig,
}

fn default_replications() -> usize {
    20
}

fn default_noise() -> f64 {
    0.1
}

fn default_methods() -> Vec<Method> {
    Method::ESTIMATORS.to_vec()
}

fn default_seed() -> u64 {
    42
}

fn default_n_mc() -> usize {
    DEFAULT_N_MC
}

impl SimulationConfig {
    /// The Gaussian setting with defaults for everything but the sizes.
    pub fn new(p: usize, n_train: usize, n_test: usize) -> Self {
        Self {
            p,
            n_train,
            n_test,
            n_replications: default_replications(),
            noise_scale: default_noise(),
            methods: default_methods(),
            base_seed: default_seed(),
            mu2_mode: Mu2Mode::default(),
            noise_target: NoiseTarget::default(),
            cov_noise_scale: default_noise(),
            n_mc: DEFAULT_N_MC,
            fixed_pair: None,
            record_wall_time: false,
            dise: DiseConfig::default(),
            knn: KnnConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.p == 0 {
            return bad("p must be at least 1");
        }
        if self.n_train < 2 {
            return bad("n_train must be at least 2");
        }
        if self.n_test == 0 {
            return bad("n_test must be at least 1");
        }
        if self.n_replications == 0 {
            return bad("n_replications must be at least 1");
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad("noise_scale must be finite and non-negative");
        }
        if !(self.cov_noise_scale >= 0.0 && self.cov_noise_scale.is_finite()) {
            return bad("cov_noise_scale must be finite and non-negative");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if let Some(m) = self.methods.iter().find(|m| !Method::ESTIMATORS.contains(m)) {
            return Err(Error::InvalidConfig(format!("{m} is not an estimator")));
        }
        if self.n_mc == 0 {
            return bad("n_mc must be at least 1");
        }
        if let Mu2Mode::Scaled(t) = self.mu2_mode {
            if !t.is_finite() {
                return bad("mu2 scale must be finite");
            }
        }
        if let Some(pair) = &self.fixed_pair {
            if pair.dim() != self.p {
                return Err(Error::InvalidConfig(format!(
                    "fixed_pair has dimension {} but p = {}",
                    pair.dim(),
                    self.p
                )));
            }
        }
        self.dise.validate()
    }
}

/// Reads a TOML or JSON config; `.json` files are JSON, anything else TOML.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::FileFormat {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| Error::FileFormat {
        path: path.to_owned(),
        message,
    })
}
