//! Total variation estimation between two distributions from samples.
//!
//! The main estimator ([`dise`]) fits a classifier whose hypothesis class
//! contains the Bayes rule of the pair and converts its held-out risk into
//! a TV estimate. Four baseline estimators ([`baselines`]) and several
//! ground-truth routes ([`oracle`]) sit alongside it, and [`experiments`]
//! runs seeded simulation studies and fidelity rankings over them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod baselines;
pub mod data;
pub mod dise;
pub mod distributions;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod features;
pub mod linalg;
pub mod mc;
pub mod optim;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use data::Dataset;
pub use dise::{DiseConfig, FittedClassifier, Lambda};
pub use distributions::{Distribution, GaussianParams, MixturePair, UnivariateFamily};
pub use error::{Error, Result};
pub use estimate::{Method, TvEstimate};
pub use features::FeatureMapSpec;
pub use linalg::{CholeskyFactor, DenseMatrix};
