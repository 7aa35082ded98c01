//! Correlation inference attacks against tabular binary classifiers.
//!
//! The crate quantifies how much a trained classifier leaks about the Pearson
//! correlations between the input variables of its training data:
//!
//! * [`corrmat`]: correlation matrices, Cholesky/spherical machinery and the
//!   constrained samplers for the three attacker scenarios.
//! * [`copula`]: one-way marginals, Gaussian-copula synthesis and constraint
//!   shifting for non-normal marginals.
//! * [`models`]: logistic regression and the fixed 20/10 MLP, trained from scratch.
//! * [`attacks`]: the model-less attack, the shadow-model attack and black-box
//!   constraint extraction.
//! * [`aia`]: correlation-based attribute inference and its baselines.
//! * [`harness`]: experiment protocols, dataset loaders and reports.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aia;
pub mod attacks;
pub mod copula;
pub mod corrmat;
pub mod error;
pub mod harness;
pub mod models;
pub mod rng;
#[cfg(test)]
mod testutil;

pub use attacks::{BinSpec, FeatureMode, Interval};
pub use copula::{Dataset, Marginal, ThresholdRule};
pub use corrmat::{CholeskyFactor, CorrMatrix, Scenario};
pub use error::{Error, Result};
pub use models::{Model, ModelKind, TrainConfig};
pub use rng::{SeedTree, Stream};
