//! Correlation inference attacks.
//!
//! The model-less attack guesses the majority bin of the interval of target
//! values compatible with the constraints. The model-based attack trains
//! shadow models on synthetic data satisfying the constraints and learns to
//! read the bin off the target model's outputs.

mod bins;
mod extraction;
mod features;
mod meta;
mod pipeline;

pub use bins::{
    bin_of, certain_region, closed_form_interval, model_less_predict, model_less_predict_with, BinSpec, C3Rule,
    Interval, ModelLessCase,
};
pub use extraction::{extract_constraints, Extraction};
pub use features::{extract_features, FeatureMode};
pub use meta::{fit_meta, train_meta, MetaClassifier, MetaConfig, MetaDataset, MetaFit};
pub use pipeline::{
    empirical_interval, run_model_based_attack, AttackOutcome, AttackParams, AttackReport, FeatureSource,
    ShadowEnsemble,
};
