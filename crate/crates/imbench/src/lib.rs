//! Benchmarking toolkit for imbalanced binary classification.
//!
//! The crate bundles everything needed to compare imbalance mitigation
//! strategies on small-to-medium tabular datasets:
//!
//! * [`data`]: CSV ingestion, binarization, controlled imbalancing,
//!   stratified splits, and synthetic generators
//! * [`classifiers`]: native CART, random forest, gradient boosting, and
//!   1-NN with per-example weights
//! * [`strategies`]: baseline, class weight, SMOTE, underbagging, and
//!   RUSBoost
//! * [`metrics`]: accuracy, AUC, F-measure, G-mean, MCC, balanced
//!   accuracy, and the auxiliary rates
//! * [`experiment`]: random hyperparameter search, nested-fold tuning,
//!   and repeated-holdout grids
//! * [`stats`]: Friedman ranks, pairwise post-hoc adjustment, Wilcoxon
//!   signed-rank, and compact letter displays
//! * [`report`]: plain-text rank tables
//!
//! Every randomized operation is deterministic in its explicit seed.

pub mod classifiers;
pub mod data;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod metrics;
pub mod params;
pub mod report;
pub mod seeding;
pub mod stats;
pub mod strategies;

pub use error::{Error, Result};
