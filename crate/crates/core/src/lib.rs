//! Robust boosting with non-convex margin losses.
//!
//! The crate is organised bottom-up:
//!
//! * [`losses`] — margin losses, the γ-robust family and a numerical checker of
//!   the conditions a loss must satisfy to drive the booster,
//! * [`tree`] — weighted Gini trees returning regions with class probabilities,
//! * [`booster`] — the training loop, line search and model persistence,
//! * [`probability`] — class-probability estimates from a trained model,
//! * [`datagen`] — synthetic benchmarks, contamination and CSV ingestion,
//! * [`diagnostics`] — breakdown, influence and outlier instrumentation,
//! * [`experiments`] — seeded multi-replication studies and result tables.

pub mod booster;
pub mod data;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod numeric;
pub mod probability;
pub mod tree;

pub use booster::{
    empirical_margin, empirical_risk, line_search, train, train_with_validation, BoostConfig,
    Ensemble, StepMode, Stopping, TrainTrace,
};
pub use data::Dataset;
pub use error::{Error, Result};
pub use losses::{GammaRobustParams, Loss};
pub use tree::{fit_tree, HypothesisSolver, Region, RegionTree, TreeConfig};
pub use probability::{product_formula, ProbabilityEstimator, ProbabilityMode};
