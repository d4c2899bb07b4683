//! Boosting for imbalanced binary classification.
//!
//! The centerpiece is [`meboost::train_meboost`], an AdaBoost driver that
//! alternates an entropy decision tree with an extremely randomized tree on
//! successive rounds and keeps the intermediate ensemble with the best
//! held-out auROC. Plain single-learner AdaBoost, RUSBoost and SMOTEBoost are
//! provided in [`baselines`] for comparison, and [`experiment`] runs the
//! repeated holdout + stratified cross-validation benchmark protocol.

pub mod baselines;
pub mod boost;
pub mod data;
mod error;
pub mod experiment;
pub mod meboost;
pub mod metrics;
mod seed;
pub mod tree;

pub use error::{Error, Result};

pub use baselines::{SamplerConfig, SamplingMethod};
pub use boost::{BoostState, EnsembleModel, WeakLearnerRecord};
pub use data::{Class, Dataset, ImbalanceSummary};
pub use meboost::{MeBoostConfig, MeBoostResult};
pub use metrics::{auroc, roc_curve, RocCurve};
pub use tree::{LearnerKind, TrainConfig, TreeModel};
