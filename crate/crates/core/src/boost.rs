//! Discrete AdaBoost building blocks shared by every booster.

use serde::{Deserialize, Serialize};

use crate::data::{Class, Dataset};
use crate::tree::{LearnerKind, TreeModel};
use crate::{Error, Result};

/// A perfect weak learner has its error raised to this floor before `α` is
/// computed, giving a large but finite vote.
pub const ERROR_FLOOR: f64 = 1e-10;

/// Instance weights and round counter of a boosting run.
#[derive(Clone, Debug, PartialEq)]
pub struct BoostState {
    weights: Vec<f64>,
    round: usize,
}

impl BoostState {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weighted error of a prediction vector against `labels`.
    pub fn error_of(&self, predictions: &[Class], labels: &[Class]) -> Result<f64> {
        self.check_len(predictions.len())?;
        self.check_len(labels.len())?;
        let err: f64 = self
            .weights
            .iter()
            .zip(predictions.iter().zip(labels))
            .filter(|(_, (p, y))| p != y)
            .map(|(w, _)| w)
            .sum();
        Ok(err.clamp(0.0, 1.0))
    }

    /// `w_i ← w_i · exp(−α·y_i·h(x_i))`, renormalized to sum to one.
    pub fn update(&mut self, predictions: &[Class], labels: &[Class], alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        self.check_len(predictions.len())?;
        self.check_len(labels.len())?;
        let up = alpha.exp();
        let down = (-alpha).exp();
        for (w, (p, y)) in self.weights.iter_mut().zip(predictions.iter().zip(labels)) {
            *w *= if p == y { down } else { up };
        }
        let total: f64 = self.weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numeric(format!(
                "weight normalization failed (sum = {total})"
            )));
        }
        for w in &mut self.weights {
            *w /= total;
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::Numeric("a weight underflowed to zero".into()));
        }
        self.round += 1;
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{n} values for {} weights",
                self.weights.len()
            )));
        }
        Ok(())
    }
}

/// Uniform weights `1/n` at round 0.
pub fn init_weights(n: usize) -> Result<BoostState> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot initialize weights for zero instances".into(),
        ));
    }
    Ok(BoostState {
        weights: vec![1.0 / n as f64; n],
        round: 0,
    })
}

pub fn weighted_error(model: &TreeModel, d: &Dataset, state: &BoostState) -> Result<f64> {
    if d.n_instances() != state.len() {
        return Err(Error::InvalidArgument(format!(
            "dataset has {} instances, state has {} weights",
            d.n_instances(),
            state.len()
        )));
    }
    state.error_of(&model.predict_dataset(d)?, d.labels())
}

/// `½·ln((1 − error)/error)` for `error` in `(0, 0.5)`.
pub fn compute_alpha(error: f64) -> Result<f64> {
    if !(error > 0.0 && error < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "alpha needs an error in (0, 0.5), got {error}"
        )));
    }
    Ok(0.5 * ((1.0 - error) / error).ln())
}

pub fn update_weights(
    state: &BoostState,
    model: &TreeModel,
    alpha: f64,
    d: &Dataset,
) -> Result<BoostState> {
    let mut next = state.clone();
    next.update(&model.predict_dataset(d)?, d.labels(), alpha)?;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateDecision {
    /// Carries the error to use for `α`, floored at [`ERROR_FLOOR`].
    Accept {
        error: f64,
    },
    Reject,
}

/// Rejects any learner whose weighted error is at least one half.
pub fn gate(error: f64) -> GateDecision {
    if error.is_nan() || error >= 0.5 {
        GateDecision::Reject
    } else {
        GateDecision::Accept {
            error: error.max(ERROR_FLOOR),
        }
    }
}

/// One accepted boosting round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakLearnerRecord {
    pub kind: LearnerKind,
    pub alpha: f64,
    pub weighted_error: f64,
    pub model: TreeModel,
}

impl WeakLearnerRecord {
    pub fn new(model: TreeModel, weighted_error: f64) -> Result<Self> {
        let alpha = compute_alpha(weighted_error)?;
        Ok(WeakLearnerRecord {
            kind: model.kind,
            alpha,
            weighted_error,
            model,
        })
    }

    /// `α·(±1)` for one row, without a dimension check.
    pub(crate) fn contribution(&self, x: &[f64]) -> f64 {
        self.alpha * self.model.classify(x).sign()
    }
}

/// Ordered weak learners scored by the `α`-weighted vote margin.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub records: Vec<WeakLearnerRecord>,
    /// Boosting rounds run (accepted or skipped) when this ensemble was formed.
    pub n_rounds: usize,
}

impl EnsembleModel {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> Option<usize> {
        self.records.first().map(|r| r.model.n_features)
    }

    pub fn push(&mut self, record: WeakLearnerRecord) {
        self.records.push(record);
    }

    /// The first `len` records.
    pub fn prefix(&self, len: usize, n_rounds: usize) -> EnsembleModel {
        EnsembleModel {
            records: self.records[..len].to_vec(),
            n_rounds,
        }
    }

    /// `Σ α_t·vote_t(x)`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let n_features = self.n_features().ok_or(Error::EmptyEnsemble)?;
        if x.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                got: x.len(),
            });
        }
        Ok(self.records.iter().map(|r| r.contribution(x)).sum())
    }

    /// Sign of the margin; a zero margin is negative.
    pub fn predict(&self, x: &[f64]) -> Result<Class> {
        Ok(margin_class(self.score(x)?))
    }

    pub fn score_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        let n_features = self.n_features().ok_or(Error::EmptyEnsemble)?;
        if d.n_features() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                got: d.n_features(),
            });
        }
        Ok(d.rows()
            .map(|x| self.records.iter().map(|r| r.contribution(x)).sum())
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn margin_class(score: f64) -> Class {
    if score > 0.0 {
        Class::Positive
    } else {
        Class::Negative
    }
}

pub fn ensemble_score(e: &EnsembleModel, x: &[f64]) -> Result<f64> {
    e.score(x)
}
