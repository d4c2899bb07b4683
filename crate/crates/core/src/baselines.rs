//! Comparison boosters: single-learner AdaBoost, RUSBoost and SMOTEBoost.
//!
//! All three reuse the [`meboost`](crate::meboost) driver with a fixed
//! learner kind. With a sampler, each round fits its learner on a freshly
//! resampled copy of the weighted training set, while the gate, `α` and the
//! weight update are computed on the full training set.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Class, Dataset};
use crate::meboost::{self, AurocScorer, MeBoostConfig, MeBoostResult, Schedule};
use crate::tree::LearnerKind;
use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    #[default]
    None,
    RandomUndersample,
    Smote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub method: SamplingMethod,
    /// Majority:minority ratio to reach.
    pub target_ratio: f64,
    pub smote_k: usize,
    /// Min-max scale features before SMOTE neighbour search.
    pub scale_features: bool,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            method: SamplingMethod::None,
            target_ratio: 1.0,
            smote_k: 5,
            scale_features: false,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn none() -> Self {
        SamplerConfig::default()
    }

    pub fn with_method(method: SamplingMethod) -> Self {
        SamplerConfig {
            method,
            ..SamplerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_ratio >= 1.0 && self.target_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "target_ratio must be finite and >= 1, got {}",
                self.target_ratio
            )));
        }
        if self.smote_k < 1 {
            return Err(Error::Config("smote_k must be >= 1".into()));
        }
        Ok(())
    }
}

fn majority_minority(d: &Dataset) -> (Class, Class) {
    if d.count(Class::Positive) > d.count(Class::Negative) {
        (Class::Positive, Class::Negative)
    } else {
        (Class::Negative, Class::Positive)
    }
}

/// Drops uniformly chosen majority instances until the class ratio equals
/// `target_ratio`; surviving weights are renormalized. Inputs already at or
/// below the target come back unchanged.
pub fn random_undersample(
    d: &Dataset,
    weights: &[f64],
    cfg: &SamplerConfig,
) -> Result<(Dataset, Vec<f64>)> {
    cfg.validate()?;
    if weights.len() != d.n_instances() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} instances",
            weights.len(),
            d.n_instances()
        )));
    }
    let (majority, minority) = majority_minority(d);
    let n_min = d.count(minority);
    let majority_idx = d.indices_of(majority);
    let keep_majority = (cfg.target_ratio * n_min as f64).round() as usize;
    if n_min == 0 || majority_idx.len() <= keep_majority {
        return Ok((d.clone(), weights.to_vec()));
    }
    let mut rng = seed::rng(cfg.seed);
    let mut keep: Vec<usize> = index::sample(&mut rng, majority_idx.len(), keep_majority)
        .into_iter()
        .map(|j| majority_idx[j])
        .chain(d.indices_of(minority))
        .collect();
    keep.sort_unstable();
    let total: f64 = keep.iter().map(|&i| weights[i]).sum();
    let kept_weights = if total > 0.0 {
        keep.iter().map(|&i| weights[i] / total).collect()
    } else {
        vec![1.0 / keep.len() as f64; keep.len()]
    };
    Ok((d.subset(&keep), kept_weights))
}

/// Synthetic minority rows until majority/minority reaches `target_ratio`.
///
/// Each row interpolates a random positive instance toward one of its
/// `smote_k` nearest positive neighbours (Euclidean distance, ties by row
/// order) at a uniform position on the segment.
pub fn smote_rows(d: &Dataset, cfg: &SamplerConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let minority = d.indices_of(Class::Positive);
    let n_maj = d.count(Class::Negative);
    if minority.len() <= cfg.smote_k {
        return Err(Error::InvalidArgument(format!(
            "SMOTE needs more than k = {} minority instances, found {}",
            cfg.smote_k,
            minority.len()
        )));
    }
    let desired = (n_maj as f64 / cfg.target_ratio).ceil() as usize;
    let needed = desired.saturating_sub(minority.len());
    if needed == 0 {
        return Ok(Vec::new());
    }

    let scale: Vec<f64> = if cfg.scale_features {
        (0..d.n_features())
            .map(|j| {
                let (lo, hi) = (0..d.n_instances())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                        (lo.min(d.value(i, j)), hi.max(d.value(i, j)))
                    });
                if hi > lo {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        vec![1.0; d.n_features()]
    };
    let distance = |a: usize, b: usize| -> f64 {
        d.row(a)
            .iter()
            .zip(d.row(b))
            .zip(&scale)
            .map(|((x, z), s)| ((x - z) * s).powi(2))
            .sum()
    };
    let neighbours: Vec<Vec<usize>> = minority
        .iter()
        .map(|&a| {
            let mut others: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| (distance(a, b), b))
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.truncate(cfg.smote_k);
            others.into_iter().map(|(_, b)| b).collect()
        })
        .collect();

    let mut rng = seed::rng(cfg.seed);
    let mut rows = Vec::with_capacity(needed);
    for _ in 0..needed {
        let a = rng.gen_range(0..minority.len());
        let b = neighbours[a][rng.gen_range(0..cfg.smote_k)];
        let u: f64 = rng.gen();
        let x = d.row(minority[a]);
        let z = d.row(b);
        rows.push(x.iter().zip(z).map(|(xi, zi)| xi + u * (zi - xi)).collect());
    }
    Ok(rows)
}

/// The input plus SMOTE synthetic positives appended at the end.
pub fn smote(d: &Dataset, cfg: &SamplerConfig) -> Result<Dataset> {
    let rows = smote_rows(d, cfg)?;
    let mut out = d.clone();
    out.extend_rows(&rows, Class::Positive);
    Ok(out)
}

/// One round's resampled training set and weights.
///
/// SMOTE rows are given the mean weight of the existing positives before the
/// whole vector is renormalized.
pub(crate) fn resample(
    d: &Dataset,
    weights: &[f64],
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<(Dataset, Vec<f64>)> {
    let cfg = SamplerConfig {
        seed,
        ..cfg.clone()
    };
    match cfg.method {
        SamplingMethod::None => Ok((d.clone(), weights.to_vec())),
        SamplingMethod::RandomUndersample => random_undersample(d, weights, &cfg),
        SamplingMethod::Smote => {
            let rows = smote_rows(d, &cfg)?;
            let pos: Vec<f64> = d
                .indices_of(Class::Positive)
                .iter()
                .map(|&i| weights[i])
                .collect();
            let mean = pos.iter().sum::<f64>() / pos.len() as f64;
            let mut out = d.clone();
            out.extend_rows(&rows, Class::Positive);
            let mut w = weights.to_vec();
            w.extend(std::iter::repeat_n(mean, rows.len()));
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            Ok((out, w))
        }
    }
}

/// AdaBoost with one learner kind and optional per-round sampling, stopped
/// on holdout auROC exactly like MEBoost.
pub fn train_adaboost_single(
    train: &Dataset,
    holdout: &Dataset,
    kind: LearnerKind,
    sampler: &SamplerConfig,
    cfg: &MeBoostConfig,
) -> Result<MeBoostResult> {
    sampler.validate()?;
    let mut scorer = AurocScorer::new(holdout)?;
    meboost::run_boosting(
        train,
        &mut scorer,
        cfg,
        Schedule::Single(kind),
        sampler.clone(),
    )
}
