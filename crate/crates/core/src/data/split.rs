//! Stratified holdout and k-fold partitioning.
//!
//! Per-class holdout quotas use largest-remainder rounding of
//! `⌈fraction·n⌉ · n_class / n`, with remainder ties broken by a seeded
//! shuffle. If that leaves a class with no holdout instance while the class
//! has at least two members, one slot is moved to it from the other class.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Class, Dataset};
use crate::{seed, Error, Result};

/// Validation fraction, fold count and repeat count of the benchmark protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitPlan {
    pub validation_fraction: f64,
    pub folds: usize,
    pub repeats: usize,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            validation_fraction: 0.05,
            folds: 5,
            repeats: 10,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!(
                "folds must be >= 2, got {}",
                self.folds
            )));
        }
        if self.repeats < 1 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        Ok(())
    }
}

/// One cross-validation fold.
#[derive(Clone, Debug)]
pub struct Fold {
    pub train: Dataset,
    pub test: Dataset,
}

fn class_counts(d: &Dataset) -> [usize; 2] {
    [d.count(Class::Negative), d.count(Class::Positive)]
}

pub(crate) fn holdout_quotas(
    counts: [usize; 2],
    fraction: f64,
    rng: &mut impl rand::Rng,
) -> Result<[usize; 2]> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = counts[0] + counts[1];
    let target = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;

    let mut quotas = [0usize; 2];
    let mut remainders = [0usize; 2];
    for c in 0..2 {
        quotas[c] = target * counts[c] / n;
        remainders[c] = target * counts[c] % n;
    }
    let mut order = [0usize, 1];
    order.shuffle(rng);
    order.sort_by(|a, b| remainders[*b].cmp(&remainders[*a]));
    let leftover = target - quotas[0] - quotas[1];
    for &c in order.iter().take(leftover) {
        quotas[c] += 1;
    }

    for c in 0..2 {
        let other = 1 - c;
        if quotas[c] == 0 && counts[c] >= 2 && quotas[other] >= 2 {
            quotas[c] += 1;
            quotas[other] -= 1;
        }
    }
    for c in 0..2 {
        if quotas[c] == 0 || quotas[c] >= counts[c] {
            let class = if c == 1 { "positive" } else { "negative" };
            return Err(Error::Split(format!(
                "fraction {fraction} leaves the {class} class empty on one side \
                 ({} of {} instances held out)",
                quotas[c], counts[c]
            )));
        }
    }
    Ok(quotas)
}

/// Carves a stratified holdout of `⌈fraction·n⌉` instances.
///
/// Returns `(remainder, holdout)`; both keep input row order.
pub fn stratified_holdout(d: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let mut rng = seed::rng(seed);
    let quotas = holdout_quotas(class_counts(d), fraction, &mut rng)?;
    let mut held = Vec::new();
    let mut kept = Vec::new();
    for class in [Class::Negative, Class::Positive] {
        let mut idx = d.indices_of(class);
        idx.shuffle(&mut rng);
        let q = quotas[class.index()];
        held.extend_from_slice(&idx[..q]);
        kept.extend_from_slice(&idx[q..]);
    }
    held.sort_unstable();
    kept.sort_unstable();
    Ok((d.subset(&kept), d.subset(&held)))
}

/// Fold assignment for every row of `d`.
pub(crate) fn fold_assignment(d: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Split(format!("k must be >= 2, got {k}")));
    }
    let counts = class_counts(d);
    if counts[0] + counts[1] < k {
        return Err(Error::Split(format!(
            "{k}-fold splitting needs at least {k} instances, have {}",
            counts[0] + counts[1]
        )));
    }
    if counts.contains(&0) {
        return Err(Error::SingleClass);
    }
    let mut rng = seed::rng(seed);
    let mut assignment = vec![0; d.n_instances()];
    // Dealing both classes round-robin with one running counter keeps fold
    // sizes and per-class counts within one instance of each other.
    let mut slot = 0usize;
    for class in [Class::Negative, Class::Positive] {
        let mut idx = d.indices_of(class);
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = slot % k;
            slot += 1;
        }
    }
    Ok(assignment)
}

/// Stratified k-fold cross-validation splits.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let assignment = fold_assignment(d, k, seed)?;
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..d.n_instances()).partition(|&i| assignment[i] == f);
            Fold {
                train: d.subset(&train),
                test: d.subset(&test),
            }
        })
        .collect())
}
