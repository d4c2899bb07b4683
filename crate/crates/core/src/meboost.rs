//! The alternating-learner boosting driver with auROC-based early stopping.
//!
//! Each round trains one weak tree on the current instance weights. Odd rounds
//! use `first_kind`, even rounds the other kind. An accepted learner updates
//! the weights and joins the ensemble, after which the ensemble is scored on a
//! holdout set. The driver remembers the best-scoring prefix of the ensemble
//! (on a tie, the longer prefix) and stops once `window` consecutive rounds
//! fail to beat the best score by more than `improvement_epsilon` (or
//! `max_rounds` is reached). The best prefix, never the last ensemble, is
//! returned.
//!
//! A learner with weighted error ≥ 0.5 is rejected and the round retried up to
//! `max_retries` times: extra trees get a fresh seed, a rejected decision tree
//! is replaced by an extra tree. A round whose retries are exhausted adds
//! nothing and counts as non-improving.

use std::borrow::Cow;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, SamplerConfig, SamplingMethod};
use crate::boost::{self, BoostState, EnsembleModel, GateDecision, WeakLearnerRecord};
use crate::data::Dataset;
use crate::metrics;
use crate::tree::{self, LearnerKind, TrainConfig};
use crate::{seed, Error, Result};

/// Tree hyperparameters; unset fields resolve against the data each learner
/// is fitted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Defaults to `1 / n` for `n` fitted instances.
    pub min_leaf_weight: Option<f64>,
    /// Defaults to `⌈√features⌉`.
    pub extra_tree_feature_count: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: TrainConfig::DEFAULT_MAX_DEPTH,
            min_leaf_weight: None,
            extra_tree_feature_count: None,
        }
    }
}

impl TreeParams {
    pub fn resolve(&self, d: &Dataset, seed: u64) -> TrainConfig {
        let defaults = TrainConfig::for_dataset(d);
        TrainConfig {
            max_depth: self.max_depth,
            min_leaf_weight: self.min_leaf_weight.unwrap_or(defaults.min_leaf_weight),
            extra_tree_feature_count: self
                .extra_tree_feature_count
                .map_or(defaults.extra_tree_feature_count, |k| {
                    k.min(d.n_features().max(1))
                }),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeBoostConfig {
    /// Consecutive non-improving rounds tolerated before stopping.
    pub window: usize,
    pub max_rounds: usize,
    /// A score must exceed the best by more than this to count as progress.
    pub improvement_epsilon: f64,
    pub first_kind: LearnerKind,
    /// Extra attempts after a rejected learner within one round.
    pub max_retries: usize,
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for MeBoostConfig {
    fn default() -> Self {
        MeBoostConfig {
            window: 10,
            max_rounds: 200,
            improvement_epsilon: 0.0,
            first_kind: LearnerKind::DecisionTree,
            max_retries: 5,
            tree: TreeParams::default(),
            seed: 0,
        }
    }
}

impl MeBoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if self.max_rounds < self.window {
            return Err(Error::Config(format!(
                "max_rounds ({}) must be at least window ({})",
                self.max_rounds, self.window
            )));
        }
        if !(self.improvement_epsilon >= 0.0 && self.improvement_epsilon.is_finite()) {
            return Err(Error::Config(
                "improvement_epsilon must be finite and >= 0".into(),
            ));
        }
        if self.tree.max_depth < 1 {
            return Err(Error::Config("tree.max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which learner kind each round uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    Alternate { first: LearnerKind },
    Single(LearnerKind),
}

impl Schedule {
    /// Rounds are numbered from 1.
    pub fn kind_for_round(self, round: usize) -> LearnerKind {
        match self {
            Schedule::Single(kind) => kind,
            Schedule::Alternate { first } if round % 2 == 1 => first,
            Schedule::Alternate { first } => first.other(),
        }
    }
}

pub fn select_kind(round: usize, cfg: &MeBoostConfig) -> LearnerKind {
    Schedule::Alternate {
        first: cfg.first_kind,
    }
    .kind_for_round(round)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub round: usize,
    /// Kind scheduled for the round.
    pub kind: LearnerKind,
    /// Kind of the accepted learner; `None` for a skipped round.
    pub trained_kind: Option<LearnerKind>,
    pub holdout_auroc: Option<f64>,
    pub ensemble_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeBoostResult {
    pub best_model: EnsembleModel,
    pub best_score: f64,
    /// Round at which the best ensemble was formed.
    pub best_round: usize,
    pub rounds_trained: usize,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl MeBoostResult {
    /// `round,kind,holdout_auroc`; skipped rounds leave the score empty.
    pub fn write_trajectory_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,kind,holdout_auroc")?;
        for p in &self.trajectory {
            match p.holdout_auroc {
                Some(s) => writeln!(out, "{},{},{}", p.round, p.kind, s)?,
                None => writeln!(out, "{},{},", p.round, p.kind)?,
            }
        }
        Ok(())
    }
}

/// Scores an intermediate ensemble; implemented for closures so tests can
/// drive the stopping logic with a fixed trajectory.
pub trait HoldoutScorer {
    fn score(&mut self, ensemble: &EnsembleModel) -> Result<f64>;
}

impl<F> HoldoutScorer for F
where
    F: FnMut(&EnsembleModel) -> Result<f64>,
{
    fn score(&mut self, ensemble: &EnsembleModel) -> Result<f64> {
        self(ensemble)
    }
}

/// auROC of the ensemble margin on a holdout set. Margins are accumulated
/// incrementally, so the ensemble passed in must only ever grow.
pub struct AurocScorer<'a> {
    holdout: &'a Dataset,
    margins: Vec<f64>,
    seen: usize,
}

impl<'a> AurocScorer<'a> {
    pub fn new(holdout: &'a Dataset) -> Result<Self> {
        if !holdout.has_both_classes() {
            return Err(Error::InvalidArgument(
                "holdout set must contain both classes".into(),
            ));
        }
        Ok(AurocScorer {
            holdout,
            margins: vec![0.0; holdout.n_instances()],
            seen: 0,
        })
    }
}

impl HoldoutScorer for AurocScorer<'_> {
    fn score(&mut self, ensemble: &EnsembleModel) -> Result<f64> {
        if ensemble.len() < self.seen {
            return Err(Error::InvalidArgument(
                "ensemble shrank between scoring calls".into(),
            ));
        }
        if let Some(n) = ensemble.n_features() {
            if n != self.holdout.n_features() {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: self.holdout.n_features(),
                });
            }
        }
        for record in &ensemble.records[self.seen..] {
            for (m, x) in self.margins.iter_mut().zip(self.holdout.rows()) {
                *m += record.contribution(x);
            }
        }
        self.seen = ensemble.len();
        metrics::auroc(&self.margins, self.holdout.labels())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RoundOutcome {
    Accepted { score: f64, improved: bool },
    Skipped,
}

struct Best {
    score: f64,
    len: usize,
    round: usize,
}

/// Step-wise boosting run shared by every booster in this crate.
pub struct BoostDriver<'a> {
    train: &'a Dataset,
    cfg: &'a MeBoostConfig,
    schedule: Schedule,
    sampler: SamplerConfig,
    state: BoostState,
    ensemble: EnsembleModel,
    best: Option<Best>,
    non_improving: usize,
    trajectory: Vec<TrajectoryPoint>,
    round: usize,
}

impl<'a> BoostDriver<'a> {
    pub fn new(
        train: &'a Dataset,
        cfg: &'a MeBoostConfig,
        schedule: Schedule,
        sampler: SamplerConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !train.has_both_classes() {
            return Err(Error::SingleClass);
        }
        Ok(BoostDriver {
            train,
            cfg,
            schedule,
            sampler,
            state: boost::init_weights(train.n_instances())?,
            ensemble: EnsembleModel::default(),
            best: None,
            non_improving: 0,
            trajectory: Vec::new(),
            round: 0,
        })
    }

    pub fn state(&self) -> &BoostState {
        &self.state
    }

    pub fn ensemble(&self) -> &EnsembleModel {
        &self.ensemble
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn trajectory(&self) -> &[TrajectoryPoint] {
        &self.trajectory
    }

    pub fn is_finished(&self) -> bool {
        self.non_improving >= self.cfg.window || self.round >= self.cfg.max_rounds
    }

    /// Runs one boosting round.
    pub fn step(&mut self, scorer: &mut dyn HoldoutScorer) -> Result<RoundOutcome> {
        if self.is_finished() {
            return Err(Error::InvalidArgument(
                "boosting run already finished".into(),
            ));
        }
        self.round += 1;
        let scheduled = self.schedule.kind_for_round(self.round);
        let accepted = self.fit_round(scheduled)?;
        let outcome = match accepted {
            Some(record) => {
                let kind = record.kind;
                self.ensemble.push(record);
                self.ensemble.n_rounds = self.round;
                let score = scorer.score(&self.ensemble)?;
                let improved = self
                    .best
                    .as_ref()
                    .is_none_or(|b| score > b.score + self.cfg.improvement_epsilon);
                // Matching the best score moves the best model forward but
                // does not reset the window.
                if self.best.as_ref().is_none_or(|b| score >= b.score) {
                    self.best = Some(Best {
                        score,
                        len: self.ensemble.len(),
                        round: self.round,
                    });
                }
                if improved {
                    self.non_improving = 0;
                } else {
                    self.non_improving += 1;
                }
                self.trajectory.push(TrajectoryPoint {
                    round: self.round,
                    kind: scheduled,
                    trained_kind: Some(kind),
                    holdout_auroc: Some(score),
                    ensemble_len: self.ensemble.len(),
                });
                RoundOutcome::Accepted { score, improved }
            }
            None => {
                self.non_improving += 1;
                self.trajectory.push(TrajectoryPoint {
                    round: self.round,
                    kind: scheduled,
                    trained_kind: None,
                    holdout_auroc: None,
                    ensemble_len: self.ensemble.len(),
                });
                RoundOutcome::Skipped
            }
        };
        Ok(outcome)
    }

    fn fit_round(&mut self, scheduled: LearnerKind) -> Result<Option<WeakLearnerRecord>> {
        let sampling = self.sampler.method != SamplingMethod::None;
        let mut kind = scheduled;
        for attempt in 0..=self.cfg.max_retries {
            let attempt_seed = seed::derive(self.cfg.seed, &[self.round as u64, attempt as u64]);
            let (fit_data, fit_weights): (Cow<Dataset>, Cow<[f64]>) = if sampling {
                let (d, w) = baselines::resample(
                    self.train,
                    self.state.weights(),
                    &self.sampler,
                    seed::derive(attempt_seed, &[self.sampler.seed]),
                )?;
                (Cow::Owned(d), Cow::Owned(w))
            } else {
                (
                    Cow::Borrowed(self.train),
                    Cow::Borrowed(self.state.weights()),
                )
            };
            let tree_cfg = self.cfg.tree.resolve(&fit_data, attempt_seed);
            let model = tree::train_tree(kind, &fit_data, &fit_weights, &tree_cfg)?;
            // Error and weight update always use the full training set.
            let predictions = model.predict_dataset(self.train)?;
            let error = self.state.error_of(&predictions, self.train.labels())?;
            match boost::gate(error) {
                GateDecision::Accept { error } => {
                    let record = WeakLearnerRecord::new(model, error)?;
                    self.state
                        .update(&predictions, self.train.labels(), record.alpha)?;
                    return Ok(Some(record));
                }
                GateDecision::Reject => {
                    let deterministic = kind == LearnerKind::DecisionTree && !sampling;
                    match self.schedule {
                        Schedule::Alternate { .. } if deterministic => kind = kind.other(),
                        Schedule::Single(_) if deterministic => return Ok(None),
                        _ => {}
                    }
                }
            }
        }
        Ok(None)
    }

    pub fn finish(self) -> Result<MeBoostResult> {
        let best = self.best.ok_or(Error::NoWeakLearner)?;
        Ok(MeBoostResult {
            best_model: self.ensemble.prefix(best.len, best.round),
            best_score: best.score,
            best_round: best.round,
            rounds_trained: self.round,
            trajectory: self.trajectory,
        })
    }
}

/// Drives a full run to completion.
pub fn run_boosting(
    train: &Dataset,
    scorer: &mut dyn HoldoutScorer,
    cfg: &MeBoostConfig,
    schedule: Schedule,
    sampler: SamplerConfig,
) -> Result<MeBoostResult> {
    let mut driver = BoostDriver::new(train, cfg, schedule, sampler)?;
    while !driver.is_finished() {
        driver.step(scorer)?;
    }
    driver.finish()
}

pub fn train_meboost_with_scorer(
    train: &Dataset,
    scorer: &mut dyn HoldoutScorer,
    cfg: &MeBoostConfig,
) -> Result<MeBoostResult> {
    run_boosting(
        train,
        scorer,
        cfg,
        Schedule::Alternate {
            first: cfg.first_kind,
        },
        SamplerConfig::none(),
    )
}

/// Alternating decision/extra-tree boosting, stopped on holdout auROC.
pub fn train_meboost(
    train: &Dataset,
    holdout: &Dataset,
    cfg: &MeBoostConfig,
) -> Result<MeBoostResult> {
    let mut scorer = AurocScorer::new(holdout)?;
    train_meboost_with_scorer(train, &mut scorer, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Class;

    fn separable(n: usize, offset: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| vec![i as f64, ((i * 7 + offset) % 11) as f64])
            .collect();
        let labels = (0..n)
            .map(|i| {
                if i % 5 == 0 || (i * 3 + offset).is_multiple_of(17) {
                    Class::Positive
                } else {
                    Class::Negative
                }
            })
            .collect();
        Dataset::from_unnamed(rows, labels).unwrap()
    }

    fn fixed(scores: Vec<f64>) -> impl FnMut(&EnsembleModel) -> Result<f64> {
        let mut i = 0;
        move |_| {
            let s = scores[i.min(scores.len() - 1)];
            i += 1;
            Ok(s)
        }
    }

    #[test]
    fn kind_schedule() {
        let cfg = MeBoostConfig::default();
        assert_eq!(select_kind(1, &cfg), LearnerKind::DecisionTree);
        assert_eq!(select_kind(2, &cfg), LearnerKind::ExtraTree);
        assert_eq!(select_kind(7, &cfg), LearnerKind::DecisionTree);
        let et_first = MeBoostConfig {
            first_kind: LearnerKind::ExtraTree,
            ..cfg
        };
        assert_eq!(select_kind(1, &et_first), LearnerKind::ExtraTree);
        assert_eq!(
            Schedule::Single(LearnerKind::ExtraTree).kind_for_round(4),
            LearnerKind::ExtraTree
        );
    }

    #[test]
    fn stops_two_rounds_after_peak() {
        let d = separable(60, 1);
        let cfg = MeBoostConfig {
            window: 2,
            ..MeBoostConfig::default()
        };
        let mut scorer = fixed(vec![0.7, 0.9, 0.85, 0.85, 0.85, 0.85]);
        let r = train_meboost_with_scorer(&d, &mut scorer, &cfg).unwrap();
        assert_eq!(r.best_model.len(), 2);
        assert_eq!(r.rounds_trained, 4);
        assert_eq!(r.best_score, 0.9);
        assert_eq!(r.best_round, 2);
    }

    #[test]
    fn window_one_without_improvement() {
        let d = separable(60, 2);
        let cfg = MeBoostConfig {
            window: 1,
            ..MeBoostConfig::default()
        };
        let r = train_meboost_with_scorer(&d, &mut fixed(vec![0.8, 0.6]), &cfg).unwrap();
        assert_eq!(r.best_model.len(), 1);
        assert_eq!(r.rounds_trained, 2);
    }

    #[test]
    fn tie_keeps_longer_prefix_without_resetting_window() {
        let d = separable(60, 2);
        let cfg = MeBoostConfig {
            window: 3,
            ..MeBoostConfig::default()
        };
        let scores = vec![0.6, 0.8, 0.7, 0.8, 0.8, 0.75, 0.9];
        let r = train_meboost_with_scorer(&d, &mut fixed(scores), &cfg).unwrap();
        assert_eq!(r.rounds_trained, 5);
        assert_eq!(r.best_model.len(), 5);
        assert_eq!(r.best_round, 5);
        assert_eq!(r.best_score, 0.8);
    }

    #[test]
    fn epsilon_slack_counts_small_gains_as_stagnation() {
        let d = separable(60, 2);
        let cfg = MeBoostConfig {
            window: 2,
            improvement_epsilon: 0.05,
            ..MeBoostConfig::default()
        };
        let scores = vec![0.7, 0.72, 0.74, 0.9];
        let r = train_meboost_with_scorer(&d, &mut fixed(scores), &cfg).unwrap();
        assert_eq!(r.rounds_trained, 3);
        assert_eq!(r.best_model.len(), 3);
        assert_eq!(r.best_score, 0.74);
    }

    #[test]
    fn increasing_scorer_runs_to_cap() {
        let d = separable(60, 3);
        let cfg = MeBoostConfig {
            window: 3,
            max_rounds: 12,
            ..MeBoostConfig::default()
        };
        let scores = (0..12).map(|i| 0.5 + i as f64 * 0.01).collect();
        let r = train_meboost_with_scorer(&d, &mut fixed(scores), &cfg).unwrap();
        assert_eq!(r.rounds_trained, 12);
        assert_eq!(
            r.best_model.len(),
            r.trajectory
                .iter()
                .filter(|p| p.trained_kind.is_some())
                .count()
        );
    }

    #[test]
    fn real_holdout_run_alternates_and_is_deterministic() {
        let train = separable(80, 4);
        let holdout = separable(40, 9);
        let cfg = MeBoostConfig {
            window: 4,
            max_rounds: 30,
            seed: 3,
            ..MeBoostConfig::default()
        };
        let a = train_meboost(&train, &holdout, &cfg).unwrap();
        let b = train_meboost(&train, &holdout, &cfg).unwrap();
        assert_eq!(a, b);
        for (i, p) in a.trajectory.iter().enumerate() {
            let expected = if i % 2 == 0 {
                LearnerKind::DecisionTree
            } else {
                LearnerKind::ExtraTree
            };
            assert_eq!(p.kind, expected);
        }
        let max = a
            .trajectory
            .iter()
            .filter_map(|p| p.holdout_auroc)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.best_score, max);
        assert!(a.rounds_trained - a.best_round <= cfg.window);
        let rescored = metrics::auroc(
            &a.best_model.score_dataset(&holdout).unwrap(),
            holdout.labels(),
        )
        .unwrap();
        assert_eq!(rescored, a.best_score);
    }

    #[test]
    fn trajectory_csv() {
        let d = separable(60, 1);
        let cfg = MeBoostConfig {
            window: 1,
            ..MeBoostConfig::default()
        };
        let r = train_meboost_with_scorer(&d, &mut fixed(vec![0.75, 0.5]), &cfg).unwrap();
        let mut buf = Vec::new();
        r.write_trajectory_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "round,kind,holdout_auroc\n1,decision_tree,0.75\n2,extra_tree,0.5\n"
        );
    }

    #[test]
    fn config_and_input_validation() {
        let d = separable(30, 0);
        let bad = MeBoostConfig {
            window: 20,
            max_rounds: 10,
            ..MeBoostConfig::default()
        };
        assert!(train_meboost(&d, &d, &bad).is_err());
        let single = d.subset(&d.indices_of(Class::Negative));
        assert!(train_meboost(&d, &single, &MeBoostConfig::default()).is_err());
        assert!(matches!(
            train_meboost(&single, &d, &MeBoostConfig::default()),
            Err(Error::SingleClass)
        ));
    }
}
