//! Instance-weighted binary trees: an exhaustive entropy-gain decision tree
//! and an extremely randomized tree.
//!
//! Both learners split on `x[feature] <= threshold` (left) and stop at the
//! depth cap, at pure nodes, when no split leaves `min_leaf_weight` on both
//! sides, or when the best information gain is zero. Weights are normalized to
//! sum to one before training, so `min_leaf_weight` is a fraction of the total
//! weight and scaling every weight by a constant leaves the tree unchanged.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Class, Dataset};
use crate::{seed, Error, Result};

/// Gains within this distance are treated as tied.
pub const GAIN_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    DecisionTree,
    ExtraTree,
}

impl LearnerKind {
    pub fn other(self) -> Self {
        match self {
            LearnerKind::DecisionTree => LearnerKind::ExtraTree,
            LearnerKind::ExtraTree => LearnerKind::DecisionTree,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::DecisionTree => "decision_tree",
            LearnerKind::ExtraTree => "extra_tree",
        }
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        prediction: Class,
        /// Normalized weight reaching the leaf, `[negative, positive]`.
        mass: [f64; 2],
    },
}

impl TreeNode {
    fn leaf(mass: [f64; 2]) -> Self {
        // Ties go to the negative (majority) class.
        let prediction = if mass[1] > mass[0] {
            Class::Positive
        } else {
            Class::Negative
        };
        TreeNode::Leaf { prediction, mass }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_depth: usize,
    /// Minimum fraction of the total weight each child of a split must keep.
    pub min_leaf_weight: f64,
    /// Candidate features drawn per node by the extra tree.
    pub extra_tree_feature_count: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub const DEFAULT_MAX_DEPTH: usize = 8;

    /// Depth 8, one nominal instance of leaf weight, `⌈√features⌉` candidates.
    pub fn for_dataset(d: &Dataset) -> Self {
        TrainConfig {
            max_depth: Self::DEFAULT_MAX_DEPTH,
            min_leaf_weight: 1.0 / d.n_instances().max(1) as f64,
            extra_tree_feature_count: default_feature_count(d.n_features()),
            seed: 0,
        }
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
        }
        if !(self.min_leaf_weight >= 0.0 && self.min_leaf_weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "min_leaf_weight must be finite and >= 0, got {}",
                self.min_leaf_weight
            )));
        }
        if self.extra_tree_feature_count < 1 || self.extra_tree_feature_count > n_features {
            return Err(Error::InvalidArgument(format!(
                "extra_tree_feature_count must lie in [1, {n_features}], got {}",
                self.extra_tree_feature_count
            )));
        }
        Ok(())
    }
}

pub fn default_feature_count(n_features: usize) -> usize {
    ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features.max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub kind: LearnerKind,
    pub n_features: usize,
    pub max_depth: usize,
    pub min_leaf_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TreeModel {
    pub fn predict(&self, x: &[f64]) -> Result<Class> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.classify(x))
    }

    /// Prediction without the dimension check.
    pub(crate) fn classify(&self, x: &[f64]) -> Class {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Predictions for every row of `d`.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<Class>> {
        if d.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: d.n_features(),
            });
        }
        Ok(d.rows().map(|x| self.classify(x)).collect())
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    /// `(feature, threshold)` of the root, or `None` for a single leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.root {
            TreeNode::Internal {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Binary entropy in bits of a `[negative, positive]` mass pair.
pub fn weighted_entropy(class_masses: [f64; 2]) -> Result<f64> {
    if class_masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "class masses must be finite and nonnegative, got {class_masses:?}"
        )));
    }
    if class_masses[0] + class_masses[1] <= 0.0 {
        return Err(Error::InvalidArgument("both class masses are zero".into()));
    }
    Ok(entropy(class_masses))
}

fn entropy(m: [f64; 2]) -> f64 {
    let total = m[0] + m[1];
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &mass in &m {
        if mass > 0.0 {
            let p = mass / total;
            h -= p * p.log2();
        }
    }
    h.clamp(0.0, 1.0)
}

/// Information gain of splitting `parent` into `left` and `parent - left`.
fn split_gain(parent_entropy: f64, parent: [f64; 2], left: [f64; 2]) -> f64 {
    let right = [
        (parent[0] - left[0]).max(0.0),
        (parent[1] - left[1]).max(0.0),
    ];
    let total = parent[0] + parent[1];
    let lw = left[0] + left[1];
    let rw = right[0] + right[1];
    parent_entropy - (lw / total) * entropy(left) - (rw / total) * entropy(right)
}

pub fn train_decision_tree(d: &Dataset, weights: &[f64], cfg: &TrainConfig) -> Result<TreeModel> {
    train_tree(LearnerKind::DecisionTree, d, weights, cfg)
}

pub fn train_extra_tree(d: &Dataset, weights: &[f64], cfg: &TrainConfig) -> Result<TreeModel> {
    train_tree(LearnerKind::ExtraTree, d, weights, cfg)
}

pub fn train_tree(
    kind: LearnerKind,
    d: &Dataset,
    weights: &[f64],
    cfg: &TrainConfig,
) -> Result<TreeModel> {
    if d.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot train on an empty dataset".into(),
        ));
    }
    if weights.len() != d.n_instances() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} instances",
            weights.len(),
            d.n_instances()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    let cfg_features = if d.n_features() == 0 {
        1
    } else {
        d.n_features()
    };
    cfg.validate(cfg_features)?;

    let mut builder = Builder {
        d,
        weights: weights.iter().map(|w| w / total).collect(),
        cfg,
        kind,
        rng: match kind {
            LearnerKind::ExtraTree => Some(seed::rng(cfg.seed)),
            LearnerKind::DecisionTree => None,
        },
        order: Vec::with_capacity(d.n_instances()),
    };
    let idx: Vec<usize> = (0..d.n_instances()).collect();
    let root = builder.build(idx, 0);
    Ok(TreeModel {
        root,
        kind,
        n_features: d.n_features(),
        max_depth: cfg.max_depth,
        min_leaf_weight: cfg.min_leaf_weight,
        seed: (kind == LearnerKind::ExtraTree).then_some(cfg.seed),
    })
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    d: &'a Dataset,
    weights: Vec<f64>,
    cfg: &'a TrainConfig,
    kind: LearnerKind,
    rng: Option<ChaCha8Rng>,
    order: Vec<usize>,
}

impl Builder<'_> {
    fn mass(&self, idx: &[usize]) -> [f64; 2] {
        let mut m = [0.0; 2];
        for &i in idx {
            m[self.d.label(i).index()] += self.weights[i];
        }
        m
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> TreeNode {
        let mass = self.mass(&idx);
        let first = self.d.label(idx[0]);
        let pure = idx.iter().all(|&i| self.d.label(i) == first);
        let total = mass[0] + mass[1];
        if pure || depth >= self.cfg.max_depth || total < 2.0 * self.cfg.min_leaf_weight {
            return TreeNode::leaf(mass);
        }
        let best = match self.kind {
            LearnerKind::DecisionTree => self.best_exhaustive_split(&idx, mass),
            LearnerKind::ExtraTree => self.best_random_split(&idx, mass),
        };
        let Some(best) = best.filter(|c| c.gain > GAIN_TIE_TOLERANCE) else {
            return TreeNode::leaf(mass);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.d.value(i, best.feature) <= best.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());
        TreeNode::Internal {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.build(left, depth + 1)),
            right: Box::new(self.build(right, depth + 1)),
        }
    }

    fn admissible(&self, parent: [f64; 2], left: [f64; 2]) -> bool {
        let lw = left[0] + left[1];
        let rw = parent[0] + parent[1] - lw;
        lw > 0.0 && rw > 0.0 && lw >= self.cfg.min_leaf_weight && rw >= self.cfg.min_leaf_weight
    }

    /// Scans every feature and every midpoint between consecutive distinct
    /// values; ties keep the lowest feature index, then the smallest threshold.
    fn best_exhaustive_split(&mut self, idx: &[usize], parent: [f64; 2]) -> Option<Candidate> {
        let parent_entropy = entropy(parent);
        let mut best: Option<Candidate> = None;
        let mut order = std::mem::take(&mut self.order);
        for feature in 0..self.d.n_features() {
            order.clear();
            order.extend_from_slice(idx);
            order.sort_by(|&a, &b| {
                self.d
                    .value(a, feature)
                    .total_cmp(&self.d.value(b, feature))
            });
            let mut left = [0.0; 2];
            for pair in order.windows(2) {
                let (i, next) = (pair[0], pair[1]);
                left[self.d.label(i).index()] += self.weights[i];
                let v = self.d.value(i, feature);
                let vn = self.d.value(next, feature);
                if v == vn || !self.admissible(parent, left) {
                    continue;
                }
                let gain = split_gain(parent_entropy, parent, left);
                if best
                    .as_ref()
                    .is_none_or(|b| gain > b.gain + GAIN_TIE_TOLERANCE)
                {
                    let mid = v + (vn - v) / 2.0;
                    let threshold = if mid < vn { mid } else { v };
                    best = Some(Candidate {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        self.order = order;
        best
    }

    /// Draws `extra_tree_feature_count` features without replacement and one
    /// uniform threshold in `[min, max)` per non-constant feature.
    fn best_random_split(&mut self, idx: &[usize], parent: [f64; 2]) -> Option<Candidate> {
        let parent_entropy = entropy(parent);
        let n_features = self.d.n_features();
        let rng = self.rng.as_mut().expect("extra tree has a random stream");
        let drawn = index::sample(rng, n_features, self.cfg.extra_tree_feature_count);
        let mut best: Option<Candidate> = None;
        for feature in drawn.iter() {
            let (lo, hi) = idx
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = self.d.value(i, feature);
                    (lo.min(v), hi.max(v))
                });
            if lo >= hi {
                continue;
            }
            let rng = self.rng.as_mut().expect("extra tree has a random stream");
            let threshold = rng.gen_range(lo..hi);
            let mut left = [0.0; 2];
            for &i in idx {
                if self.d.value(i, feature) <= threshold {
                    left[self.d.label(i).index()] += self.weights[i];
                }
            }
            if !self.admissible(parent, left) {
                continue;
            }
            let gain = split_gain(parent_entropy, parent, left);
            if best
                .as_ref()
                .is_none_or(|b| gain > b.gain + GAIN_TIE_TOLERANCE)
            {
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
        best
    }
}
