//! Confusion counts, ROC curves and auROC.
//!
//! [`auroc`] is computed from the Mann–Whitney statistic, counting tied
//! positive/negative pairs as one half. [`RocCurve::area`] integrates the
//! curve with the trapezoid rule; the two agree up to rounding.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Class;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(predictions: &[Class], labels: &[Class]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictions for {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        let mut c = ConfusionCounts::default();
        for (p, y) in predictions.iter().zip(labels) {
            match (p, y) {
                (Class::Positive, Class::Positive) => c.tp += 1,
                (Class::Positive, Class::Negative) => c.fp += 1,
                (Class::Negative, Class::Negative) => c.tn += 1,
                (Class::Negative, Class::Positive) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `TP / (TP + FN)`.
    pub fn tpr(&self) -> Result<f64> {
        let p = self.tp + self.fn_;
        if p == 0 {
            return Err(Error::InvalidArgument("no positive instances".into()));
        }
        Ok(self.tp as f64 / p as f64)
    }

    /// `FP / (FP + TN)`.
    pub fn fpr(&self) -> Result<f64> {
        let n = self.fp + self.tn;
        if n == 0 {
            return Err(Error::InvalidArgument("no negative instances".into()));
        }
        Ok(self.fp as f64 / n as f64)
    }
}

pub fn tpr(c: &ConfusionCounts) -> Result<f64> {
    c.tpr()
}

pub fn fpr(c: &ConfusionCounts) -> Result<f64> {
    c.fpr()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points from `(0, 0)` to `(1, 1)`, one per distinct score.
///
/// `thresholds[i]` is the cutoff that yields `points[i]` when every score
/// `>= thresholds[i]` is called positive; the first threshold is `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    #[serde(with = "thresholds_serde")]
    pub thresholds: Vec<f64>,
}

// JSON has no infinity; the leading +∞ cutoff is written as null.
mod thresholds_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let opt: Vec<Option<f64>> = v.iter().map(|t| t.is_finite().then_some(*t)).collect();
        opt.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let opt: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(opt
            .into_iter()
            .map(|t| t.unwrap_or(f64::INFINITY))
            .collect())
    }
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    /// Two-column `fpr,tpr` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "fpr,tpr")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.fpr, p.tpr)?;
        }
        Ok(())
    }
}

fn check_inputs(scores: &[f64], labels: &[Class]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&c| c == Class::Positive).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Per distinct score, descending: `(score, positives, negatives)`.
fn score_groups(scores: &[f64], labels: &[Class]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for i in order {
        let (p, n) = match labels[i] {
            Class::Positive => (1, 0),
            Class::Negative => (0, 1),
        };
        match groups.last_mut() {
            Some(g) if g.0 == scores[i] => {
                g.1 += p;
                g.2 += n;
            }
            _ => groups.push((scores[i], p, n)),
        }
    }
    groups
}

pub fn roc_curve(scores: &[f64], labels: &[Class]) -> Result<RocCurve> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let groups = score_groups(scores, labels);
    let mut points = Vec::with_capacity(groups.len() + 1);
    let mut thresholds = Vec::with_capacity(groups.len() + 1);
    points.push(RocPoint { fpr: 0.0, tpr: 0.0 });
    thresholds.push(f64::INFINITY);
    let (mut tp, mut fp) = (0usize, 0usize);
    for (score, p, n) in groups {
        tp += p;
        fp += n;
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
        thresholds.push(score);
    }
    Ok(RocCurve { points, thresholds })
}

/// Mann–Whitney auROC: `(#{s_p > s_n} + ½·#{s_p = s_n}) / (P·N)`.
pub fn auroc(scores: &[f64], labels: &[Class]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    // Twice the statistic, accumulated in integers so ties stay exact.
    let mut doubled: u128 = 0;
    let mut neg_below = neg as u128;
    for (_, p, n) in score_groups(scores, labels) {
        neg_below -= n as u128;
        doubled += p as u128 * (2 * neg_below + n as u128);
    }
    let value = doubled as f64 / (2.0 * pos as f64 * neg as f64);
    debug_assert!(
        (value - roc_curve(scores, labels).map(|c| c.area()).unwrap_or(value)).abs() < 1e-9
    );
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use Class::{Negative as N, Positive as P};

    #[test]
    fn rates() {
        let c = ConfusionCounts {
            tp: 9,
            fn_: 1,
            fp: 2,
            tn: 8,
        };
        assert!((tpr(&c).unwrap() - 0.9).abs() < 1e-15);
        assert!((fpr(&c).unwrap() - 0.2).abs() < 1e-15);
        let all_hit = ConfusionCounts {
            tp: 3,
            ..Default::default()
        };
        assert_eq!(all_hit.tpr().unwrap(), 1.0);
        assert!(all_hit.fpr().is_err());
        let no_hit = ConfusionCounts {
            fn_: 3,
            tn: 2,
            ..Default::default()
        };
        assert_eq!(no_hit.tpr().unwrap(), 0.0);
        assert_eq!(no_hit.fpr().unwrap(), 0.0);
        let all_fp = ConfusionCounts {
            fp: 4,
            tp: 1,
            ..Default::default()
        };
        assert_eq!(all_fp.fpr().unwrap(), 1.0);
    }

    #[test]
    fn confusion_from_predictions() {
        let c = ConfusionCounts::from_predictions(&[P, P, N, N, P], &[P, N, N, P, P]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 2,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn separated_scores() {
        let labels = [P, P, N, N];
        let curve = roc_curve(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap();
        assert!(curve.points.contains(&RocPoint { fpr: 0.0, tpr: 1.0 }));
        assert_eq!(auroc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 1.0);
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 0.0);
    }

    #[test]
    fn equal_scores() {
        let curve = roc_curve(&[0.3; 5], &[P, N, N, P, N]).unwrap();
        assert_eq!(
            curve.points,
            vec![
                RocPoint { fpr: 0.0, tpr: 0.0 },
                RocPoint { fpr: 1.0, tpr: 1.0 }
            ]
        );
        assert_eq!(curve.area(), 0.5);
        assert_eq!(auroc(&[0.3; 5], &[P, N, N, P, N]).unwrap(), 0.5);
    }

    #[test]
    fn four_score_example() {
        // Pairs: (.9,.8) win, (.9,.6) win, (.7,.8) loss, (.7,.6) win.
        let scores = [0.9, 0.8, 0.7, 0.6];
        let labels = [P, N, P, N];
        assert_eq!(auroc(&scores, &labels).unwrap(), 0.75);
        let curve = roc_curve(&scores, &labels).unwrap();
        assert_eq!(curve.area(), 0.75);
        assert_eq!(curve.thresholds.len(), 5);
        assert_eq!(curve.thresholds[0], f64::INFINITY);
    }

    #[test]
    fn single_class_errors() {
        assert!(matches!(
            auroc(&[0.1, 0.2], &[P, P]),
            Err(Error::SingleClass)
        ));
        assert!(roc_curve(&[0.1], &[N]).is_err());
        assert!(auroc(&[0.1], &[N, P]).is_err());
        assert!(auroc(&[f64::NAN, 0.1], &[N, P]).is_err());
    }

    #[test]
    fn csv_and_json_export() {
        let curve = roc_curve(&[0.9, 0.8, 0.7, 0.6], &[P, N, P, N]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("fpr,tpr\n0,0\n0,0.5\n"));
        let json = serde_json::to_string(&curve).unwrap();
        let back: RocCurve = serde_json::from_str(&json).unwrap();
        assert_eq!(back, curve);
    }

    fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<Class>)> {
        (2usize..200).prop_flat_map(|n| {
            (
                prop::collection::vec((-50i32..50).prop_map(|v| v as f64 / 7.0), n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(|(s, f)| {
                    let mut labels: Vec<Class> = f.iter().map(|&b| if b { P } else { N }).collect();
                    labels[0] = P;
                    labels[1] = N;
                    (s, labels)
                })
        })
    }

    proptest! {
        #[test]
        fn bounded_and_curve_monotone((scores, labels) in scored()) {
            let a = auroc(&scores, &labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            let curve = roc_curve(&scores, &labels).unwrap();
            prop_assert_eq!(curve.points[0], RocPoint { fpr: 0.0, tpr: 0.0 });
            prop_assert_eq!(*curve.points.last().unwrap(), RocPoint { fpr: 1.0, tpr: 1.0 });
            for w in curve.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
            prop_assert!((curve.area() - a).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_increasing_transform((scores, labels) in scored()) {
            let moved: Vec<f64> = scores.iter().map(|s| (s * 0.5).exp() + 3.0).collect();
            prop_assert_eq!(auroc(&scores, &labels).unwrap(), auroc(&moved, &labels).unwrap());
        }

        #[test]
        fn negation_complements_without_ties(
            labels in prop::collection::vec(any::<bool>(), 2..100),
            seed in any::<u64>(),
        ) {
            let mut labels: Vec<Class> = labels.iter().map(|&b| if b { P } else { N }).collect();
            labels[0] = P;
            labels[1] = N;
            // Distinct scores: a seeded permutation of 0..n.
            let n = labels.len();
            let scores: Vec<f64> = (0..n)
                .map(|i| ((i as u64).wrapping_mul(2_654_435_761).wrapping_add(seed) % 1_000_003) as f64 + i as f64 / n as f64)
                .collect();
            let mut distinct = scores.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            prop_assume!(distinct.len() == n);
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let sum = auroc(&scores, &labels).unwrap() + auroc(&neg, &labels).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
