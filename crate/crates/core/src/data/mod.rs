//! Binary-labelled datasets: representation, ingestion and splitting.

mod keel;
mod split;
mod tabular;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use keel::parse_keel;
pub use split::{stratified_holdout, stratified_kfold, Fold, SplitPlan};
pub use tabular::{parse_csv, LabelColumn};

/// Class tag. The positive class is always the minority concept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Negative,
    Positive,
}

impl Class {
    /// The ±1 vote encoding used by the boosting machinery.
    pub fn sign(self) -> f64 {
        match self {
            Class::Positive => 1.0,
            Class::Negative => -1.0,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Class::Negative => 0,
            Class::Positive => 1,
        }
    }
}

/// Dense feature matrix with binary labels.
///
/// Rows are stored contiguously. Every row carries an instance id so that
/// partitions produced by the split operations can be checked by identity
/// rather than by value.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    n_features: usize,
    features: Vec<f64>,
    labels: Vec<Class>,
    ids: Vec<usize>,
    feature_names: Vec<String>,
    positive_class_name: String,
    negative_class_name: String,
}

impl Dataset {
    /// Builds a dataset from row vectors. Ids are assigned as row indices.
    pub fn from_rows(
        name: impl Into<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<Class>,
        positive_class_name: impl Into<String>,
        negative_class_name: impl Into<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        if rows.len() != labels.len() {
            return Err(Error::InvalidData(format!(
                "{} feature rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} values, expected {n_features}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "row {i} has non-finite value {v}"
                )));
            }
            features.extend_from_slice(row);
        }
        let ids = (0..labels.len()).collect();
        Ok(Dataset {
            name: name.into(),
            n_features,
            features,
            labels,
            ids,
            feature_names,
            positive_class_name: positive_class_name.into(),
            negative_class_name: negative_class_name.into(),
        })
    }

    /// Convenience constructor with generated feature and class names.
    pub fn from_unnamed(rows: Vec<Vec<f64>>, labels: Vec<Class>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let names = (0..n_features).map(|j| format!("x{j}")).collect();
        Dataset::from_rows("unnamed", names, rows, labels, "positive", "negative")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_instances()).map(move |i| self.row(i))
    }

    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.features[i * self.n_features + feature]
    }

    pub fn label(&self, i: usize) -> Class {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    /// Instance identities; preserved by subsetting.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn positive_class_name(&self) -> &str {
        &self.positive_class_name
    }

    pub fn negative_class_name(&self) -> &str {
        &self.negative_class_name
    }

    pub fn count(&self, class: Class) -> usize {
        self.labels.iter().filter(|&&c| c == class).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.count(Class::Positive) > 0 && self.count(Class::Negative) > 0
    }

    /// Indices of every instance of `class`, in row order.
    pub fn indices_of(&self, class: Class) -> Vec<usize> {
        (0..self.n_instances())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    /// A new dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            name: self.name.clone(),
            n_features: self.n_features,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            feature_names: self.feature_names.clone(),
            positive_class_name: self.positive_class_name.clone(),
            negative_class_name: self.negative_class_name.clone(),
        }
    }

    /// Appends rows with fresh ids above every existing id.
    pub(crate) fn extend_rows(&mut self, rows: &[Vec<f64>], label: Class) {
        let first_id = self.ids.iter().max().map_or(0, |m| m + 1);
        for (id, row) in (first_id..).zip(rows) {
            debug_assert_eq!(row.len(), self.n_features);
            self.features.extend_from_slice(row);
            self.labels.push(label);
            self.ids.push(id);
        }
    }

    /// Writes the dataset as CSV with a header row; the label column is `class`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = ::csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        header.push("class".to_string());
        out.write_record(&header).map_err(csv_io)?;
        for i in 0..self.n_instances() {
            let mut record: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            record.push(match self.labels[i] {
                Class::Positive => self.positive_class_name.clone(),
                Class::Negative => self.negative_class_name.clone(),
            });
            out.write_record(&record).map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_io(e: ::csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Class-count statistics of a binary dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSummary {
    pub n_instances: usize,
    pub n_features: usize,
    pub n_majority: usize,
    pub n_minority: usize,
    /// `n_majority / n_minority`.
    pub imbalance_ratio: f64,
}

pub fn summarize(d: &Dataset) -> Result<ImbalanceSummary> {
    let pos = d.count(Class::Positive);
    let neg = d.count(Class::Negative);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let (n_majority, n_minority) = (pos.max(neg), pos.min(neg));
    Ok(ImbalanceSummary {
        n_instances: d.n_instances(),
        n_features: d.n_features(),
        n_majority,
        n_minority,
        imbalance_ratio: n_majority as f64 / n_minority as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(pos: usize, neg: usize) -> Dataset {
        let n = pos + neg;
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n)
            .map(|i| {
                if i < pos {
                    Class::Positive
                } else {
                    Class::Negative
                }
            })
            .collect();
        Dataset::from_unnamed(rows, labels).unwrap()
    }

    #[test]
    fn summarize_balanced() {
        let s = summarize(&toy(5, 5)).unwrap();
        assert_eq!(s.imbalance_ratio, 1.0);
        assert_eq!(s.n_instances, 10);
        assert_eq!(s.n_majority + s.n_minority, s.n_instances);
    }

    #[test]
    fn summarize_rejects_single_class() {
        assert!(matches!(summarize(&toy(0, 4)), Err(Error::SingleClass)));
    }

    #[test]
    fn rejects_non_finite_and_ragged() {
        let r = Dataset::from_unnamed(vec![vec![1.0], vec![f64::NAN]], vec![Class::Positive; 2]);
        assert!(r.is_err());
        let r = Dataset::from_unnamed(vec![vec![1.0], vec![1.0, 2.0]], vec![Class::Positive; 2]);
        assert!(r.is_err());
    }

    #[test]
    fn subset_keeps_ids() {
        let d = toy(2, 3);
        let s = d.subset(&[4, 1]);
        assert_eq!(s.ids(), &[4, 1]);
        assert_eq!(s.row(0), d.row(4));
        assert_eq!(s.label(1), Class::Positive);
    }
}
