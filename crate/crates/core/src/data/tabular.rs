//! Comma-separated input with a header row.

use std::io::Read;

use super::{Class, Dataset};
use crate::{Error, Result};

/// Selects the label column of a CSV file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by position, anything else by header name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

pub fn parse_csv<R: Read>(
    source: R,
    label_column: &LabelColumn,
    positive_label: &str,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(1, format!("missing label column {name:?}")))?,
        LabelColumn::Index(i) => {
            return Err(Error::parse(
                1,
                format!(
                    "missing label column {i} (header has {} columns)",
                    header.len()
                ),
            ))
        }
    };

    let mut rows = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut distinct: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_error(e, line))?;
        let mut row = Vec::with_capacity(header.len() - 1);
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::parse(
                    line,
                    format!("non-numeric value {field:?} in column {}", header[j]),
                )
            })?;
            if !value.is_finite() {
                return Err(Error::parse(line, format!("non-finite value {field:?}")));
            }
            row.push(value);
        }
        let token = record[label_idx].to_string();
        if !distinct.contains(&token) {
            if distinct.len() == 2 {
                return Err(Error::parse(line, "more than two classes"));
            }
            distinct.push(token.clone());
        }
        rows.push(row);
        tokens.push(token);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "no data rows"));
    }
    if !distinct.iter().any(|t| t == positive_label) {
        return Err(Error::InvalidData(format!(
            "positive class absent: {positive_label:?} never occurs in the label column"
        )));
    }
    let negative = distinct
        .iter()
        .find(|t| *t != positive_label)
        .cloned()
        .ok_or_else(|| Error::InvalidData("negative class absent".into()))?;
    let labels = tokens
        .iter()
        .map(|t| {
            if t == positive_label {
                Class::Positive
            } else {
                Class::Negative
            }
        })
        .collect();
    let feature_names = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::from_rows("csv", feature_names, rows, labels, positive_label, negative)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::parse(
            line,
            format!("ragged row: expected {expected_len} fields, found {len}"),
        ),
        _ => Error::parse(line, e.to_string()),
    }
}
