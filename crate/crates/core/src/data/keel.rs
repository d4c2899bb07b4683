//! KEEL `.dat` reader.
//!
//! Header keywords are case-insensitive and `%` lines are comments. When the
//! `@inputs`/`@outputs` declarations are absent the last attribute is the
//! output, as in most files distributed by the KEEL repository.

use std::io::BufRead;

use super::{Class, Dataset};
use crate::{Error, Result};

#[derive(Debug)]
enum AttributeType {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug)]
struct Attribute {
    name: String,
    kind: AttributeType,
    line: usize,
}

pub fn parse_keel<R: BufRead>(source: R) -> Result<Dataset> {
    let mut relation = String::from("unnamed");
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut inputs: Option<(usize, Vec<String>)> = None;
    let mut outputs: Option<(usize, Vec<String>)> = None;
    let mut data_line = None;
    let mut raw_rows: Vec<(usize, String)> = Vec::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if data_line.is_some() {
            if trimmed.starts_with('@') {
                return Err(Error::parse(line_no, "header keyword after @data"));
            }
            raw_rows.push((line_no, trimmed.to_string()));
            continue;
        }
        if !trimmed.starts_with('@') {
            return Err(Error::parse(
                line_no,
                "expected a header keyword before @data",
            ));
        }
        let (keyword, rest) = split_keyword(trimmed);
        match keyword.to_ascii_lowercase().as_str() {
            "@relation" => relation = unquote(rest).to_string(),
            "@attribute" => attributes.push(parse_attribute(rest, line_no)?),
            "@inputs" | "@input" => inputs = Some((line_no, split_names(rest))),
            "@outputs" | "@output" => outputs = Some((line_no, split_names(rest))),
            "@data" => data_line = Some(line_no),
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("unknown header keyword {other}"),
                ))
            }
        }
    }

    let Some(data_line) = data_line else {
        return Err(Error::parse(0, "missing @data section"));
    };
    if attributes.len() < 2 {
        return Err(Error::parse(
            data_line,
            "header must declare at least one input and one output attribute",
        ));
    }

    let lookup = |name: &str, line: usize| -> Result<usize> {
        attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::parse(line, format!("undeclared attribute {name}")))
    };

    let output = match &outputs {
        Some((line, names)) => {
            if names.len() != 1 {
                return Err(Error::parse(
                    *line,
                    "exactly one output attribute is supported",
                ));
            }
            lookup(&names[0], *line)?
        }
        None => attributes.len() - 1,
    };
    let input_indices: Vec<usize> = match &inputs {
        Some((line, names)) => names
            .iter()
            .map(|n| lookup(n, *line))
            .collect::<Result<_>>()?,
        None => (0..attributes.len()).filter(|&i| i != output).collect(),
    };
    if input_indices.contains(&output) {
        return Err(Error::parse(
            outputs.as_ref().map_or(data_line, |o| o.0),
            "output attribute also listed as input",
        ));
    }
    for &i in &input_indices {
        if let AttributeType::Nominal(_) = attributes[i].kind {
            return Err(Error::parse(
                attributes[i].line,
                format!(
                    "nominal input attribute {} is not supported",
                    attributes[i].name
                ),
            ));
        }
    }
    let class_values = match &attributes[output].kind {
        AttributeType::Nominal(values) if values.len() == 2 => values.clone(),
        AttributeType::Nominal(values) => {
            return Err(Error::parse(
                attributes[output].line,
                format!(
                    "output attribute must declare exactly two classes, found {}",
                    values.len()
                ),
            ))
        }
        AttributeType::Numeric => {
            return Err(Error::parse(
                attributes[output].line,
                "output attribute must be nominal",
            ))
        }
    };

    if raw_rows.is_empty() {
        return Err(Error::parse(data_line, "empty data section"));
    }

    let mut rows = Vec::with_capacity(raw_rows.len());
    let mut tokens = Vec::with_capacity(raw_rows.len());
    for (line_no, text) in &raw_rows {
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != attributes.len() {
            return Err(Error::parse(
                *line_no,
                format!(
                    "expected {} values, found {}",
                    attributes.len(),
                    fields.len()
                ),
            ));
        }
        let mut row = Vec::with_capacity(input_indices.len());
        for &i in &input_indices {
            let field = fields[i];
            if field == "?" || field.eq_ignore_ascii_case("<null>") {
                return Err(Error::parse(
                    *line_no,
                    format!("missing value for attribute {}", attributes[i].name),
                ));
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::parse(
                    *line_no,
                    format!(
                        "non-numeric value {field:?} for attribute {}",
                        attributes[i].name
                    ),
                )
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    *line_no,
                    format!("non-finite value {field:?}"),
                ));
            }
            row.push(value);
        }
        let token = fields[output];
        let class_idx = class_values
            .iter()
            .position(|v| v == token)
            .ok_or_else(|| Error::parse(*line_no, format!("unknown class token {token:?}")))?;
        rows.push(row);
        tokens.push(class_idx);
    }

    let counts = [
        tokens.iter().filter(|&&t| t == 0).count(),
        tokens.iter().filter(|&&t| t == 1).count(),
    ];
    let positive_idx = if counts[0] != counts[1] {
        if counts[0] < counts[1] {
            0
        } else {
            1
        }
    } else {
        // Balanced: prefer a value literally called "positive".
        class_values
            .iter()
            .position(|v| v.eq_ignore_ascii_case("positive"))
            .unwrap_or(0)
    };
    let labels = tokens
        .iter()
        .map(|&t| {
            if t == positive_idx {
                Class::Positive
            } else {
                Class::Negative
            }
        })
        .collect();
    let feature_names = input_indices
        .iter()
        .map(|&i| attributes[i].name.clone())
        .collect();
    Dataset::from_rows(
        relation,
        feature_names,
        rows,
        labels,
        class_values[positive_idx].clone(),
        class_values[1 - positive_idx].clone(),
    )
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(|c: char| c.is_whitespace() || c == '{') {
        Some(pos) => (&line[..pos], line[pos..].trim()),
        None => (line, ""),
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for q in ['\'', '"'] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

fn split_names(rest: &str) -> Vec<String> {
    rest.split(',')
        .map(|s| unquote(s).to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute> {
    let rest = rest.trim();
    let (name, spec) = if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let end = rest[1..]
            .find(q)
            .ok_or_else(|| Error::parse(line, "unterminated quoted attribute name"))?;
        (&rest[1..=end], rest[end + 2..].trim())
    } else {
        match rest.find(|c: char| c.is_whitespace() || c == '{') {
            Some(pos) => (&rest[..pos], rest[pos..].trim()),
            None => return Err(Error::parse(line, "attribute declaration without a type")),
        }
    };
    if name.is_empty() {
        return Err(Error::parse(line, "attribute declaration without a name"));
    }
    let kind = if let Some(body) = spec.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(line, "unterminated nominal value set"))?;
        let values = split_names(body);
        if values.is_empty() {
            return Err(Error::parse(line, "empty nominal value set"));
        }
        AttributeType::Nominal(values)
    } else {
        let type_name = spec.split_whitespace().next().unwrap_or("");
        match type_name.to_ascii_lowercase().as_str() {
            "real" | "integer" | "numeric" => AttributeType::Numeric,
            "" => return Err(Error::parse(line, "attribute declaration without a type")),
            other => {
                return Err(Error::parse(
                    line,
                    format!("unsupported attribute type {other}"),
                ))
            }
        }
    };
    Ok(Attribute {
        name: name.to_string(),
        kind,
        line,
    })
}
