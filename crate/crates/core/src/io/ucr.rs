use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_text, IoError};
use crate::{Dataset, Series};

#[derive(Clone, Copy)]
enum Separator {
    Tab,
    Comma,
    Whitespace,
}

impl Separator {
    fn detect(line: &str) -> Self {
        if line.contains('\t') {
            Separator::Tab
        } else if line.contains(',') {
            Separator::Comma
        } else {
            Separator::Whitespace
        }
    }

    fn split(self, line: &str) -> Vec<&str> {
        match self {
            Separator::Tab => line.split('\t').map(str::trim).collect(),
            Separator::Comma => line.split(',').map(str::trim).collect(),
            Separator::Whitespace => line.split_whitespace().collect(),
        }
    }
}

/// Parses UCR text: one series per line, the label first, then the values.
///
/// The separator (tab, else comma, else whitespace) is detected from the
/// first non-blank line. Labels stay strings. Line numbers in errors are
/// 1-based.
pub fn parse_ucr(text: &str) -> Result<Dataset, IoError> {
    let mut sep = None;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut expected = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let sep = *sep.get_or_insert_with(|| Separator::detect(line));
        let fields = sep.split(line);
        let (label, rest) = fields.split_first().expect("non-blank line has a field");
        if label.is_empty() {
            return Err(IoError::Parse { line: line_no, message: "empty label".into() });
        }
        let values = rest
            .iter()
            .enumerate()
            .map(|(j, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(IoError::Parse { line: line_no, message: format!("value {} is not finite", j + 1) }),
                Err(_) => Err(IoError::Parse { line: line_no, message: format!("value {} ({f:?}) is not a number", j + 1) }),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let expected = *expected.get_or_insert(values.len());
        if values.len() != expected {
            return Err(IoError::NonUniformLength { line: line_no, expected, found: values.len() });
        }
        rows.push((line_no, values));
        labels.push(label.to_string());
    }
    if rows.is_empty() {
        return Err(IoError::Empty);
    }
    // lengths are compared across the whole file before any single row is judged too short
    let series = rows
        .into_iter()
        .map(|(line, values)| Series::new(values).map_err(|e| IoError::Parse { line, message: e.to_string() }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(series, Some(labels))?)
}

pub fn read_ucr(path: impl AsRef<Path>) -> Result<Dataset, IoError> {
    parse_ucr(&read_text(path.as_ref())?)
}

/// Tab-separated UCR text; values use the shortest exact decimal form.
pub fn format_ucr(dataset: &Dataset) -> Result<String, IoError> {
    let labels = dataset.labels().ok_or(IoError::MissingLabels)?;
    let mut out = String::new();
    for (label, s) in labels.iter().zip(dataset.series()) {
        out.push_str(label);
        for v in s.values() {
            write!(out, "\t{v}").expect("write to string");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_ucr(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &format_ucr(dataset)?)
}
