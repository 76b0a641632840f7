//! CSV series input.
//!
//! Accepted layouts are `index,value` (one series) and `index,a,b` (two
//! aligned series). The header row is optional, `#` starts a comment line,
//! and indices must be consecutive ascending integers.

use crate::error::{Error, Result};
use crate::estimate::Series;

/// Parsed input: one series or two aligned ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Single(Series),
    Pair(Series, Series),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Single(s) | Table::Pair(s, _) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        message: message.into(),
    }
}

/// A header row is one whose first field is not an integer.
fn is_header(record: &csv::StringRecord) -> bool {
    record.get(0).is_some_and(|f| f.trim().parse::<i64>().is_err())
}

fn label(name: &str) -> Option<String> {
    let name = name.trim();
    (!name.is_empty() && name != "value").then(|| name.to_string())
}

pub fn parse_series(text: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut names: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    let mut prev_index: Option<i64> = None;
    let mut last_line = 1;

    for (n, row) in reader.records().enumerate() {
        let record = row.map_err(|e| {
            let line = e.position().map_or(last_line, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(last_line, |p| p.line());
        last_line = line;
        if n == 0 && is_header(&record) {
            if record.get(0) != Some("index") {
                return Err(parse_err(line, "first column must be 'index'"));
            }
            if !(2..=3).contains(&record.len()) {
                return Err(parse_err(line, "expected header 'index,value' or 'index,a,b'"));
            }
            width = record.len();
            names = Some(record.iter().skip(1).map(str::to_string).collect());
            continue;
        }
        if width == 0 {
            if !(2..=3).contains(&record.len()) {
                return Err(parse_err(
                    line,
                    format!("expected 2 or 3 columns, found {}", record.len()),
                ));
            }
            width = record.len();
        }
        if record.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        let index: i64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("index '{}' is not an integer", &record[0])))?;
        if let Some(prev) = prev_index {
            if index != prev + 1 {
                return Err(parse_err(line, format!("index {index} does not follow {prev}")));
            }
        }
        prev_index = Some(index);
        columns.resize_with(width - 1, Vec::new);
        for (col, field) in columns.iter_mut().zip(record.iter().skip(1)) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("value '{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("value '{field}' is not finite")));
            }
            col.push(v);
        }
    }

    if columns.is_empty() {
        return Err(parse_err(last_line, "no data rows"));
    }
    let wrap = |line: u64| move |e: Error| parse_err(line, e.to_string());
    let mut series = columns
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            let s = Series::new(values).map_err(wrap(last_line))?;
            Ok(match names.as_ref().and_then(|n| label(&n[i])) {
                Some(l) => s.with_label(l),
                None => s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match series.len() {
        1 => Table::Single(series.remove(0)),
        _ => {
            let b = series.remove(1);
            Table::Pair(series.remove(0), b)
        }
    })
}
