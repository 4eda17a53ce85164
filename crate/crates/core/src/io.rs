//! CSV ingestion and emission of tables and interaction vectors.
//!
//! Two input layouts are accepted:
//!
//! * a header naming the variables plus one value column (`count`, `prob`,
//!   `p` or `weight`), then one row per cell with 0/1 levels, in any order;
//!   missing cells are 0;
//! * a bare list of `2^K` numbers in lexicographic cell order (last variable
//!   fastest), comma- or newline-separated.
//!
//! Lines starting with `#` are ignored.

use std::io::Read;

use crate::error::{Error, Result};
use crate::loglin::InteractionVector;
use crate::table::{check_k, default_labels, CountTable, JointDistribution, VarSet};

const VALUE_COLUMNS: [&str; 5] = ["count", "prob", "p", "weight", "probability"];

/// A table as read: cell values in lexicographic order, not yet interpreted
/// as counts or probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTable {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl ParsedTable {
    pub fn k(&self) -> usize {
        self.labels.len()
    }

    /// Values as counts; each must be a non-negative integer.
    pub fn to_counts(&self) -> Result<CountTable> {
        let mut counts = Vec::with_capacity(self.values.len());
        for (i, &v) in self.values.iter().enumerate() {
            if v.fract() != 0.0 || v < 0.0 || v > u64::MAX as f64 {
                return Err(Error::InvalidWeight { cell: crate::table::cell_label(i, self.k()), value: v });
            }
            counts.push(v as u64);
        }
        CountTable::new(self.k(), counts)
    }

    /// Values normalized to a positive distribution.
    pub fn to_distribution(&self) -> Result<JointDistribution> {
        JointDistribution::from_weights(self.k(), &self.values)
    }
}

fn parse_error(line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { line: line as usize, msg: msg.into() }
}

fn parse_number(field: &str, line: u64) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_error(line, format!("expected a number, found {field:?}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(parse_error(line, format!("value must be finite and non-negative, found {field}")));
    }
    Ok(v)
}

pub fn read_table<R: Read>(reader: R) -> Result<ParsedTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, fields));
    }
    let Some((first_line, first)) = rows.first() else {
        return Err(parse_error(1, "empty table"));
    };
    if first.iter().all(|f| f.parse::<f64>().is_ok()) {
        parse_flat(&rows)
    } else {
        parse_long(*first_line, first, &rows[1..])
    }
}

pub fn parse_table(text: &str) -> Result<ParsedTable> {
    read_table(text.as_bytes())
}

fn parse_flat(rows: &[(u64, Vec<String>)]) -> Result<ParsedTable> {
    let mut values = Vec::new();
    for (line, fields) in rows {
        for f in fields {
            if f.is_empty() {
                return Err(parse_error(*line, "empty field"));
            }
            values.push(parse_number(f, *line)?);
        }
    }
    let n = values.len();
    if n < 2 || !n.is_power_of_two() {
        let line = rows.last().map_or(1, |r| r.0);
        return Err(parse_error(line, format!("expected 2^K values for some K >= 1, found {n}")));
    }
    let k = n.trailing_zeros() as usize;
    check_k(k)?;
    Ok(ParsedTable { labels: default_labels(k), values })
}

fn parse_long(header_line: u64, header: &[String], rows: &[(u64, Vec<String>)]) -> Result<ParsedTable> {
    let value_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| VALUE_COLUMNS.contains(&h.to_ascii_lowercase().as_str()))
        .map(|(i, _)| i)
        .collect();
    let vcol = match value_cols[..] {
        [c] => c,
        [] => return Err(parse_error(header_line, "header needs a count column (count, prob, p or weight)")),
        _ => return Err(parse_error(header_line, "header has more than one value column")),
    };
    let labels: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != vcol).map(|(_, h)| h.clone()).collect();
    let k = labels.len();
    if k == 0 {
        return Err(parse_error(header_line, "header names no variables"));
    }
    check_k(k)?;
    for (i, l) in labels.iter().enumerate() {
        if l.is_empty() {
            return Err(parse_error(header_line, "empty variable name"));
        }
        if labels[..i].contains(l) {
            return Err(parse_error(header_line, format!("duplicate variable {l:?}")));
        }
    }
    let mut values = vec![0.0; 1 << k];
    let mut seen = vec![false; 1 << k];
    for (line, fields) in rows {
        if fields.len() != header.len() {
            return Err(parse_error(*line, format!("expected {} fields, found {}", header.len(), fields.len())));
        }
        let mut cell = 0usize;
        for (i, f) in fields.iter().enumerate() {
            if i == vcol {
                continue;
            }
            let bit = match f.as_str() {
                "0" => 0,
                "1" => 1,
                _ => return Err(parse_error(*line, format!("level must be 0 or 1, found {f:?}"))),
            };
            cell = (cell << 1) | bit;
        }
        if seen[cell] {
            return Err(parse_error(*line, "duplicate cell"));
        }
        seen[cell] = true;
        values[cell] = parse_number(&fields[vcol], *line)?;
    }
    Ok(ParsedTable { labels, values })
}

/// Table in the header-plus-rows layout.
pub fn table_csv(labels: &[String], values: &[f64], value_name: &str) -> String {
    let k = labels.len();
    let mut out = labels.join(",");
    out.push(',');
    out.push_str(value_name);
    out.push('\n');
    for (i, v) in values.iter().enumerate() {
        for j in 0..k {
            out.push_str(if (i >> (k - 1 - j)) & 1 == 1 { "1," } else { "0," });
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// `subset,gamma` rows in canonical subset order; the empty set is an empty label.
pub fn gamma_csv(gamma: &InteractionVector, labels: &[String]) -> String {
    let mut out = String::from("subset,gamma\n");
    for (s, g) in gamma.iter() {
        let label = if s == VarSet::EMPTY { String::new() } else { s.label(labels) };
        out.push_str(&format!("{label},{g}\n"));
    }
    out
}
