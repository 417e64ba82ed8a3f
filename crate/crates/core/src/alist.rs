//! Reader and writer for the alist sparse-matrix format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based row indices of each column, zero-padded>
//! <m lines: 1-based column indices of each row, zero-padded>
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::tanner::{Cell, TannerGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlistError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing line {line} ({expected})")]
    Truncated { line: usize, expected: String },
    #[error("column lists and row lists disagree at row {row}, column {col} (1-based)")]
    Inconsistent { row: usize, col: usize },
}

fn malformed(line: usize, message: impl Into<String>) -> AlistError {
    AlistError::Malformed { line, message: message.into() }
}

/// Serialises `g` in canonical alist form (single spaces, `\n` endings).
pub fn write_alist(g: &TannerGraph) -> String {
    let mut out = String::new();
    let max_col = g.max_var_degree();
    let max_row = g.max_check_degree();
    writeln!(out, "{} {}", g.n(), g.m()).unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    push_line(&mut out, (0..g.n()).map(|j| g.var_degree(j)));
    push_line(&mut out, (0..g.m()).map(|i| g.check_degree(i)));
    for j in 0..g.n() {
        let list = g.var_neighbors(j).iter().map(|&i| i + 1);
        push_line(&mut out, list.chain(std::iter::repeat(0)).take(max_col));
    }
    for i in 0..g.m() {
        let list = g.check_neighbors(i).iter().map(|&j| j + 1);
        push_line(&mut out, list.chain(std::iter::repeat(0)).take(max_row));
    }
    out
}

fn push_line(out: &mut String, values: impl Iterator<Item = usize>) {
    for (k, v) in values.enumerate() {
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

/// Parses an alist document. Zero padding is optional on input.
pub fn read_alist(text: &str) -> Result<TannerGraph, AlistError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut cursor = 0usize;
    let mut next = |expected: &str| -> Result<(usize, Vec<usize>), AlistError> {
        let line_no = cursor + 1;
        let line = lines
            .get(cursor)
            .ok_or_else(|| AlistError::Truncated { line: line_no, expected: expected.to_string() })?;
        cursor += 1;
        let values = line
            .split_whitespace()
            .enumerate()
            .map(|(k, tok)| {
                tok.parse::<usize>()
                    .map_err(|_| malformed(line_no, format!("field {} of {expected}: '{tok}' is not a count", k + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((line_no, values))
    };

    let (line, header) = next("dimensions")?;
    let [n, m] = header[..] else {
        return Err(malformed(line, format!("expected 'n m', found {} fields", header.len())));
    };
    let (line, maxima) = next("maximum degrees")?;
    let [max_col, max_row] = maxima[..] else {
        return Err(malformed(line, format!("expected two maximum degrees, found {} fields", maxima.len())));
    };
    let (line, col_deg) = next("column degrees")?;
    check_degrees(line, &col_deg, n, max_col, "column")?;
    let (line, row_deg) = next("row degrees")?;
    check_degrees(line, &row_deg, m, max_row, "row")?;

    let mut from_cols = BTreeSet::new();
    for (j, &deg) in col_deg.iter().enumerate() {
        let (line, list) = next(&format!("neighbours of column {}", j + 1))?;
        for i in parse_list(line, &list, deg, max_col, m)? {
            from_cols.insert(Cell::new(i - 1, j));
        }
    }
    let mut from_rows = BTreeSet::new();
    for (i, &deg) in row_deg.iter().enumerate() {
        let (line, list) = next(&format!("neighbours of row {}", i + 1))?;
        for j in parse_list(line, &list, deg, max_row, n)? {
            from_rows.insert(Cell::new(i, j - 1));
        }
    }
    if let Some(bad) = from_cols.symmetric_difference(&from_rows).next() {
        return Err(AlistError::Inconsistent { row: bad.row + 1, col: bad.col + 1 });
    }
    for (k, rest) in lines[cursor..].iter().enumerate() {
        if !rest.trim().is_empty() {
            return Err(malformed(cursor + k + 1, "unexpected trailing content"));
        }
    }
    let ones: Vec<Cell> = from_cols.into_iter().collect();
    TannerGraph::new(m, n, &ones).map_err(|e| malformed(1, e.to_string()))
}

fn check_degrees(line: usize, degrees: &[usize], count: usize, max: usize, side: &str) -> Result<(), AlistError> {
    if degrees.len() != count {
        return Err(malformed(line, format!("expected {count} {side} degrees, found {}", degrees.len())));
    }
    let actual_max = degrees.iter().copied().max().unwrap_or(0);
    if actual_max != max {
        return Err(malformed(line, format!("largest {side} degree is {actual_max} but header says {max}")));
    }
    Ok(())
}

fn parse_list(line: usize, list: &[usize], degree: usize, max: usize, bound: usize) -> Result<Vec<usize>, AlistError> {
    if list.len() < degree || list.len() > max.max(degree) {
        return Err(malformed(line, format!("expected {degree} indices (padded to at most {max}), found {}", list.len())));
    }
    let (head, pad) = list.split_at(degree);
    if let Some(k) = pad.iter().position(|&v| v != 0) {
        return Err(malformed(line, format!("field {}: padding must be 0", degree + k + 1)));
    }
    let mut seen = BTreeSet::new();
    for (k, &v) in head.iter().enumerate() {
        if v == 0 || v > bound {
            return Err(malformed(line, format!("field {}: index {v} outside 1..={bound}", k + 1)));
        }
        if !seen.insert(v) {
            return Err(malformed(line, format!("field {}: repeated index {v}", k + 1)));
        }
    }
    Ok(head.to_vec())
}
