//! Grid helpers shared by the board puzzles.

use rand::seq::SliceRandom;

use super::text;
use crate::problem::{FormatError, ProblemRng};

pub type Grid = Vec<Vec<u32>>;

pub fn from_rows(rows: Vec<Vec<i64>>) -> Grid {
    rows.into_iter().map(|r| r.into_iter().map(|v| v as u32).collect()).collect()
}

/// Exactly `rows` lines of `cols` integers in `lo..=hi`, nothing after.
pub fn parse_exact(text_in: &str, rows: usize, cols: usize, lo: i64, hi: i64) -> Result<Grid, FormatError> {
    let lines = text::content_lines(text_in)?;
    if lines.len() != rows {
        return Err(FormatError::new(format!("expected {rows} lines, found {}", lines.len())));
    }
    let parsed = text::grid(&lines, rows, cols)?;
    text::check_range(&parsed, lo, hi, 1)?;
    Ok(from_rows(parsed))
}

/// Square board whose values lie in `lo..=hi`, then the remaining lines.
pub fn parse_square<'a>(
    lines: &'a [text::Numbered<'a>],
    lo: i64,
    hi_for: impl Fn(usize) -> i64,
) -> Result<(Grid, &'a [text::Numbered<'a>]), FormatError> {
    let (rows, rest) = text::square_grid(lines)?;
    text::check_range(&rows, lo, hi_for(rows.len()), lines[0].0)?;
    Ok((from_rows(rows), rest))
}

pub fn no_trailing(rest: &[(usize, &str)]) -> Result<(), FormatError> {
    match rest.first() {
        Some((n, _)) => Err(FormatError::at(*n, "unexpected extra line")),
        None => Ok(()),
    }
}

/// First value appearing twice, ignoring zeros.
pub fn duplicate(values: impl IntoIterator<Item = u32>) -> Option<u32> {
    let mut seen = std::collections::BTreeSet::new();
    values.into_iter().filter(|v| *v != 0).find(|v| !seen.insert(*v))
}

/// Nonzero cells of `givens` must be unchanged in `solved`.
pub fn keeps_givens(givens: &Grid, solved: &Grid) -> Result<(), String> {
    for (r, row) in givens.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if *v != 0 && solved[r][c] != *v {
                return Err(format!("cell ({}, {}) must keep given value {v}", r + 1, c + 1));
            }
        }
    }
    Ok(())
}

/// Rows and columns each hold distinct values.
pub fn rows_cols_distinct(grid: &Grid) -> Result<(), String> {
    for (r, row) in grid.iter().enumerate() {
        if let Some(v) = duplicate(row.iter().copied()) {
            return Err(format!("row {} duplicates value {v}", r + 1));
        }
    }
    for c in 0..grid.first().map_or(0, Vec::len) {
        if let Some(v) = duplicate(grid.iter().map(|row| row[c])) {
            return Err(format!("column {} duplicates value {v}", c + 1));
        }
    }
    Ok(())
}

/// Zero out `blanks` randomly chosen cells.
pub fn blank_out(grid: &Grid, blanks: usize, rng: &mut ProblemRng) -> Grid {
    let cols = grid.first().map_or(0, Vec::len);
    let mut cells: Vec<usize> = (0..grid.len() * cols).collect();
    cells.shuffle(rng);
    let mut out = grid.clone();
    for idx in cells.into_iter().take(blanks) {
        out[idx / cols][idx % cols] = 0;
    }
    out
}

/// Random Latin square over `1..=n`: cyclic square with rows, columns and
/// symbols permuted.
pub fn random_latin(n: usize, rng: &mut ProblemRng) -> Grid {
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut symbols: Vec<u32> = (1..=n as u32).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    symbols.shuffle(rng);
    rows.iter().map(|r| cols.iter().map(|c| symbols[(r + c) % n]).collect()).collect()
}

pub fn flatten(grid: &Grid) -> Vec<u32> {
    grid.iter().flatten().copied().collect()
}

pub fn unflatten(values: &[u32], cols: usize) -> Grid {
    values.chunks(cols).map(<[u32]>::to_vec).collect()
}
