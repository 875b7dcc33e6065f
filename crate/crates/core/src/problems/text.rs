//! Tokenizing helpers shared by the adapters' parsers and writers.

use std::fmt::Display;

use crate::problem::FormatError;

/// Lines of `text` numbered from 1, with trailing blank lines removed.
/// Blank lines before the last content line are a format error.
pub fn content_lines(text: &str) -> Result<Vec<(usize, &str)>, FormatError> {
    let mut lines: Vec<(usize, &str)> = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.trim())).collect();
    while lines.last().is_some_and(|(_, l)| l.is_empty()) {
        lines.pop();
    }
    if let Some((n, _)) = lines.iter().find(|(_, l)| l.is_empty()) {
        return Err(FormatError::at(*n, "unexpected blank line"));
    }
    Ok(lines)
}

/// Whitespace-separated integers on one line, optionally of a fixed count.
pub fn ints(line_no: usize, line: &str, expected: Option<usize>) -> Result<Vec<i64>, FormatError> {
    let values = line
        .split_whitespace()
        .map(|tok| tok.parse::<i64>().map_err(|_| FormatError::at(line_no, format!("`{tok}` is not an integer"))))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(n) = expected {
        if values.len() != n {
            return Err(FormatError::at(line_no, format!("expected {n} integers, found {}", values.len())));
        }
    }
    Ok(values)
}

/// `rows` lines of exactly `cols` integers each.
pub fn grid(lines: &[(usize, &str)], rows: usize, cols: usize) -> Result<Vec<Vec<i64>>, FormatError> {
    if lines.len() < rows {
        return Err(FormatError::new(format!("expected {rows} rows, found {}", lines.len())));
    }
    lines[..rows].iter().map(|(n, l)| ints(*n, l, Some(cols))).collect()
}

/// A text line with its 1-based number.
pub type Numbered<'a> = (usize, &'a str);

/// A square grid whose side is the token count of its first line, and
/// the remaining lines after it.
pub fn square_grid<'a>(lines: &'a [Numbered<'a>]) -> Result<(Vec<Vec<i64>>, &'a [Numbered<'a>]), FormatError> {
    let (first_no, first) = lines.first().ok_or_else(|| FormatError::new("empty text"))?;
    let n = first.split_whitespace().count();
    if n == 0 {
        return Err(FormatError::at(*first_no, "empty grid row"));
    }
    let rows = grid(lines, n, n)?;
    Ok((rows, &lines[n..]))
}

/// Serialize rows as space-separated tokens, one row per line, with a
/// single trailing newline.
pub fn write_rows<R, T>(rows: R) -> String
where
    R: IntoIterator,
    R::Item: IntoIterator<Item = T>,
    T: Display,
{
    let mut out = String::new();
    for row in rows {
        let tokens: Vec<String> = row.into_iter().map(|t| t.to_string()).collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

/// Fail if a parsed grid value falls outside `lo..=hi`.
pub fn check_range(rows: &[Vec<i64>], lo: i64, hi: i64, first_line: usize) -> Result<(), FormatError> {
    for (r, row) in rows.iter().enumerate() {
        if let Some(v) = row.iter().find(|v| **v < lo || **v > hi) {
            return Err(FormatError::at(first_line + r, format!("value {v} outside {lo}..={hi}")));
        }
    }
    Ok(())
}

/// Two-token edge list lines. Rejects self-loops, out-of-range endpoints and
/// duplicate undirected edges.
pub fn edges(lines: &[(usize, &str)], nodes: usize) -> Result<Vec<(usize, usize)>, FormatError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(lines.len());
    for (n, line) in lines {
        let v = ints(*n, line, Some(2))?;
        let (a, b) = (v[0], v[1]);
        if a < 0 || b < 0 || a as usize >= nodes || b as usize >= nodes {
            return Err(FormatError::at(*n, format!("edge endpoint outside 0..{nodes}")));
        }
        if a == b {
            return Err(FormatError::at(*n, format!("self-loop on node {a}")));
        }
        let key = (a.min(b) as usize, a.max(b) as usize);
        if !seen.insert(key) {
            return Err(FormatError::at(*n, format!("duplicate edge {} {}", key.0, key.1)));
        }
        out.push((a as usize, b as usize));
    }
    Ok(out)
}

/// The single YES/NO word of a decision problem's output.
pub fn yes_no(text: &str) -> Result<bool, FormatError> {
    let lines = content_lines(text)?;
    match lines.as_slice() {
        [(_, "YES")] => Ok(true),
        [(_, "NO")] => Ok(false),
        [(n, other)] => Err(FormatError::at(*n, format!("expected YES or NO, found `{other}`"))),
        [] => Err(FormatError::new("empty output")),
        _ => Err(FormatError::new("expected a single line")),
    }
}

pub fn write_yes_no(answer: bool) -> String {
    if answer {
        "YES\n".into()
    } else {
        "NO\n".into()
    }
}
