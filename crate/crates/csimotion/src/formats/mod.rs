//! On-disk formats.
//!
//! Binary Nexmon pcap and the canonical capture text live in [`pcap`] and
//! [`canonical`]. The remaining formats are small line-oriented text files
//! where `#` starts a comment and blank lines are ignored.

pub mod canonical;
pub mod manifest;
pub mod map;
pub mod pcap;
pub mod profile;
pub mod script;
pub mod series;
pub mod svg;
pub mod truth;

use thiserror::Error;

/// A malformed line in one of the text formats. Lines are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl LineError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        LineError {
            line,
            message: message.into(),
        }
    }
}

/// Non-empty lines with comments stripped, as `(line number, trimmed text)`.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

pub(crate) fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, LineError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(LineError::new(
            line,
            format!("{what} `{tok}` is not a finite number"),
        )),
    }
}

pub(crate) fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize, LineError> {
    tok.parse::<usize>().map_err(|_| {
        LineError::new(
            line,
            format!("{what} `{tok}` is not a non-negative integer"),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks_dropped() {
        let lines: Vec<_> = content_lines("a 1\n\n  # note\nb 2 # tail\n").collect();
        assert_eq!(lines, vec![(1, "a 1"), (4, "b 2")]);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_f64("2.5", 1, "x"), Ok(2.5));
        assert!(parse_f64("nan", 1, "x").is_err());
        assert!(parse_usize("-1", 3, "n")
            .unwrap_err()
            .to_string()
            .starts_with("line 3:"));
    }
}
