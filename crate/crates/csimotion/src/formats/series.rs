//! Time-series CSV exports: one `t_s,<column>` header then one row per
//! sample.

use std::fmt::Write as _;

use csimotion_core::{MovementMask, PccSeries};

use super::{content_lines, parse_f64, LineError};

fn write_column(name: &str, rows: impl Iterator<Item = (f64, String)>) -> String {
    let mut out = format!("t_s,{name}\n");
    for (t, v) in rows {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

pub fn write_mask(mask: &MovementMask) -> String {
    write_column(
        "moving",
        mask.values
            .iter()
            .enumerate()
            .map(|(i, v)| (mask.time(i), (*v as u8).to_string())),
    )
}

pub fn write_pcc(pcc: &PccSeries) -> String {
    write_column(
        "pcc",
        pcc.values()
            .iter()
            .enumerate()
            .map(|(i, v)| (pcc.time(i), v.to_string())),
    )
}

/// Sample `j` of the running variance covers PCC samples `j..j+window` and
/// is stamped with the time of PCC sample `j`.
pub fn write_variance(pcc: &PccSeries, variance: &[f64]) -> String {
    write_column(
        "variance",
        variance
            .iter()
            .enumerate()
            .map(|(j, v)| (pcc.time(j), v.to_string())),
    )
}

pub fn write_sti(pcc: &PccSeries, n: usize) -> String {
    write_column(
        "sti",
        pcc.sti(n)
            .into_iter()
            .enumerate()
            .map(|(i, v)| (pcc.time(i), v.to_string())),
    )
}

/// Reads a mask CSV back. The rate is inferred from the first two rows and
/// defaults to 10 Hz for a single row.
pub fn parse_mask(text: &str) -> Result<MovementMask, LineError> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (n, line) in content_lines(text) {
        let Some((t, v)) = line.split_once(',') else {
            return Err(LineError::new(n, "expected `t_s,moving`"));
        };
        if times.is_empty() && values.is_empty() && t.trim() == "t_s" {
            continue;
        }
        times.push(parse_f64(t.trim(), n, "time")?);
        values.push(match v.trim() {
            "0" => false,
            "1" => true,
            other => return Err(LineError::new(n, format!("value `{other}` is not 0 or 1"))),
        });
    }
    let t0 = *times
        .first()
        .ok_or_else(|| LineError::new(1, "mask has no rows"))?;
    let rate = match times.get(1) {
        Some(t1) if *t1 > t0 => 1.0 / (t1 - t0),
        Some(_) => return Err(LineError::new(2, "times must increase")),
        None => 10.0,
    };
    // snap to the nearest integer rate: times come from `t0 + i / rate`
    let rate = if (rate - rate.round()).abs() < 1e-6 {
        rate.round()
    } else {
        rate
    };
    Ok(MovementMask::new(values, t0, rate))
}
