//! Subcarrier map files, conventionally named `subcarriers-<bw>.map`.
//!
//! ```text
//! version 1
//! subcarriers 256
//! lower 0 64
//! null 0
//! pilot 11
//! ```
//!
//! `subcarriers` may be replaced by `bandwidth <MHz>`. When both are absent
//! the bandwidth is taken from the file name.

use std::fmt::Write as _;
use std::path::Path;

use csimotion_core::preprocess::TABLE_VERSION;
use csimotion_core::{Bandwidth, SubcarrierMap};

use super::{content_lines, parse_usize, LineError};

/// Bandwidth encoded in a `subcarriers-<bw>.map` file name.
pub fn bandwidth_from_name(path: &Path) -> Option<Bandwidth> {
    let stem = path.file_stem()?.to_str()?;
    let mhz = stem.strip_prefix("subcarriers-")?.parse().ok()?;
    Bandwidth::from_mhz(mhz)
}

pub fn parse_map(text: &str, fallback: Option<Bandwidth>) -> Result<SubcarrierMap, LineError> {
    let mut count = None;
    let mut lower = None;
    let (mut null, mut pilot) = (Vec::new(), Vec::new());
    let mut last = 0;
    for (n, line) in content_lines(text) {
        last = n;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let arg = |i: usize, what: &str| -> Result<usize, LineError> {
            let tok = toks
                .get(i)
                .ok_or_else(|| LineError::new(n, format!("`{}` needs a {what}", toks[0])))?;
            parse_usize(tok, n, what)
        };
        let arity = match toks[0] {
            "version" => {
                let v = arg(1, "version")?;
                if v as u32 != TABLE_VERSION {
                    return Err(LineError::new(n, format!("unsupported map version {v}")));
                }
                2
            }
            "subcarriers" => {
                count = Some(arg(1, "count")?);
                2
            }
            "bandwidth" => {
                let mhz = arg(1, "bandwidth")?;
                let bw = Bandwidth::from_mhz(mhz as u32)
                    .ok_or_else(|| LineError::new(n, format!("unknown bandwidth {mhz} MHz")))?;
                count = Some(bw.subcarriers());
                2
            }
            "lower" => {
                lower = Some(arg(1, "start")?..arg(2, "end")?);
                3
            }
            "null" => {
                null.push(arg(1, "index")?);
                2
            }
            "pilot" => {
                pilot.push(arg(1, "index")?);
                2
            }
            other => return Err(LineError::new(n, format!("unknown directive `{other}`"))),
        };
        if toks.len() != arity {
            return Err(LineError::new(
                n,
                format!("`{}` takes {} argument(s)", toks[0], arity - 1),
            ));
        }
    }
    let count = count
        .or(fallback.map(Bandwidth::subcarriers))
        .ok_or_else(|| LineError::new(last.max(1), "no `subcarriers` or `bandwidth` line"))?;
    let lower = lower.unwrap_or(0..count);
    SubcarrierMap::new(count, null, pilot, lower)
        .map_err(|e| LineError::new(last.max(1), e.to_string()))
}

pub fn write_map(map: &SubcarrierMap) -> String {
    let mut out = format!(
        "version {TABLE_VERSION}\nsubcarriers {}\n",
        map.subcarrier_count()
    );
    let lower = map.lower_band();
    let _ = writeln!(out, "lower {} {}", lower.start, lower.end);
    for i in map.null_indices() {
        let _ = writeln!(out, "null {i}");
    }
    for i in map.pilot_indices() {
        let _ = writeln!(out, "pilot {i}");
    }
    out
}
