//! Ground-truth interval files and PIR event traces.
//!
//! Ground truth is one `start_s end_s moving|still` line per interval,
//! contiguous from 0. PIR traces are CSV `t_s,state` with state 0 or 1 and
//! an optional header row.

use std::fmt::Write as _;

use csimotion_core::eval::PirEvent;
use csimotion_core::{GroundTruth, Interval, Label};

use super::{content_lines, parse_f64, LineError};

pub fn parse_ground_truth(text: &str) -> Result<GroundTruth, LineError> {
    let mut intervals = Vec::new();
    let mut lines = Vec::new();
    for (n, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [start, end, label] = toks[..] else {
            return Err(LineError::new(n, "expected `start end moving|still`"));
        };
        let label = match label {
            "moving" => Label::Moving,
            "still" => Label::Still,
            other => return Err(LineError::new(n, format!("unknown label `{other}`"))),
        };
        intervals.push(Interval::new(
            parse_f64(start, n, "start")?,
            parse_f64(end, n, "end")?,
            label,
        ));
        lines.push(n);
    }
    // locate the offending line before handing over to the validator
    let culprit = intervals
        .iter()
        .position(|iv| !(iv.end > iv.start))
        .or_else(|| {
            intervals
                .windows(2)
                .position(|w| (w[1].start - w[0].end).abs() > 1e-9)
                .map(|i| i + 1)
        });
    GroundTruth::new(intervals).map_err(|e| {
        let line = culprit.and_then(|i| lines.get(i).copied()).unwrap_or(1);
        LineError::new(line, e.to_string())
    })
}

pub fn write_ground_truth(gt: &GroundTruth) -> String {
    let mut out = String::new();
    for iv in gt.intervals() {
        let _ = writeln!(out, "{} {} {}", iv.start, iv.end, iv.label.as_str());
    }
    out
}

pub fn parse_pir(text: &str) -> Result<Vec<PirEvent>, LineError> {
    let mut events = Vec::new();
    for (n, line) in content_lines(text) {
        let Some((t, state)) = line.split_once(',') else {
            return Err(LineError::new(n, "expected `t_s,state`"));
        };
        let (t, state) = (t.trim(), state.trim());
        if events.is_empty() && t == "t_s" {
            continue;
        }
        let state = match state {
            "0" => false,
            "1" => true,
            other => return Err(LineError::new(n, format!("state `{other}` is not 0 or 1"))),
        };
        let t = parse_f64(t, n, "time")?;
        if let Some(prev) = events.last().map(|e: &PirEvent| e.t) {
            if t < prev {
                return Err(LineError::new(n, "event precedes the previous one"));
            }
        }
        events.push(PirEvent { t, state });
    }
    Ok(events)
}

pub fn write_pir(events: &[PirEvent]) -> String {
    let mut out = String::from("t_s,state\n");
    for e in events {
        let _ = writeln!(out, "{},{}", e.t, e.state as u8);
    }
    out
}
