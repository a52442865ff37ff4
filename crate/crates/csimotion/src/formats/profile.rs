//! Calibration profile files.
//!
//! ```text
//! csical v1
//! env living-room
//! threshold 0.8712
//! mean 0.95
//! range 0.04
//! ```
//!
//! One `mean`/`range` pair per calibration capture, in capture order. A
//! profile without them is a manual threshold. When they are present the
//! stored threshold must agree with the one they imply.

use std::fmt::Write as _;

use csimotion_core::CalibrationProfile;

use super::{content_lines, parse_f64, LineError};

const HEADER: &str = "csical v1";

pub fn parse_profile(text: &str) -> Result<CalibrationProfile, LineError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, _)) => return Err(LineError::new(n, "expected `csical v1` header")),
        None => return Err(LineError::new(1, "empty profile")),
    }
    let (mut env, mut threshold) = (String::new(), None);
    let (mut means, mut ranges) = (Vec::new(), Vec::new());
    let mut last = 1;
    for (n, line) in lines {
        last = n;
        let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let value = value.trim();
        match key {
            "env" => env = value.to_string(),
            "threshold" => threshold = Some((n, parse_f64(value, n, "threshold")?)),
            "mean" => means.push(parse_f64(value, n, "mean")?),
            "range" => ranges.push(parse_f64(value, n, "range")?),
            other => return Err(LineError::new(n, format!("unknown key `{other}`"))),
        }
    }
    let (tline, threshold) = threshold.ok_or_else(|| LineError::new(last, "missing threshold"))?;
    if means.is_empty() && ranges.is_empty() {
        return Ok(CalibrationProfile::manual(threshold, env));
    }
    if means.len() != ranges.len() {
        return Err(LineError::new(
            last,
            format!("{} means but {} ranges", means.len(), ranges.len()),
        ));
    }
    let profile = CalibrationProfile::from_statistics(means, ranges, env)
        .map_err(|e| LineError::new(last, e.to_string()))?;
    if (profile.threshold() - threshold).abs() > 1e-9 * (1.0 + threshold.abs()) {
        return Err(LineError::new(
            tline,
            format!(
                "threshold {threshold} disagrees with the statistics, which give {}",
                profile.threshold()
            ),
        ));
    }
    Ok(profile)
}

pub fn write_profile(profile: &CalibrationProfile) -> String {
    let mut out = format!("{HEADER}\n");
    if !profile.environment_label.is_empty() {
        let _ = writeln!(out, "env {}", profile.environment_label);
    }
    let _ = writeln!(out, "threshold {}", profile.threshold());
    for (m, r) in profile
        .per_capture_means()
        .iter()
        .zip(profile.per_capture_ranges())
    {
        let _ = writeln!(out, "mean {m}\nrange {r}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = CalibrationProfile::from_statistics(
            vec![0.95, 0.96, 0.97],
            vec![0.01, 0.02, 0.05],
            "lab one",
        )
        .unwrap();
        let text = write_profile(&p);
        assert_eq!(parse_profile(&text).unwrap(), p);
        assert_eq!(text.lines().count(), 9);
    }

    #[test]
    fn manual_threshold() {
        let p = parse_profile("csical v1\n# hand tuned\nthreshold 0.9\n").unwrap();
        assert_eq!(p.threshold(), 0.9);
        assert_eq!(p.captures(), 0);
        assert_eq!(parse_profile(&write_profile(&p)).unwrap(), p);
    }

    #[test]
    fn inconsistent_threshold() {
        let e = parse_profile("csical v1\nthreshold 0.5\nmean 0.9\nrange 0.1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_profile("csical v1\nthreshold 0.7\nmean 0.9\nrange 0.1\n").is_ok());
    }

    #[test]
    fn malformed() {
        assert!(parse_profile("").is_err());
        assert!(parse_profile("csical v2\nthreshold 1\n").is_err());
        assert!(parse_profile("csical v1\n").is_err());
        assert!(parse_profile("csical v1\nthreshold x\n").is_err());
        assert!(parse_profile("csical v1\nthreshold 0.7\nmean 0.9\n").is_err());
        assert!(parse_profile("csical v1\nthreshold 0.7\nslope 1\n").is_err());
    }
}
