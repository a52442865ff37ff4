//! Synthetic capture scripts as `key = value` lines.
//!
//! ```text
//! duration_s = 35
//! seed = 7
//! episode = 11 25 20     # start end intensity, repeatable
//! ```
//!
//! Unset keys keep the values of [`SynthScript::quiet`]. The base profile
//! is the seeded multipath curve for `profile_seed` (default: `seed`) unless
//! `base_profile` lists one gain per subcarrier.

use std::fmt::Write as _;

use csimotion_core::synth::{multipath_profile, Episode, SynthScript};

use super::{content_lines, parse_f64, parse_usize, LineError};

pub fn parse_script(text: &str) -> Result<SynthScript, LineError> {
    let mut script = SynthScript::quiet(10.0, 0);
    let mut profile_seed = None;
    let mut explicit_profile = None;
    let mut last = 1;
    for (n, line) in content_lines(text) {
        last = n;
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| LineError::new(n, "expected `key = value`"))?;
        let seed = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| LineError::new(n, format!("seed `{v}` is not a u64")))
        };
        match key {
            "duration_s" => script.duration_s = parse_f64(value, n, key)?,
            "sample_rate" => script.sample_rate = parse_f64(value, n, key)?,
            "subcarriers" => script.subcarriers = parse_usize(value, n, key)?,
            "noise_floor" => script.noise_floor = parse_f64(value, n, key)?,
            "jitter" => script.jitter = parse_f64(value, n, key)?,
            "gesture_s" => script.gesture_s = parse_f64(value, n, key)?,
            "seed" => script.seed = seed(value)?,
            "profile_seed" => profile_seed = Some(seed(value)?),
            "base_profile" => {
                explicit_profile = Some(
                    value
                        .split_whitespace()
                        .map(|v| parse_f64(v, n, "gain"))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "episode" => {
                let v: Vec<&str> = value.split_whitespace().collect();
                let [s, e, i] = v[..] else {
                    return Err(LineError::new(n, "episode needs `start end intensity`"));
                };
                script.episodes.push(Episode {
                    start: parse_f64(s, n, "start")?,
                    end: parse_f64(e, n, "end")?,
                    intensity: parse_f64(i, n, "intensity")?,
                });
            }
            other => return Err(LineError::new(n, format!("unknown key `{other}`"))),
        }
    }
    script.base_profile = match explicit_profile {
        Some(p) => p,
        None => multipath_profile(script.subcarriers, profile_seed.unwrap_or(script.seed)),
    };
    script
        .validate()
        .map_err(|e| LineError::new(last, e.to_string()))?;
    Ok(script)
}

/// Writes every field, including the base profile, so parsing gives back
/// the same script.
pub fn write_script(script: &SynthScript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "duration_s = {}", script.duration_s);
    let _ = writeln!(out, "sample_rate = {}", script.sample_rate);
    let _ = writeln!(out, "subcarriers = {}", script.subcarriers);
    let _ = writeln!(out, "noise_floor = {}", script.noise_floor);
    let _ = writeln!(out, "jitter = {}", script.jitter);
    let _ = writeln!(out, "gesture_s = {}", script.gesture_s);
    let _ = writeln!(out, "seed = {}", script.seed);
    for e in &script.episodes {
        let _ = writeln!(out, "episode = {} {} {}", e.start, e.end, e.intensity);
    }
    out.push_str("base_profile =");
    for g in &script.base_profile {
        let _ = write!(out, " {g}");
    }
    out.push('\n');
    out
}
