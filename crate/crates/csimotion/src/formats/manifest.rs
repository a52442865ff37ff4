//! Evaluation manifests.
//!
//! ```text
//! profile=env1.csical
//! capture=runs/m1-a.pcap gt=runs/m1-a.gt pir=runs/m1-a.pir.csv movement=1
//! capture=runs/m2-a.pcap gt=runs/m2-a.gt movement=2
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::path::{Path, PathBuf};

use super::{content_lines, LineError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub line: usize,
    pub capture: PathBuf,
    pub gt: PathBuf,
    pub pir: Option<PathBuf>,
    pub movement: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub profile: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

pub const MOVEMENT_TYPES: std::ops::RangeInclusive<u8> = 1..=5;

pub fn parse_manifest(text: &str, base: &Path) -> Result<Manifest, LineError> {
    let resolve = |p: &str| base.join(p);
    let mut profile = None;
    let mut entries = Vec::new();
    for (n, line) in content_lines(text) {
        let (mut capture, mut gt, mut pir, mut movement) = (None, None, None, None);
        let mut is_profile = false;
        for tok in line.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .filter(|(_, v)| !v.is_empty())
                .ok_or_else(|| LineError::new(n, format!("expected key=value, found `{tok}`")))?;
            let slot = match key {
                "profile" => {
                    is_profile = true;
                    &mut profile
                }
                "capture" => &mut capture,
                "gt" => &mut gt,
                "pir" => &mut pir,
                "movement" => {
                    let m: u8 = value
                        .parse()
                        .ok()
                        .filter(|m| MOVEMENT_TYPES.contains(m))
                        .ok_or_else(|| {
                            LineError::new(n, format!("movement `{value}` is not 1..5"))
                        })?;
                    movement = Some(m);
                    continue;
                }
                other => return Err(LineError::new(n, format!("unknown key `{other}`"))),
            };
            if slot.replace(resolve(value)).is_some() {
                return Err(LineError::new(n, format!("`{key}` given twice")));
            }
        }
        if is_profile {
            if capture.is_some() || gt.is_some() || pir.is_some() || movement.is_some() {
                return Err(LineError::new(n, "`profile` must be on its own line"));
            }
            continue;
        }
        let missing = |what: &str| LineError::new(n, format!("entry is missing `{what}`"));
        entries.push(ManifestEntry {
            line: n,
            capture: capture.ok_or_else(|| missing("capture"))?,
            gt: gt.ok_or_else(|| missing("gt"))?,
            pir,
            movement: movement.ok_or_else(|| missing("movement"))?,
        });
    }
    let profile = profile.ok_or_else(|| LineError::new(1, "manifest has no `profile=` line"))?;
    Ok(Manifest { profile, entries })
}
