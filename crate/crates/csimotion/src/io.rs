//! Reading and writing the file formats by path.

use std::fs;
use std::path::Path;

use csimotion_core::eval::PirEvent;
use csimotion_core::{CalibrationProfile, CsiCapture, GroundTruth, SubcarrierMap};

use crate::error::Error;
use crate::formats::{canonical, map, pcap, profile, truth};

/// A capture and, for pcap input, the number of malformed CSI payloads that
/// were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCapture {
    pub capture: CsiCapture,
    pub skipped: Option<usize>,
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::read(path, e))
}

pub fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::read(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    fs::write(path, contents).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn is_pcap(bytes: &[u8]) -> bool {
    const MAGICS: [[u8; 4]; 4] = [
        [0xd4, 0xc3, 0xb2, 0xa1],
        [0xa1, 0xb2, 0xc3, 0xd4],
        [0x4d, 0x3c, 0xb2, 0xa1],
        [0xa1, 0xb2, 0x3c, 0x4d],
    ];
    bytes.len() >= 4 && MAGICS.iter().any(|m| bytes[..4] == m[..])
}

/// Loads a Nexmon pcap or a canonical capture, chosen by content. Anything
/// that is neither is reported as a pcap error.
pub fn load_capture(path: &Path) -> Result<LoadedCapture, Error> {
    let bytes = read_bytes(path)?;
    if !is_pcap(&bytes) && bytes.starts_with(b"csicap") {
        let text = String::from_utf8(bytes).map_err(|_| Error::Canonical {
            path: path.to_path_buf(),
            source: canonical::CanonicalError::SchemaViolation {
                line: 1,
                message: "file is not UTF-8".into(),
            },
        })?;
        let capture = canonical::parse_canonical(&text).map_err(|source| Error::Canonical {
            path: path.to_path_buf(),
            source,
        })?;
        return Ok(LoadedCapture {
            capture,
            skipped: None,
        });
    }
    let parsed = pcap::parse_nexmon_pcap(&bytes).map_err(|source| Error::Pcap {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(LoadedCapture {
        capture: parsed.capture,
        skipped: Some(parsed.skipped),
    })
}

pub fn load_profile(path: &Path) -> Result<CalibrationProfile, Error> {
    profile::parse_profile(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth, Error> {
    truth::parse_ground_truth(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn load_pir(path: &Path) -> Result<Vec<PirEvent>, Error> {
    truth::parse_pir(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn load_map(path: &Path) -> Result<SubcarrierMap, Error> {
    map::parse_map(&read_text(path)?, map::bandwidth_from_name(path))
        .map_err(|e| Error::format(path, e))
}

/// The built-in map for the capture's bandwidth when its subcarrier count
/// matches one, else `None`.
pub fn builtin_map_for(capture: &CsiCapture) -> Option<SubcarrierMap> {
    let spec = capture.channel_spec();
    (spec.bandwidth.subcarriers() == capture.subcarrier_count())
        .then(|| SubcarrierMap::builtin(spec.bandwidth))
}
