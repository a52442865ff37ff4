//! Portable text capture format.
//!
//! ```text
//! csicap v1 S=4 bw=80 rate=100 band=5 src=02:00:00:00:00:01
//! 0 0 1 0 0 1 -1 0 0 -1
//! 0.01 1 1 0 0 1 -1 0 0 -1
//! ```
//!
//! The header declares the subcarrier count, bandwidth, nominal rate and
//! optionally the band (default 5) and a transmitter MAC shared by every
//! frame. Each record is `<timestamp> <seq>` followed by `S` real/imaginary
//! pairs. When frames come from different transmitters the header carries
//! `src=each` and every record has the MAC as its third field.
//!
//! Numbers are written in shortest round-trip form, so writing then parsing
//! reproduces the capture exactly.

use std::fmt::Write as _;

use csimotion_core::{Band, Bandwidth, ChannelSpec, ComplexSample, CsiCapture, CsiFrame};
use thiserror::Error;

const MAGIC: &str = "csicap";
const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalError {
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("capture contains no CSI frames")]
    NoCsiFrames,
}

fn violation(line: usize, message: impl Into<String>) -> CanonicalError {
    CanonicalError::SchemaViolation {
        line,
        message: message.into(),
    }
}

pub fn format_mac(mac: &[u8; 6]) -> String {
    let mut s = String::with_capacity(17);
    for (i, b) in mac.iter().enumerate() {
        if i > 0 {
            s.push(':');
        }
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn parse_mac(text: &str) -> Option<[u8; 6]> {
    let mut out = [0u8; 6];
    let mut parts = text.split(':');
    for slot in &mut out {
        let p = parts.next()?;
        if p.len() != 2 {
            return None;
        }
        *slot = u8::from_str_radix(p, 16).ok()?;
    }
    parts.next().is_none().then_some(out)
}

struct Header {
    s: usize,
    spec: ChannelSpec,
    rate: f64,
    src: Source,
}

enum Source {
    Unset,
    Shared([u8; 6]),
    PerRecord,
}

fn parse_header(line: &str) -> Result<Header, CanonicalError> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(violation(1, "missing `csicap` header"));
    }
    match tokens.next() {
        Some(VERSION) => {}
        Some(v) => return Err(violation(1, format!("unsupported version `{v}`"))),
        None => return Err(violation(1, "missing version")),
    }
    let (mut s, mut bw, mut rate, mut band, mut src) =
        (None, None, None, Band::Ghz5, Source::Unset);
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| violation(1, format!("expected key=value, found `{tok}`")))?;
        let bad = || violation(1, format!("invalid value for {key}: `{value}`"));
        match key {
            "S" => s = Some(value.parse::<usize>().map_err(|_| bad())?),
            "bw" => {
                let mhz = value.parse::<u32>().map_err(|_| bad())?;
                bw = Some(Bandwidth::from_mhz(mhz).ok_or_else(bad)?);
            }
            "rate" => rate = Some(value.parse::<f64>().map_err(|_| bad())?),
            "band" => band = Band::from_label(value).ok_or_else(bad)?,
            "src" if value == "each" => src = Source::PerRecord,
            "src" => src = Source::Shared(parse_mac(value).ok_or_else(bad)?),
            _ => return Err(violation(1, format!("unknown header key `{key}`"))),
        }
    }
    let s = s.ok_or_else(|| violation(1, "missing S"))?;
    if s == 0 {
        return Err(violation(1, "S must be positive"));
    }
    let rate = rate.ok_or_else(|| violation(1, "missing rate"))?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(violation(1, "rate must be finite and positive"));
    }
    Ok(Header {
        s,
        spec: ChannelSpec {
            band,
            bandwidth: bw.ok_or_else(|| violation(1, "missing bw"))?,
        },
        rate,
        src,
    })
}

fn number(tok: &str, line: usize, what: &str) -> Result<f64, CanonicalError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| violation(line, format!("{what} `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(violation(line, format!("{what} `{tok}` is not finite")));
    }
    Ok(v)
}

/// Parses canonical text. Blank lines are ignored; line numbers in errors
/// are 1-based.
pub fn parse_canonical(text: &str) -> Result<CsiCapture, CanonicalError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| violation(1, "empty file"))?;
    let header = parse_header(first)?;
    let per_record = matches!(header.src, Source::PerRecord);
    let expected = 2 + per_record as usize + 2 * header.s;

    let mut frames = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != expected {
            return Err(violation(
                n,
                format!(
                    "record has {} fields, S={} needs {expected}",
                    toks.len(),
                    header.s
                ),
            ));
        }
        let timestamp = number(toks[0], n, "timestamp")?;
        if timestamp < prev {
            return Err(violation(n, "timestamp precedes the previous record"));
        }
        prev = timestamp;
        let sequence = toks[1]
            .parse::<u16>()
            .map_err(|_| violation(n, format!("sequence `{}` is not a u16", toks[1])))?;
        let (source_id, rest) = match header.src {
            Source::PerRecord => (
                parse_mac(toks[2]).ok_or_else(|| violation(n, format!("bad MAC `{}`", toks[2])))?,
                &toks[3..],
            ),
            Source::Shared(mac) => (mac, &toks[2..]),
            Source::Unset => ([0; 6], &toks[2..]),
        };
        let subcarriers = rest
            .chunks_exact(2)
            .map(|p| {
                Ok(ComplexSample::new(
                    number(p[0], n, "re")?,
                    number(p[1], n, "im")?,
                ))
            })
            .collect::<Result<Vec<_>, CanonicalError>>()?;
        frames.push(CsiFrame {
            timestamp,
            subcarriers,
            source_id,
            sequence,
        });
    }
    if frames.is_empty() {
        return Err(CanonicalError::NoCsiFrames);
    }
    CsiCapture::new(frames, header.spec, header.rate).map_err(|e| violation(1, e.to_string()))
}

/// Serialises a capture. Output depends only on the capture.
pub fn write_canonical(capture: &CsiCapture) -> String {
    let frames = capture.frames();
    let spec = capture.channel_spec();
    let shared = frames
        .iter()
        .all(|f| f.source_id == frames[0].source_id)
        .then_some(frames[0].source_id);
    let mut out = String::new();
    let _ = write!(
        out,
        "{MAGIC} {VERSION} S={} bw={} rate={} band={}",
        capture.subcarrier_count(),
        spec.bandwidth.mhz(),
        capture.nominal_rate(),
        spec.band.label()
    );
    match shared {
        Some(mac) => {
            let _ = write!(out, " src={}", format_mac(&mac));
        }
        None => out.push_str(" src=each"),
    }
    out.push('\n');
    for f in frames {
        let _ = write!(out, "{} {}", f.timestamp, f.sequence);
        if shared.is_none() {
            let _ = write!(out, " {}", format_mac(&f.source_id));
        }
        for c in &f.subcarriers {
            let _ = write!(out, " {} {}", c.re, c.im);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "csicap v1 S=2 bw=20 rate=100\n0 0 1 0 0 1\n0.01 1 3 4 -1 0\n";

    #[test]
    fn parse_small() {
        let c = parse_canonical(SMALL).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.subcarrier_count(), 2);
        assert_eq!(c.channel_spec().bandwidth, Bandwidth::Mhz20);
        assert_eq!(c.channel_spec().band, Band::Ghz5);
        assert_eq!(c.frames()[1].subcarriers[0].amplitude(), 5.0);
        assert_eq!(c.frames()[0].source_id, [0; 6]);
    }

    #[test]
    fn written_twice_identical() {
        let c = parse_canonical(SMALL).unwrap();
        assert_eq!(write_canonical(&c), write_canonical(&c));
        assert!(write_canonical(&c).starts_with("csicap v1 S=2 bw=20 rate=100 band=5 src="));
    }

    #[test]
    fn per_record_sources() {
        let mut frames = parse_canonical(SMALL).unwrap().into_frames();
        frames[1].source_id = [0xaa, 0xbb, 0xcc, 0, 1, 2];
        let c = CsiCapture::new(frames, ChannelSpec::default(), 50.0).unwrap();
        let text = write_canonical(&c);
        assert!(text.contains(" src=each"));
        assert!(text.contains(" aa:bb:cc:00:01:02 "));
        assert_eq!(parse_canonical(&text).unwrap(), c);
    }

    #[test]
    fn short_row_is_violation() {
        let text = "csicap v1 S=2 bw=20 rate=100\n0 0 1 0 0 1\n0.01 1 3 4 -1\n";
        assert_eq!(
            parse_canonical(text),
            Err(CanonicalError::SchemaViolation {
                line: 3,
                message: "record has 5 fields, S=2 needs 6".into()
            })
        );
    }

    #[test]
    fn header_only_has_no_frames() {
        assert_eq!(
            parse_canonical("csicap v1 S=2 bw=20 rate=100\n\n"),
            Err(CanonicalError::NoCsiFrames)
        );
    }

    #[test]
    fn header_violations() {
        for bad in [
            "",
            "csicap v2 S=2 bw=20 rate=100",
            "csicap v1 S=2 bw=30 rate=100",
            "csicap v1 S=2 bw=20",
            "csicap v1 S=0 bw=20 rate=100",
            "csicap v1 S=2 bw=20 rate=-1",
            "csicap v1 S=2 bw=20 rate=100 colour=red",
            "csicap v1 S=2 bw=20 rate=100 src=zz",
            "pcap",
        ] {
            assert!(
                matches!(
                    parse_canonical(bad),
                    Err(CanonicalError::SchemaViolation { line: 1, .. })
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn record_violations() {
        let h = "csicap v1 S=1 bw=20 rate=100\n";
        for rec in [
            "x 0 1 1",
            "0 70000 1 1",
            "0 0 nan 1",
            "0 0 inf 1",
            "1 0 1 1\n0 1 1 1",
        ] {
            let r = parse_canonical(&format!("{h}{rec}\n"));
            assert!(
                matches!(r, Err(CanonicalError::SchemaViolation { .. })),
                "{rec}: {r:?}"
            );
        }
    }

    #[test]
    fn mac_text() {
        let mac = [0x02, 0x00, 0xab, 0xcd, 0xef, 0x10];
        assert_eq!(format_mac(&mac), "02:00:ab:cd:ef:10");
        assert_eq!(parse_mac("02:00:ab:cd:ef:10"), Some(mac));
        assert_eq!(parse_mac("02:00:ab:cd:ef"), None);
        assert_eq!(parse_mac("02:00:ab:cd:ef:10:11"), None);
        assert_eq!(parse_mac("2:00:ab:cd:ef:10"), None);
    }
}
