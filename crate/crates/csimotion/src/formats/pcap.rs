//! Nexmon CSI captures in classic pcap files.
//!
//! Each CSI measurement arrives as a UDP datagram to port 5500 inside an
//! Ethernet/IPv4 packet. The payload is an 18 byte header followed by one
//! little-endian `i16` real/imaginary pair per subcarrier:
//!
//! | offset | size | field                             |
//! |--------|------|-----------------------------------|
//! | 0      | 2    | magic `0x1111`                    |
//! | 2      | 1    | RSSI, signed dBm                  |
//! | 3      | 1    | frame control byte                |
//! | 4      | 6    | transmitter MAC                   |
//! | 10     | 2    | sequence number                   |
//! | 12     | 2    | core (bits 0-2), stream (bits 3-5)|
//! | 14     | 2    | chanspec                          |
//! | 16     | 2    | chip version                      |
//! | 18     | 4·S  | CSI                               |
//!
//! All multi-byte payload fields are little-endian.

use csimotion_core::{Band, Bandwidth, ChannelSpec, ComplexSample, CsiCapture, CsiFrame};
use thiserror::Error;

pub const CSI_PORT: u16 = 5500;
pub const PAYLOAD_MAGIC: u16 = 0x1111;
pub const PAYLOAD_HEADER_LEN: usize = 18;

const MAGIC_USEC: u32 = 0xA1B2_C3D4;
const MAGIC_NSEC: u32 = 0xA1B2_3C4D;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const LINKTYPE_ETHERNET: u32 = 1;
const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_VLAN: u16 = 0x8100;
const IPPROTO_UDP: u8 = 17;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcapError {
    #[error("not a pcap file: {0}")]
    NotAPcap(&'static str),
    #[error("unsupported pcap link type {0}, expected Ethernet")]
    UnsupportedLinkType(u32),
    #[error("no CSI frames in capture ({skipped} malformed CSI payloads skipped)")]
    NoCsiFrames { skipped: usize },
    #[error("packet {packet}: {found} subcarriers, capture started with {expected}")]
    MixedSubcarrierCount {
        packet: usize,
        expected: usize,
        found: usize,
    },
    #[error("packet {packet}: core {} stream {}, capture started with core {} stream {}", found.0, found.1, expected.0, expected.1)]
    MixedStreams {
        packet: usize,
        expected: (u8, u8),
        found: (u8, u8),
    },
}

/// Broadcom chanspec word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chanspec(pub u16);

impl Chanspec {
    pub fn channel(self) -> u8 {
        (self.0 & 0xff) as u8
    }

    pub fn bandwidth(self) -> Option<Bandwidth> {
        match (self.0 >> 11) & 0x7 {
            2 => Some(Bandwidth::Mhz20),
            3 => Some(Bandwidth::Mhz40),
            4 => Some(Bandwidth::Mhz80),
            _ => None,
        }
    }

    pub fn band(self) -> Band {
        if self.0 & 0xc000 == 0xc000 {
            Band::Ghz5
        } else {
            Band::Ghz2_4
        }
    }

    /// Chanspec for a center channel with the given band and bandwidth.
    pub fn encode(channel: u8, spec: ChannelSpec) -> Self {
        let bw: u16 = match spec.bandwidth {
            Bandwidth::Mhz20 => 2,
            Bandwidth::Mhz40 => 3,
            Bandwidth::Mhz80 => 4,
        };
        let band: u16 = match spec.band {
            Band::Ghz5 => 0xc000,
            Band::Ghz2_4 => 0x0000,
        };
        Chanspec(band | bw << 11 | channel as u16)
    }

    /// Center channel used when writing: 42 (80 MHz block at 36), 38, 36 on
    /// 5 GHz; 6 on 2.4 GHz.
    pub fn default_for(spec: ChannelSpec) -> Self {
        let channel = match (spec.band, spec.bandwidth) {
            (Band::Ghz2_4, _) => 6,
            (Band::Ghz5, Bandwidth::Mhz80) => 42,
            (Band::Ghz5, Bandwidth::Mhz40) => 38,
            (Band::Ghz5, Bandwidth::Mhz20) => 36,
        };
        Chanspec::encode(channel, spec)
    }
}

/// Decoded CSI payload header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadHeader {
    pub rssi: i8,
    pub frame_control: u8,
    pub source: [u8; 6],
    pub sequence: u16,
    pub core: u8,
    pub spatial: u8,
    pub chanspec: Chanspec,
    pub chip: u16,
}

/// A parsed capture plus what was left out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct NexmonCapture {
    pub capture: CsiCapture,
    /// Port-5500 payloads that were not valid CSI records.
    pub skipped: usize,
    /// Packets that were not UDP to the CSI port.
    pub ignored: usize,
    /// Header of the first accepted frame.
    pub first_header: PayloadHeader,
}

struct Reader<'a> {
    bytes: &'a [u8],
    swapped: bool,
}

impl Reader<'_> {
    fn u32_at(&self, off: usize) -> u32 {
        let raw: [u8; 4] = self.bytes[off..off + 4].try_into().unwrap();
        if self.swapped {
            u32::from_be_bytes(raw)
        } else {
            u32::from_le_bytes(raw)
        }
    }
}

fn u16_le(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn u16_be(b: &[u8], off: usize) -> u16 {
    u16::from_be_bytes([b[off], b[off + 1]])
}

/// Locates the UDP payload of an Ethernet frame if it is IPv4/UDP to the
/// CSI port. Fragments and short packets are ignored.
fn udp_payload(frame: &[u8]) -> Option<&[u8]> {
    let mut off = 12;
    let mut ethertype = u16_be(frame.get(..14)?, off);
    off += 2;
    while ethertype == ETHERTYPE_VLAN {
        ethertype = u16_be(frame.get(..off + 4)?, off + 2);
        off += 4;
    }
    if ethertype != ETHERTYPE_IPV4 {
        return None;
    }
    let ip = frame.get(off..)?;
    let first = *ip.first()?;
    let ihl = (first & 0x0f) as usize * 4;
    if first >> 4 != 4 || ihl < 20 || ip.len() < ihl + 8 {
        return None;
    }
    if ip[9] != IPPROTO_UDP || u16_be(ip, 6) & 0x3fff != 0 {
        return None;
    }
    let total = (u16_be(ip, 2) as usize).clamp(ihl, ip.len());
    let udp = &ip[ihl..total];
    if udp.len() < 8 || u16_be(udp, 2) != CSI_PORT {
        return None;
    }
    let len = (u16_be(udp, 4) as usize).clamp(8, udp.len());
    Some(&udp[8..len])
}

/// Decodes one CSI payload, or `None` when it is malformed.
pub fn decode_payload(payload: &[u8]) -> Option<(PayloadHeader, Vec<ComplexSample>)> {
    if payload.len() < PAYLOAD_HEADER_LEN || u16_le(payload, 0) != PAYLOAD_MAGIC {
        return None;
    }
    let chanspec = Chanspec(u16_le(payload, 14));
    let s = chanspec.bandwidth()?.subcarriers();
    if payload.len() != PAYLOAD_HEADER_LEN + 4 * s {
        return None;
    }
    let conf = u16_le(payload, 12);
    let header = PayloadHeader {
        rssi: payload[2] as i8,
        frame_control: payload[3],
        source: payload[4..10].try_into().unwrap(),
        sequence: u16_le(payload, 10),
        core: (conf & 0x7) as u8,
        spatial: ((conf >> 3) & 0x7) as u8,
        chanspec,
        chip: u16_le(payload, 16),
    };
    let csi = payload[PAYLOAD_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| {
            let re = i16::from_le_bytes([c[0], c[1]]);
            let im = i16::from_le_bytes([c[2], c[3]]);
            ComplexSample::new(re as f64, im as f64)
        })
        .collect();
    Some((header, csi))
}

/// Parses a classic pcap byte stream holding Nexmon CSI packets.
///
/// Frames keep file order except that records are stable-sorted by
/// timestamp. A final record cut short by the end of the file counts as
/// skipped. Packet numbers in errors are 1-based.
pub fn parse_nexmon_pcap(bytes: &[u8]) -> Result<NexmonCapture, PcapError> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(PcapError::NotAPcap("shorter than the global header"));
    }
    let magic = u32::from_le_bytes(bytes[..4].try_into().unwrap());
    let (swapped, nanos) = match magic {
        MAGIC_USEC => (false, false),
        MAGIC_NSEC => (false, true),
        m if m.swap_bytes() == MAGIC_USEC => (true, false),
        m if m.swap_bytes() == MAGIC_NSEC => (true, true),
        _ => return Err(PcapError::NotAPcap("bad magic number")),
    };
    let r = Reader { bytes, swapped };
    let linktype = r.u32_at(20) & 0x0fff_ffff;
    if linktype != LINKTYPE_ETHERNET {
        return Err(PcapError::UnsupportedLinkType(linktype));
    }
    let tick = if nanos { 1e-9 } else { 1e-6 };

    let mut frames: Vec<CsiFrame> = Vec::new();
    let mut first: Option<(usize, PayloadHeader)> = None;
    let (mut skipped, mut ignored) = (0usize, 0usize);
    let mut off = GLOBAL_HEADER_LEN;
    let mut packet = 0usize;
    while off < bytes.len() {
        packet += 1;
        if bytes.len() - off < RECORD_HEADER_LEN {
            skipped += 1;
            break;
        }
        let ts = r.u32_at(off) as f64 + r.u32_at(off + 4) as f64 * tick;
        let incl = r.u32_at(off + 8) as usize;
        off += RECORD_HEADER_LEN;
        if incl > bytes.len() - off {
            skipped += 1;
            break;
        }
        let data = &bytes[off..off + incl];
        off += incl;
        let Some(payload) = udp_payload(data) else {
            ignored += 1;
            continue;
        };
        let Some((header, csi)) = decode_payload(payload) else {
            skipped += 1;
            continue;
        };
        match first {
            None => first = Some((csi.len(), header)),
            Some((s, h)) => {
                if csi.len() != s {
                    return Err(PcapError::MixedSubcarrierCount {
                        packet,
                        expected: s,
                        found: csi.len(),
                    });
                }
                if (header.core, header.spatial) != (h.core, h.spatial) {
                    return Err(PcapError::MixedStreams {
                        packet,
                        expected: (h.core, h.spatial),
                        found: (header.core, header.spatial),
                    });
                }
            }
        }
        frames.push(CsiFrame {
            timestamp: ts,
            subcarriers: csi,
            source_id: header.source,
            sequence: header.sequence,
        });
    }
    let Some((_, first_header)) = first else {
        return Err(PcapError::NoCsiFrames { skipped });
    };
    frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    let spec = ChannelSpec {
        band: first_header.chanspec.band(),
        bandwidth: first_header
            .chanspec
            .bandwidth()
            .unwrap_or(Bandwidth::Mhz80),
    };
    // integer samples and sorted finite timestamps always form a capture
    let capture = CsiCapture::new(frames, spec, CsiCapture::DEFAULT_RATE)
        .expect("decoded frames satisfy capture invariants");
    Ok(NexmonCapture {
        capture,
        skipped,
        ignored,
        first_header,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcapWriteError {
    #[error("frame {frame}: sample is not an integer in the i16 range")]
    NotRepresentable { frame: usize },
    #[error("frame {frame}: timestamp is negative or beyond the pcap range")]
    TimestampOutOfRange { frame: usize },
    #[error("{found} subcarriers do not match any Nexmon bandwidth")]
    UnsupportedSubcarrierCount { found: usize },
}

/// Fields of the written payload that a [`CsiCapture`] does not carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadDefaults {
    pub rssi: i8,
    pub frame_control: u8,
    pub core: u8,
    pub spatial: u8,
    pub chip: u16,
    /// `None` derives it from the capture's channel spec.
    pub chanspec: Option<Chanspec>,
}

impl Default for PayloadDefaults {
    fn default() -> Self {
        PayloadDefaults {
            rssi: -40,
            frame_control: 0x08,
            core: 0,
            spatial: 0,
            // BCM43455c0
            chip: 0x4345,
            chanspec: None,
        }
    }
}

fn ip_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header
        .chunks(2)
        .map(|c| u16::from_be_bytes([c[0], *c.get(1).unwrap_or(&0)]) as u32)
        .sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// Encodes a capture as a little-endian microsecond pcap the way the Nexmon
/// tools emit it: broadcast Ethernet from `4e:45:58:4d:4f:4e`, IPv4
/// 10.10.10.10 to 255.255.255.255, UDP 5500 to 5500 without checksum.
///
/// Timestamps are rounded to the microsecond. Samples must be integers.
pub fn write_nexmon_pcap(
    capture: &CsiCapture,
    defaults: &PayloadDefaults,
) -> Result<Vec<u8>, PcapWriteError> {
    let s = capture.subcarrier_count();
    let spec = capture.channel_spec();
    let chanspec = match defaults.chanspec {
        Some(c) => c,
        None => {
            let bw = Bandwidth::from_subcarriers(s)
                .ok_or(PcapWriteError::UnsupportedSubcarrierCount { found: s })?;
            Chanspec::default_for(ChannelSpec {
                band: spec.band,
                bandwidth: bw,
            })
        }
    };
    if chanspec.bandwidth().map(|b| b.subcarriers()) != Some(s) {
        return Err(PcapWriteError::UnsupportedSubcarrierCount { found: s });
    }

    let mut out = Vec::with_capacity(GLOBAL_HEADER_LEN + capture.len() * (80 + 4 * s));
    out.extend_from_slice(&MAGIC_USEC.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&65535u32.to_le_bytes());
    out.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());

    let conf = (defaults.core & 0x7) as u16 | ((defaults.spatial & 0x7) as u16) << 3;
    for (i, frame) in capture.frames().iter().enumerate() {
        let mut payload = Vec::with_capacity(PAYLOAD_HEADER_LEN + 4 * s);
        payload.extend_from_slice(&PAYLOAD_MAGIC.to_le_bytes());
        payload.push(defaults.rssi as u8);
        payload.push(defaults.frame_control);
        payload.extend_from_slice(&frame.source_id);
        payload.extend_from_slice(&frame.sequence.to_le_bytes());
        payload.extend_from_slice(&conf.to_le_bytes());
        payload.extend_from_slice(&chanspec.0.to_le_bytes());
        payload.extend_from_slice(&defaults.chip.to_le_bytes());
        for c in &frame.subcarriers {
            for v in [c.re, c.im] {
                if v.fract() != 0.0 || !(i16::MIN as f64..=i16::MAX as f64).contains(&v) {
                    return Err(PcapWriteError::NotRepresentable { frame: i });
                }
                payload.extend_from_slice(&(v as i16).to_le_bytes());
            }
        }

        let udp_len = 8 + payload.len();
        let ip_len = 20 + udp_len;
        let mut pkt = Vec::with_capacity(14 + ip_len);
        pkt.extend_from_slice(&[0xff; 6]);
        pkt.extend_from_slice(&[0x4e, 0x45, 0x58, 0x4d, 0x4f, 0x4e]);
        pkt.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
        let mut ip = [0u8; 20];
        ip[0] = 0x45;
        ip[2..4].copy_from_slice(&(ip_len as u16).to_be_bytes());
        ip[8] = 1;
        ip[9] = IPPROTO_UDP;
        ip[12..16].copy_from_slice(&[10, 10, 10, 10]);
        ip[16..20].copy_from_slice(&[255, 255, 255, 255]);
        let sum = ip_checksum(&ip);
        ip[10..12].copy_from_slice(&sum.to_be_bytes());
        pkt.extend_from_slice(&ip);
        pkt.extend_from_slice(&CSI_PORT.to_be_bytes());
        pkt.extend_from_slice(&CSI_PORT.to_be_bytes());
        pkt.extend_from_slice(&(udp_len as u16).to_be_bytes());
        pkt.extend_from_slice(&0u16.to_be_bytes());
        pkt.extend_from_slice(&payload);

        let micros = (frame.timestamp * 1e6).round();
        if !(0.0..=u32::MAX as f64 * 1e6).contains(&micros) {
            return Err(PcapWriteError::TimestampOutOfRange { frame: i });
        }
        let micros = micros as u64;
        out.extend_from_slice(&((micros / 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&((micros % 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
        out.extend_from_slice(&(pkt.len() as u32).to_le_bytes());
        out.extend_from_slice(&pkt);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capture(n: usize, s: usize) -> CsiCapture {
        let frames = (0..n)
            .map(|i| CsiFrame {
                timestamp: 100.0 + i as f64 * 0.01,
                subcarriers: (0..s)
                    .map(|k| ComplexSample::new(k as f64 - 3.0, i as f64))
                    .collect(),
                source_id: [1, 2, 3, 4, 5, 6],
                sequence: i as u16,
            })
            .collect();
        CsiCapture::new(frames, ChannelSpec::default(), 100.0).unwrap()
    }

    #[test]
    fn chanspec_fields() {
        let c = Chanspec(0xe02a);
        assert_eq!(c.channel(), 42);
        assert_eq!(c.bandwidth(), Some(Bandwidth::Mhz80));
        assert_eq!(c.band(), Band::Ghz5);
        assert_eq!(Chanspec::default_for(ChannelSpec::default()), c);
        let c = Chanspec(0x1006);
        assert_eq!(c.bandwidth(), Some(Bandwidth::Mhz20));
        assert_eq!(c.band(), Band::Ghz2_4);
        assert_eq!(Chanspec(0x2806).bandwidth(), None);
    }

    #[test]
    fn round_trip() {
        let cap = capture(4, 256);
        let bytes = write_nexmon_pcap(&cap, &PayloadDefaults::default()).unwrap();
        let back = parse_nexmon_pcap(&bytes).unwrap();
        assert_eq!(back.capture, cap);
        assert_eq!(back.skipped, 0);
        assert_eq!(back.first_header.chip, 0x4345);
    }

    #[test]
    fn checksum_verifies() {
        let bytes = write_nexmon_pcap(&capture(1, 64), &PayloadDefaults::default()).unwrap();
        let ip = &bytes[GLOBAL_HEADER_LEN + RECORD_HEADER_LEN + 14..][..20];
        assert_eq!(ip_checksum(ip), 0);
    }

    #[test]
    fn swapped_header_accepted() {
        let mut bytes = write_nexmon_pcap(&capture(2, 64), &PayloadDefaults::default()).unwrap();
        // rewrite every header word big-endian
        for off in [0usize, 16, 20] {
            bytes[off..off + 4].reverse();
        }
        bytes[4..6].reverse();
        bytes[6..8].reverse();
        let mut off = GLOBAL_HEADER_LEN;
        while off < bytes.len() {
            let incl = u32::from_le_bytes(bytes[off + 8..off + 12].try_into().unwrap()) as usize;
            for w in 0..4 {
                bytes[off + 4 * w..off + 4 * w + 4].reverse();
            }
            off += RECORD_HEADER_LEN + incl;
        }
        let back = parse_nexmon_pcap(&bytes).unwrap();
        assert_eq!(back.capture.len(), 2);
    }

    #[test]
    fn out_of_order_records_sorted_stably() {
        let single = |t: f64, seq: u16| {
            let mut frames = capture(1, 64).into_frames();
            frames[0].timestamp = t;
            frames[0].sequence = seq;
            let cap = CsiCapture::new(frames, ChannelSpec::default(), 100.0).unwrap();
            write_nexmon_pcap(&cap, &PayloadDefaults::default()).unwrap()
        };
        let mut bytes = single(1.0, 0);
        bytes.extend_from_slice(&single(0.5, 1)[GLOBAL_HEADER_LEN..]);
        bytes.extend_from_slice(&single(0.5, 2)[GLOBAL_HEADER_LEN..]);
        let back = parse_nexmon_pcap(&bytes).unwrap();
        let seqs: Vec<u16> = back.capture.frames().iter().map(|f| f.sequence).collect();
        assert_eq!(seqs, vec![1, 2, 0]);
    }

    #[test]
    fn mixed_streams_rejected() {
        let cap = capture(2, 64);
        let a = write_nexmon_pcap(&cap, &PayloadDefaults::default()).unwrap();
        let b = write_nexmon_pcap(
            &cap,
            &PayloadDefaults {
                core: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let mut joined = a.clone();
        joined.extend_from_slice(&b[GLOBAL_HEADER_LEN..]);
        assert!(matches!(
            parse_nexmon_pcap(&joined),
            Err(PcapError::MixedStreams { packet: 3, .. })
        ));
    }

    #[test]
    fn mixed_bandwidth_rejected() {
        let a = write_nexmon_pcap(&capture(1, 64), &PayloadDefaults::default()).unwrap();
        let b = write_nexmon_pcap(&capture(1, 256), &PayloadDefaults::default()).unwrap();
        let mut joined = a.clone();
        joined.extend_from_slice(&b[GLOBAL_HEADER_LEN..]);
        assert_eq!(
            parse_nexmon_pcap(&joined),
            Err(PcapError::MixedSubcarrierCount {
                packet: 2,
                expected: 64,
                found: 256
            })
        );
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            parse_nexmon_pcap(b"hello"),
            Err(PcapError::NotAPcap(_))
        ));
        assert!(matches!(
            parse_nexmon_pcap(&[0u8; 24]),
            Err(PcapError::NotAPcap(_))
        ));
        let mut bytes = write_nexmon_pcap(&capture(1, 64), &PayloadDefaults::default()).unwrap();
        bytes[20] = 105;
        assert_eq!(
            parse_nexmon_pcap(&bytes),
            Err(PcapError::UnsupportedLinkType(105))
        );
        bytes.truncate(GLOBAL_HEADER_LEN);
        bytes[20] = 1;
        assert_eq!(
            parse_nexmon_pcap(&bytes),
            Err(PcapError::NoCsiFrames { skipped: 0 })
        );
    }

    #[test]
    fn writer_rejects_fractional_samples() {
        let mut frames = capture(1, 64).into_frames();
        frames[0].subcarriers[3].re = 0.5;
        let cap = CsiCapture::new(frames, ChannelSpec::default(), 100.0).unwrap();
        assert_eq!(
            write_nexmon_pcap(&cap, &PayloadDefaults::default()),
            Err(PcapWriteError::NotRepresentable { frame: 0 })
        );
        assert!(matches!(
            write_nexmon_pcap(&capture(1, 10), &PayloadDefaults::default()),
            Err(PcapWriteError::UnsupportedSubcarrierCount { found: 10 })
        ));
    }
}
