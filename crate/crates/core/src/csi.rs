//! CSI capture data model.
//!
//! A capture is a single transmit/receive pair: each frame holds one complex
//! channel estimate per OFDM subcarrier. Only the gain `|h_s|` is used past
//! [`amplitudes`]; phase is kept on the samples but never propagated.

use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;

/// One complex channel estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexSample {
    pub re: f64,
    pub im: f64,
}

impl ComplexSample {
    pub const fn new(re: f64, im: f64) -> Self {
        ComplexSample { re, im }
    }

    /// Gain `sqrt(re² + im²)`.
    pub fn amplitude(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    pub fn phase(&self) -> f64 {
        libm::atan2(self.im, self.re)
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Frequency band of the capture channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Ghz2_4,
    Ghz5,
}

impl Band {
    /// Band as written in text headers (`2.4` or `5`).
    pub fn label(self) -> &'static str {
        match self {
            Band::Ghz2_4 => "2.4",
            Band::Ghz5 => "5",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "2.4" | "2" => Some(Band::Ghz2_4),
            "5" => Some(Band::Ghz5),
            _ => None,
        }
    }
}

/// Channel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bandwidth {
    Mhz20,
    Mhz40,
    Mhz80,
}

impl Bandwidth {
    pub fn mhz(self) -> u32 {
        match self {
            Bandwidth::Mhz20 => 20,
            Bandwidth::Mhz40 => 40,
            Bandwidth::Mhz80 => 80,
        }
    }

    pub fn from_mhz(mhz: u32) -> Option<Self> {
        match mhz {
            20 => Some(Bandwidth::Mhz20),
            40 => Some(Bandwidth::Mhz40),
            80 => Some(Bandwidth::Mhz80),
            _ => None,
        }
    }

    /// FFT bins reported for this bandwidth.
    pub fn subcarriers(self) -> usize {
        match self {
            Bandwidth::Mhz20 => 64,
            Bandwidth::Mhz40 => 128,
            Bandwidth::Mhz80 => 256,
        }
    }

    pub fn from_subcarriers(s: usize) -> Option<Self> {
        match s {
            64 => Some(Bandwidth::Mhz20),
            128 => Some(Bandwidth::Mhz40),
            256 => Some(Bandwidth::Mhz80),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelSpec {
    pub band: Band,
    pub bandwidth: Bandwidth,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            band: Band::Ghz5,
            bandwidth: Bandwidth::Mhz80,
        }
    }
}

/// One CSI measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiFrame {
    /// Seconds since the capture epoch.
    pub timestamp: f64,
    pub subcarriers: Vec<ComplexSample>,
    /// Transmitter MAC address.
    pub source_id: [u8; 6],
    pub sequence: u16,
}

/// Errors raised when assembling a [`CsiCapture`].
#[derive(Debug, Clone, PartialEq)]
pub enum CaptureError {
    NoCsiFrames,
    EmptyFrame,
    MixedSubcarrierCount {
        frame: usize,
        expected: usize,
        found: usize,
    },
    NonMonotonicTimestamps {
        frame: usize,
    },
    NonFinite {
        frame: usize,
    },
    InvalidRate,
}

impl fmt::Display for CaptureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaptureError::NoCsiFrames => f.write_str("capture contains no CSI frames"),
            CaptureError::EmptyFrame => f.write_str("frame has zero subcarriers"),
            CaptureError::MixedSubcarrierCount {
                frame,
                expected,
                found,
            } => write!(
                f,
                "frame {frame} has {found} subcarriers, capture started with {expected}"
            ),
            CaptureError::NonMonotonicTimestamps { frame } => {
                write!(f, "timestamp of frame {frame} precedes its predecessor")
            }
            CaptureError::NonFinite { frame } => {
                write!(f, "frame {frame} contains a non-finite value")
            }
            CaptureError::InvalidRate => f.write_str("nominal rate must be finite and positive"),
        }
    }
}

impl core::error::Error for CaptureError {}

/// A validated sequence of frames sharing one subcarrier count.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiCapture {
    frames: Vec<CsiFrame>,
    channel_spec: ChannelSpec,
    nominal_rate: f64,
}

impl CsiCapture {
    /// Nominal source rate when none is known.
    pub const DEFAULT_RATE: f64 = 100.0;

    /// Validates the frame list: nonempty, uniform nonzero subcarrier count,
    /// finite values, non-decreasing timestamps.
    pub fn new(
        frames: Vec<CsiFrame>,
        channel_spec: ChannelSpec,
        nominal_rate: f64,
    ) -> Result<Self, CaptureError> {
        if !(nominal_rate.is_finite() && nominal_rate > 0.0) {
            return Err(CaptureError::InvalidRate);
        }
        let first = frames.first().ok_or(CaptureError::NoCsiFrames)?;
        let s = first.subcarriers.len();
        if s == 0 {
            return Err(CaptureError::EmptyFrame);
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, frame) in frames.iter().enumerate() {
            if frame.subcarriers.len() != s {
                return Err(CaptureError::MixedSubcarrierCount {
                    frame: i,
                    expected: s,
                    found: frame.subcarriers.len(),
                });
            }
            if !frame.timestamp.is_finite() || !frame.subcarriers.iter().all(|c| c.is_finite()) {
                return Err(CaptureError::NonFinite { frame: i });
            }
            if frame.timestamp < prev {
                return Err(CaptureError::NonMonotonicTimestamps { frame: i });
            }
            prev = frame.timestamp;
        }
        Ok(CsiCapture {
            frames,
            channel_spec,
            nominal_rate,
        })
    }

    pub fn frames(&self) -> &[CsiFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<CsiFrame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn subcarrier_count(&self) -> usize {
        self.frames[0].subcarriers.len()
    }

    pub fn channel_spec(&self) -> ChannelSpec {
        self.channel_spec
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    /// Last minus first timestamp in seconds.
    pub fn duration(&self) -> f64 {
        self.frames[self.frames.len() - 1].timestamp - self.frames[0].timestamp
    }

    /// Mean frame rate estimated from the timestamp span, `None` for a
    /// zero-length span.
    pub fn estimated_rate(&self) -> Option<f64> {
        let span = self.duration();
        (span > 0.0).then(|| (self.frames.len() - 1) as f64 / span)
    }
}

/// Gain matrix `[frames × S]`, entry `(i, s) = |h_s|` of frame `i`.
pub fn amplitudes(capture: &CsiCapture) -> Matrix {
    let s = capture.subcarrier_count();
    let mut m = Matrix::zeros(capture.len(), s);
    for (i, frame) in capture.frames().iter().enumerate() {
        for (dst, c) in m.row_mut(i).iter_mut().zip(&frame.subcarriers) {
            *dst = c.amplitude();
        }
    }
    m
}
