//! Seeded synthetic captures with scripted movement episodes.
//!
//! Movement is modelled as multiplicative per-frame gain noise on a fixed
//! per-subcarrier profile. Outside episodes the noise has standard deviation
//! `noise_floor`. An episode alternates active strokes, where the noise is
//! scaled by the episode intensity, with rests at the floor. Phase is a fixed
//! constant.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::csi::{Band, Bandwidth, ChannelSpec, ComplexSample, CsiCapture, CsiFrame};
use crate::eval::GroundTruth;

const PHASE: f64 = 0.6;
const SOURCE: [u8; 6] = [0x02, 0x00, 0x00, 0x00, 0x00, 0x01];

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    InvalidScript(&'static str),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidScript(why) => write!(f, "invalid synth script: {why}"),
        }
    }
}

impl core::error::Error for SynthError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Episode {
    pub start: f64,
    pub end: f64,
    /// Noise multiplier relative to the floor.
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScript {
    pub duration_s: f64,
    pub sample_rate: f64,
    pub subcarriers: usize,
    pub base_profile: Vec<f64>,
    pub episodes: Vec<Episode>,
    /// Relative standard deviation of the gain noise outside episodes.
    pub noise_floor: f64,
    /// Standard deviation of timestamp perturbation, seconds.
    pub jitter: f64,
    /// Mean length of the alternating stroke and rest segments an episode
    /// is split into, seconds. Zero makes the whole episode one stroke.
    pub gesture_s: f64,
    pub seed: u64,
}

impl SynthScript {
    /// An 80 MHz, 100 Hz script with a seeded multipath-like profile and no
    /// episodes.
    pub fn quiet(duration_s: f64, seed: u64) -> Self {
        SynthScript {
            duration_s,
            sample_rate: 100.0,
            subcarriers: 256,
            base_profile: multipath_profile(256, seed),
            episodes: Vec::new(),
            noise_floor: 0.01,
            jitter: 0.001,
            gesture_s: 0.3,
            seed,
        }
    }

    pub fn with_episode(mut self, start: f64, end: f64, intensity: f64) -> Self {
        self.episodes.push(Episode {
            start,
            end,
            intensity,
        });
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = SynthError::InvalidScript;
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(bad("duration must be positive"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(bad("sample rate must be positive"));
        }
        if self.frame_count() < 2 {
            return Err(bad("script yields fewer than 2 frames"));
        }
        if self.subcarriers < 2 {
            return Err(bad("need at least 2 subcarriers"));
        }
        if self.base_profile.len() != self.subcarriers {
            return Err(bad("base profile length differs from subcarrier count"));
        }
        if !self.base_profile.iter().all(|g| g.is_finite()) {
            return Err(bad("base profile must be finite"));
        }
        if !(self.noise_floor.is_finite() && self.noise_floor >= 0.0) {
            return Err(bad("noise floor must be >= 0"));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(bad("jitter must be >= 0"));
        }
        if !(self.gesture_s.is_finite() && self.gesture_s >= 0.0) {
            return Err(bad("gesture length must be >= 0"));
        }
        for e in &self.episodes {
            if !(e.start >= 0.0 && e.end <= self.duration_s && e.start < e.end) {
                return Err(bad("episode outside [0, duration] or empty"));
            }
            if !(e.intensity.is_finite() && e.intensity >= 0.0) {
                return Err(bad("episode intensity must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        libm::floor(self.duration_s * self.sample_rate + 1e-9) as usize
    }

    /// Stroke segments `(start, end)` for every episode, drawn from a stream
    /// independent of the gain noise and of the intensities.
    fn strokes(&self) -> Vec<Vec<(f64, f64)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6E57_0000_0000_0001);
        self.episodes
            .iter()
            .map(|e| {
                if self.gesture_s == 0.0 {
                    return alloc::vec![(e.start, e.end)];
                }
                let mut segs = Vec::new();
                let mut t = e.start;
                let mut active = true;
                while t < e.end {
                    let len = self.gesture_s * rng.random_range(0.5..1.5);
                    if active {
                        segs.push((t, (t + len).min(e.end)));
                    }
                    t += len;
                    active = !active;
                }
                segs
            })
            .collect()
    }
}

/// Noise multiplier at `t`: the largest intensity among episodes with a
/// stroke covering `t`, or 1 elsewhere.
fn intensity_at(episodes: &[Episode], strokes: &[Vec<(f64, f64)>], t: f64) -> f64 {
    episodes
        .iter()
        .zip(strokes)
        .filter(|(_, segs)| segs.iter().any(|(s, e)| *s <= t && t < *e))
        .map(|(e, _)| e.intensity)
        .reduce(f64::max)
        .unwrap_or(1.0)
}

/// Smooth positive per-subcarrier gain curve: a sum of four seeded cosines
/// around 1.
pub fn multipath_profile(subcarriers: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_CAFE_F00D_0001);
    let components: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            let amp = rng.random_range(0.05..0.2);
            let cycles = rng.random_range(1.0..8.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            (amp, cycles, phase)
        })
        .collect();
    (0..subcarriers)
        .map(|s| {
            let x = s as f64 / subcarriers as f64;
            1.0 + components
                .iter()
                .map(|(a, c, p)| a * libm::cos(2.0 * PI * c * x + p))
                .sum::<f64>()
        })
        .collect()
}

/// Generates the capture and the ground truth mirroring the episodes.
///
/// Random draws happen in a fixed order (per frame: one timestamp draw, then
/// one draw per subcarrier) so scripts that differ only in intensities share
/// the same underlying noise.
pub fn generate(script: &SynthScript) -> Result<(CsiCapture, GroundTruth), SynthError> {
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let (cos, sin) = (libm::cos(PHASE), libm::sin(PHASE));
    let n = script.frame_count();
    let strokes = script.strokes();
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let nominal = i as f64 / script.sample_rate;
        let dz: f64 = rng.sample(StandardNormal);
        let sigma = script.noise_floor * intensity_at(&script.episodes, &strokes, nominal);
        let subcarriers = script
            .base_profile
            .iter()
            .map(|&base| {
                let z: f64 = rng.sample(StandardNormal);
                let g = base * (1.0 + sigma * z);
                ComplexSample::new(g * cos, g * sin)
            })
            .collect();
        frames.push(CsiFrame {
            // clamped so the capture never starts before zero
            timestamp: (nominal + script.jitter * dz).max(0.0),
            subcarriers,
            source_id: SOURCE,
            sequence: (i % 65536) as u16,
        });
    }
    frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));

    let spec = ChannelSpec {
        band: Band::Ghz5,
        bandwidth: Bandwidth::from_subcarriers(script.subcarriers).unwrap_or(Bandwidth::Mhz80),
    };
    let capture = CsiCapture::new(frames, spec, script.sample_rate)
        .map_err(|_| SynthError::InvalidScript("generated capture is invalid"))?;
    let episodes: Vec<(f64, f64)> = script.episodes.iter().map(|e| (e.start, e.end)).collect();
    let gt = GroundTruth::from_episodes(script.duration_s, &episodes)
        .map_err(|_| SynthError::InvalidScript("episodes do not form a ground truth"))?;
    Ok((capture, gt))
}
