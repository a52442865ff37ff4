//! Self-calibrating movement detection on the PCC series.
//!
//! Empty-room captures give a `containsmovement` threshold. A capture whose
//! windowed PCC never drops below it is declared still. Otherwise a running
//! variance of the PCC is normalised by its maximum and fed through a
//! two-threshold sliding-window comparison that yields one movement verdict
//! per PCC sample.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::correlation::{pcc_series, PccSeries};
use crate::csi::CsiCapture;
use crate::error::Error;
use crate::preprocess::{preprocess_pipeline, PipelineTrace, PreprocessConfig, SubcarrierMap};

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorError {
    EmptyCalibrationSet,
    EmptySeries,
    WindowTooLarge { window: usize, len: usize },
    InputTooShort { needed: usize, len: usize },
    InvalidConfig(&'static str),
}

impl fmt::Display for DetectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorError::EmptyCalibrationSet => f.write_str("no calibration captures given"),
            DetectorError::EmptySeries => f.write_str("PCC series is empty"),
            DetectorError::WindowTooLarge { window, len } => {
                write!(f, "window {window} exceeds series length {len}")
            }
            DetectorError::InputTooShort { needed, len } => {
                write!(f, "need at least {needed} samples, got {len}")
            }
            DetectorError::InvalidConfig(why) => write!(f, "invalid detector config: {why}"),
        }
    }
}

impl core::error::Error for DetectorError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Normalised window-mean difference that starts a movement period.
    pub mov_threshold: f64,
    /// Normalised window-mean difference below which movement ends.
    pub nomov_threshold: f64,
    /// Samples per comparison window (5 at 10 Hz is half a second).
    pub window_size: usize,
    /// Samples per running-variance window.
    pub variance_window: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            mov_threshold: 0.15,
            nomov_threshold: 0.05,
            window_size: 5,
            variance_window: 10,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        if !(self.nomov_threshold > 0.0) {
            return Err(DetectorError::InvalidConfig("nomov_threshold must be > 0"));
        }
        if !(self.nomov_threshold < self.mov_threshold) {
            return Err(DetectorError::InvalidConfig(
                "nomov_threshold must be below mov_threshold",
            ));
        }
        if !(self.mov_threshold < 1.0) {
            return Err(DetectorError::InvalidConfig("mov_threshold must be < 1"));
        }
        if self.window_size < 1 {
            return Err(DetectorError::InvalidConfig("window_size must be >= 1"));
        }
        if self.variance_window < 2 {
            return Err(DetectorError::InvalidConfig("variance_window must be >= 2"));
        }
        Ok(())
    }

    /// Shortest PCC series that can run the full variance analysis.
    pub fn min_pcc_len(&self) -> usize {
        self.variance_window + 2 * self.window_size - 1
    }

    /// Offset from a variance-analysis index to the PCC sample it is
    /// reported at: the middle of the `min_pcc_len` PCC samples that the
    /// comparison at that index reads.
    pub fn verdict_lead(&self) -> usize {
        self.min_pcc_len() / 2
    }
}

/// Empty-room statistics for one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    containsmovement_threshold: f64,
    per_capture_means: Vec<f64>,
    per_capture_ranges: Vec<f64>,
    /// Unix seconds, when known.
    pub created_at: Option<u64>,
    pub environment_label: String,
}

impl CalibrationProfile {
    /// Threshold `mean(means) − 2·mean(ranges)`.
    pub fn from_statistics(
        means: Vec<f64>,
        ranges: Vec<f64>,
        environment_label: impl Into<String>,
    ) -> Result<Self, DetectorError> {
        if means.is_empty() || means.len() != ranges.len() {
            return Err(DetectorError::EmptyCalibrationSet);
        }
        let n = means.len() as f64;
        let threshold = means.iter().sum::<f64>() / n - 2.0 * ranges.iter().sum::<f64>() / n;
        Ok(CalibrationProfile {
            containsmovement_threshold: threshold,
            per_capture_means: means,
            per_capture_ranges: ranges,
            created_at: None,
            environment_label: environment_label.into(),
        })
    }

    /// A profile with a fixed threshold and no supporting statistics, for
    /// explicit overrides.
    pub fn manual(threshold: f64, environment_label: impl Into<String>) -> Self {
        CalibrationProfile {
            containsmovement_threshold: threshold,
            per_capture_means: Vec::new(),
            per_capture_ranges: Vec::new(),
            created_at: None,
            environment_label: environment_label.into(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.containsmovement_threshold
    }

    pub fn per_capture_means(&self) -> &[f64] {
        &self.per_capture_means
    }

    pub fn per_capture_ranges(&self) -> &[f64] {
        &self.per_capture_ranges
    }

    pub fn captures(&self) -> usize {
        self.per_capture_means.len()
    }
}

/// Builds a profile from PCC series of movement-free captures.
pub fn calibrate(
    empty_room: &[PccSeries],
    environment_label: &str,
) -> Result<CalibrationProfile, DetectorError> {
    if empty_room.is_empty() {
        return Err(DetectorError::EmptyCalibrationSet);
    }
    if empty_room.iter().any(PccSeries::is_empty) {
        return Err(DetectorError::EmptySeries);
    }
    let means = empty_room.iter().map(PccSeries::mean).collect();
    let ranges = empty_room.iter().map(PccSeries::range).collect();
    CalibrationProfile::from_statistics(means, ranges, environment_label)
}

fn window_means(values: &[f64], window: usize) -> impl Iterator<Item = f64> + '_ {
    let w = window.clamp(1, values.len().max(1));
    values
        .windows(w)
        .map(move |win| win.iter().sum::<f64>() / w as f64)
}

/// True when some `window`-sample mean of the PCC falls below the profile
/// threshold. Series shorter than the window are averaged as a whole.
pub fn contains_movement(pcc: &PccSeries, profile: &CalibrationProfile, window: usize) -> bool {
    window_means(pcc.values(), window).any(|m| m < profile.threshold())
}

/// Starting state for the variance analysis: moving when the first window
/// of PCC already sits below the calibration threshold.
pub fn set_initial_state(
    pcc: &PccSeries,
    profile: &CalibrationProfile,
    cfg: &DetectorConfig,
) -> Result<bool, DetectorError> {
    let w = cfg.window_size;
    if w == 0 || pcc.len() < w {
        return Err(DetectorError::InputTooShort {
            needed: w.max(1),
            len: pcc.len(),
        });
    }
    let mean = pcc.values()[..w].iter().sum::<f64>() / w as f64;
    Ok(mean < profile.threshold())
}

/// Population variance of every length-`window` slice, `len − window + 1`
/// values.
///
/// Streams a Welford-style add/remove update while tracking a bound on the
/// rounding error it has accumulated. Whenever that bound exceeds a small
/// fraction of the running sum of squares the window is recomputed from
/// scratch, so results stay relatively accurate even when the variance
/// collapses (a constant window gives exactly 0).
pub fn running_variance(values: &[f64], window: usize) -> Result<Vec<f64>, DetectorError> {
    const TOLERANCE: f64 = 1e-12;
    if window == 0 || window > values.len() {
        return Err(DetectorError::WindowTooLarge {
            window,
            len: values.len(),
        });
    }
    let w = window as f64;
    let eps = f64::EPSILON;
    // shifted by the window's first value so constant runs give exactly 0
    let exact = |win: &[f64]| {
        let shift = win[0];
        let dmean = win.iter().map(|v| v - shift).sum::<f64>() / w;
        let m2 = win
            .iter()
            .map(|v| (v - shift - dmean) * (v - shift - dmean))
            .sum::<f64>();
        (shift + dmean, m2)
    };
    let count = values.len() - window + 1;
    let mut out = Vec::with_capacity(count);
    let (mut mean, mut m2) = exact(&values[..window]);
    // absolute error bounds on `mean` and `m2`
    let (mut mean_err, mut m2_err) = (2.0 * w * eps * libm::fabs(mean), 0.0);
    out.push(m2 / w);
    for i in 1..count {
        let old = values[i - 1];
        let new = values[i + window - 1];
        let delta = new - old;
        let next_mean = mean + delta / w;
        let next_mean_err = mean_err + 2.0 * eps * (libm::fabs(next_mean) + libm::fabs(delta) / w);
        let a = new - next_mean;
        let b = old - mean;
        m2 += delta * (a + b);
        m2_err += libm::fabs(delta) * (next_mean_err + mean_err)
            + 4.0 * eps * (libm::fabs(delta) * (libm::fabs(a) + libm::fabs(b)) + libm::fabs(m2));
        mean = next_mean;
        mean_err = next_mean_err;
        if m2 <= 0.0 || m2_err > TOLERANCE * m2 {
            (mean, m2) = exact(&values[i..i + window]);
            mean_err = 2.0 * w * eps * libm::fabs(mean);
            m2_err = 0.0;
        }
        out.push(m2 / w);
    }
    Ok(out)
}

/// Two-window hysteresis over a variance series.
///
/// The series is divided by its maximum. For each `i` with a full pair of
/// windows, `diff = |mean(v[i..i+w]) − mean(v[i+w..i+2w])|`; the state turns
/// moving when `diff > mov_threshold` and turns still when
/// `diff < nomov_threshold`. The last `2w − 1` positions repeat the final
/// state. An all-zero series yields no movement.
pub fn sliding_variance_analysis(
    variance: &[f64],
    cfg: &DetectorConfig,
    initial_moving: bool,
) -> Result<Vec<bool>, DetectorError> {
    let w = cfg.window_size;
    let len = variance.len();
    if w == 0 || len < 2 * w {
        return Err(DetectorError::InputTooShort {
            needed: 2 * w.max(1),
            len,
        });
    }
    let max = variance.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(max > 0.0) {
        return Ok(vec![false; len]);
    }
    let norm: Vec<f64> = variance.iter().map(|v| v / max).collect();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / w as f64;

    let mut out = vec![false; len];
    let mut moving = initial_moving;
    let last = len - 2 * w;
    for i in 0..=last {
        let diff = libm::fabs(mean(&norm[i..i + w]) - mean(&norm[i + w..i + 2 * w]));
        moving = if moving {
            !(diff < cfg.nomov_threshold)
        } else {
            diff > cfg.mov_threshold
        };
        out[i] = moving;
    }
    for v in &mut out[last + 1..] {
        *v = moving;
    }
    Ok(out)
}

/// Binary movement verdicts; sample `i` sits at `t0 + i / rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovementMask {
    pub values: Vec<bool>,
    pub t0: f64,
    pub rate: f64,
}

impl MovementMask {
    pub fn new(values: Vec<bool>, t0: f64, rate: f64) -> Self {
        MovementMask { values, t0, rate }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.rate
    }

    pub fn moving_samples(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }

    pub fn moving_seconds(&self) -> f64 {
        self.moving_samples() as f64 / self.rate
    }

    /// Inclusive-exclusive index ranges of consecutive moving samples.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut segs = Vec::new();
        let mut start = None;
        for (i, &v) in self.values.iter().enumerate() {
            match (v, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    segs.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            segs.push((s, self.values.len()));
        }
        segs
    }

    pub fn negated(&self) -> MovementMask {
        MovementMask {
            values: self.values.iter().map(|v| !v).collect(),
            t0: self.t0,
            rate: self.rate,
        }
    }
}

/// Everything [`detect`] computed on the way to the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub mask: MovementMask,
    pub pcc: PccSeries,
    /// Running variance of the PCC, absent when the gate rejected the
    /// capture.
    pub variance: Option<Vec<f64>>,
    pub contains_movement: bool,
    pub initial_moving: bool,
    pub subcarriers: usize,
    pub trace: PipelineTrace,
}

/// Places the variance-analysis verdicts on the PCC timeline, one per PCC
/// sample. The first `lead` samples take the initial state, the tail takes
/// the final one.
fn align_to_pcc(states: &[bool], pcc_len: usize, lead: usize, initial: bool) -> Vec<bool> {
    let mut out = Vec::with_capacity(pcc_len);
    out.resize(lead.min(pcc_len), initial);
    let take = states.len().min(pcc_len - out.len());
    out.extend_from_slice(&states[..take]);
    let fill = states.last().copied().unwrap_or(false);
    out.resize(pcc_len, fill);
    out
}

/// Capture to movement mask: preprocessing, PCC, gate, running variance,
/// sliding variance analysis.
pub fn detect(
    capture: &CsiCapture,
    profile: &CalibrationProfile,
    cfg: &DetectorConfig,
    map: &SubcarrierMap,
    preprocess: &PreprocessConfig,
) -> Result<Detection, Error> {
    cfg.validate()?;
    let (series, trace) = preprocess_pipeline(capture, map, preprocess)?;
    let pcc = pcc_series(&series)?;
    let gated = contains_movement(&pcc, profile, cfg.window_size);
    let initial = pcc.len() >= cfg.window_size && set_initial_state(&pcc, profile, cfg)?;
    let mut detection = Detection {
        mask: MovementMask::new(vec![false; pcc.len()], pcc.t0(), pcc.rate()),
        variance: None,
        contains_movement: gated,
        initial_moving: initial,
        subcarriers: series.width(),
        trace,
        pcc,
    };
    if !gated {
        return Ok(detection);
    }
    let needed = cfg.min_pcc_len();
    if detection.pcc.len() < needed {
        return Err(DetectorError::InputTooShort {
            needed,
            len: detection.pcc.len(),
        }
        .into());
    }
    let variance = running_variance(detection.pcc.values(), cfg.variance_window)?;
    let states = sliding_variance_analysis(&variance, cfg, initial)?;
    detection.mask.values = align_to_pcc(&states, detection.pcc.len(), cfg.verdict_lead(), initial);
    detection.variance = Some(variance);
    Ok(detection)
}
