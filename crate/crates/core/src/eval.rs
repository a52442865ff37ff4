//! Scoring movement masks against interval ground truth.
//!
//! Accuracy is correct samples over compared samples at 10 Hz. The literal
//! correct-to-incorrect ratio is reported alongside.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::csi::CsiCapture;
use crate::detector::{detect, CalibrationProfile, DetectorConfig, MovementMask};
use crate::error::Error;
use crate::preprocess::{PreprocessConfig, SubcarrierMap};

/// Rate at which masks and ground truth are compared.
pub const SCORING_RATE: f64 = 10.0;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// Intervals leave a hole, overlap, or do not start at 0.
    GapInGroundTruth {
        at: f64,
    },
    OverlappingIntervals {
        at: f64,
    },
    InvalidInterval {
        index: usize,
    },
    EmptyGroundTruth,
    RateMismatch {
        expected: f64,
        found: f64,
    },
    UnsortedEvents {
        index: usize,
    },
    NothingToCompare,
    InvalidRate,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::GapInGroundTruth { at } => write!(f, "ground truth has a gap at {at} s"),
            EvalError::OverlappingIntervals { at } => {
                write!(f, "ground truth intervals overlap at {at} s")
            }
            EvalError::InvalidInterval { index } => {
                write!(f, "interval {index} has end <= start")
            }
            EvalError::EmptyGroundTruth => f.write_str("ground truth has no intervals"),
            EvalError::RateMismatch { expected, found } => {
                write!(f, "mask rate {found} Hz, scoring requires {expected} Hz")
            }
            EvalError::UnsortedEvents { index } => {
                write!(f, "PIR event {index} is earlier than its predecessor")
            }
            EvalError::NothingToCompare => f.write_str("mask or ground truth is empty"),
            EvalError::InvalidRate => f.write_str("rate must be finite and positive"),
        }
    }
}

impl core::error::Error for EvalError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Moving,
    Still,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Moving => "moving",
            Label::Still => "still",
        }
    }

    pub fn is_moving(self) -> bool {
        self == Label::Moving
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub label: Label,
}

impl Interval {
    pub fn new(start: f64, end: f64, label: Label) -> Self {
        Interval { start, end, label }
    }
}

/// Contiguous labelled intervals covering `[0, total_duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    intervals: Vec<Interval>,
    total_duration: f64,
}

impl GroundTruth {
    pub fn new(intervals: Vec<Interval>) -> Result<Self, EvalError> {
        let first = intervals.first().ok_or(EvalError::EmptyGroundTruth)?;
        if first.start.abs() > TIME_EPS {
            return Err(if first.start > 0.0 {
                EvalError::GapInGroundTruth { at: 0.0 }
            } else {
                EvalError::InvalidInterval { index: 0 }
            });
        }
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.end > iv.start) || !iv.end.is_finite() {
                return Err(EvalError::InvalidInterval { index: i });
            }
        }
        for pair in intervals.windows(2) {
            let (prev, next) = (pair[0], pair[1]);
            if next.start > prev.end + TIME_EPS {
                return Err(EvalError::GapInGroundTruth { at: prev.end });
            }
            if next.start < prev.end - TIME_EPS {
                return Err(EvalError::OverlappingIntervals { at: next.start });
            }
        }
        let total_duration = intervals[intervals.len() - 1].end;
        Ok(GroundTruth {
            intervals,
            total_duration,
        })
    }

    /// Builds a truth from moving episodes inside `[0, duration]`; the rest
    /// is still.
    pub fn from_episodes(duration: f64, episodes: &[(f64, f64)]) -> Result<Self, EvalError> {
        let mut eps: Vec<(f64, f64)> = episodes
            .iter()
            .map(|&(s, e)| (s.max(0.0), e.min(duration)))
            .filter(|(s, e)| e > s)
            .collect();
        eps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (s, e) in eps {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        let mut intervals = Vec::new();
        let mut t = 0.0;
        for (s, e) in merged {
            if s > t {
                intervals.push(Interval::new(t, s, Label::Still));
            }
            intervals.push(Interval::new(s, e, Label::Moving));
            t = e;
        }
        if duration > t {
            intervals.push(Interval::new(t, duration, Label::Still));
        }
        GroundTruth::new(intervals)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }
}

fn boundary_index(t: f64, rate: f64) -> usize {
    libm::ceil(t * rate - TIME_EPS).max(0.0) as usize
}

/// One label per sample at `i / rate` for `i` in `[0, ceil(total·rate))`.
/// A sample exactly on a boundary belongs to the later interval.
pub fn rasterize(gt: &GroundTruth, rate: f64) -> Result<Vec<bool>, EvalError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(EvalError::InvalidRate);
    }
    let n = boundary_index(gt.total_duration, rate);
    let mut out = Vec::with_capacity(n);
    for iv in &gt.intervals {
        let end = boundary_index(iv.end, rate).min(n);
        while out.len() < end {
            out.push(iv.label.is_moving());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalScore {
    pub interval: Interval,
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    /// `correct / total`.
    pub accuracy: f64,
    pub correct_samples: usize,
    pub total_samples: usize,
    /// `correct / incorrect`; `None` when nothing is wrong.
    pub correct_to_incorrect: Option<f64>,
    pub per_interval: Vec<IntervalScore>,
    /// Seconds from each still-to-moving boundary to the first moving
    /// verdict inside that interval; `None` when it is never detected.
    pub onset_latency_s: Vec<Option<f64>>,
    /// Samples dropped from the longer of mask and ground truth.
    pub trimmed_samples: usize,
}

/// Compares `predicted` against rasterised truth sample by sample.
fn compare(predicted: &[bool], gt: &GroundTruth, rate: f64) -> Result<AccuracyReport, EvalError> {
    let truth = rasterize(gt, rate)?;
    let n = predicted.len().min(truth.len());
    if n == 0 {
        return Err(EvalError::NothingToCompare);
    }
    let trimmed = predicted.len().max(truth.len()) - n;
    let correct = (0..n).filter(|&i| predicted[i] == truth[i]).count();
    let incorrect = n - correct;

    let mut per_interval = Vec::with_capacity(gt.intervals.len());
    let mut onset = Vec::new();
    for (k, iv) in gt.intervals.iter().enumerate() {
        let lo = boundary_index(iv.start, rate).min(n);
        let hi = boundary_index(iv.end, rate).min(n);
        let ok = (lo..hi).filter(|&i| predicted[i] == truth[i]).count();
        per_interval.push(IntervalScore {
            interval: *iv,
            correct: ok,
            total: hi - lo,
        });
        if k > 0 && iv.label.is_moving() && !gt.intervals[k - 1].label.is_moving() {
            let first = (lo..hi).find(|&i| predicted[i]);
            onset.push(first.map(|i| (i - lo) as f64 / rate));
        }
    }
    Ok(AccuracyReport {
        accuracy: correct as f64 / n as f64,
        correct_samples: correct,
        total_samples: n,
        correct_to_incorrect: (incorrect > 0).then(|| correct as f64 / incorrect as f64),
        per_interval,
        onset_latency_s: onset,
        trimmed_samples: trimmed,
    })
}

/// Scores a 10 Hz mask. Mask sample `i` is compared with truth at `i / 10`
/// seconds from capture start; the longer side is truncated.
pub fn score(mask: &MovementMask, gt: &GroundTruth) -> Result<AccuracyReport, EvalError> {
    if libm::fabs(mask.rate - SCORING_RATE) > TIME_EPS {
        return Err(EvalError::RateMismatch {
            expected: SCORING_RATE,
            found: mask.rate,
        });
    }
    compare(&mask.values, gt, SCORING_RATE)
}

/// A PIR output transition, seconds from capture start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PirEvent {
    pub t: f64,
    pub state: bool,
}

/// Hold-last-state rasterisation of PIR events, starting inactive.
pub fn pir_mask(events: &[PirEvent], samples: usize, rate: f64) -> Result<MovementMask, EvalError> {
    if let Some(i) = events.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(EvalError::UnsortedEvents { index: i + 1 });
    }
    let mut values = Vec::with_capacity(samples);
    let mut next = 0;
    let mut state = false;
    for i in 0..samples {
        let t = i as f64 / rate;
        while next < events.len() && events[next].t <= t + TIME_EPS {
            state = events[next].state;
            next += 1;
        }
        values.push(state);
    }
    Ok(MovementMask::new(values, 0.0, rate))
}

/// Scores a PIR trace the same way as [`score`].
pub fn score_pir(events: &[PirEvent], gt: &GroundTruth) -> Result<AccuracyReport, EvalError> {
    let samples = boundary_index(gt.total_duration, SCORING_RATE);
    let mask = pir_mask(events, samples, SCORING_RATE)?;
    score(&mask, gt)
}

/// Scores of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunScores {
    pub csi: AccuracyReport,
    pub pir: Option<AccuracyReport>,
    pub mask: MovementMask,
}

/// One run in a batch: identifying name, movement type and the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub name: String,
    pub movement: String,
    pub outcome: Result<RunScores, String>,
}

pub struct EvalRun<'a> {
    pub name: String,
    pub movement: String,
    pub capture: &'a CsiCapture,
    pub gt: &'a GroundTruth,
    pub pir: Option<&'a [PirEvent]>,
}

/// Detection plus CSI and optional PIR scoring for one capture.
pub fn evaluate_run(
    capture: &CsiCapture,
    gt: &GroundTruth,
    pir: Option<&[PirEvent]>,
    profile: &CalibrationProfile,
    cfg: &DetectorConfig,
    map: &SubcarrierMap,
    preprocess: &PreprocessConfig,
) -> Result<RunScores, Error> {
    let detection = detect(capture, profile, cfg, map, preprocess)?;
    let csi = score(&detection.mask, gt)?;
    let pir = pir.map(|ev| score_pir(ev, gt)).transpose()?;
    Ok(RunScores {
        csi,
        pir,
        mask: detection.mask,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovementSummary {
    pub movement: String,
    pub runs: usize,
    pub failed: usize,
    pub csi_mean: Option<f64>,
    pub pir_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    /// Sorted by movement label.
    pub per_movement: Vec<MovementSummary>,
    pub csi_mean: Option<f64>,
    pub pir_mean: Option<f64>,
    pub scored: usize,
    pub failed: usize,
}

/// Order-independent mean: values are summed in sorted order.
fn stable_mean(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-movement and overall mean accuracies over the successful runs.
pub fn summarize(results: &[RunResult]) -> BatchSummary {
    #[derive(Default)]
    struct Acc {
        runs: usize,
        failed: usize,
        csi: Vec<f64>,
        pir: Vec<f64>,
    }
    let mut groups: BTreeMap<&str, Acc> = BTreeMap::new();
    let (mut all_csi, mut all_pir) = (Vec::new(), Vec::new());
    for r in results {
        let g = groups.entry(r.movement.as_str()).or_default();
        g.runs += 1;
        match &r.outcome {
            Ok(s) => {
                g.csi.push(s.csi.accuracy);
                all_csi.push(s.csi.accuracy);
                if let Some(p) = &s.pir {
                    g.pir.push(p.accuracy);
                    all_pir.push(p.accuracy);
                }
            }
            Err(_) => g.failed += 1,
        }
    }
    let failed = groups.values().map(|g| g.failed).sum();
    let per_movement = groups
        .into_iter()
        .map(|(m, mut g)| MovementSummary {
            movement: m.to_string(),
            runs: g.runs,
            failed: g.failed,
            csi_mean: stable_mean(&mut g.csi),
            pir_mean: stable_mean(&mut g.pir),
        })
        .collect();
    BatchSummary {
        per_movement,
        scored: all_csi.len(),
        csi_mean: stable_mean(&mut all_csi),
        pir_mean: stable_mean(&mut all_pir),
        failed,
    }
}

/// Evaluates every run, recording failures instead of stopping, then
/// summarises.
pub fn batch_evaluate(
    runs: &[EvalRun<'_>],
    profile: &CalibrationProfile,
    cfg: &DetectorConfig,
    map: &SubcarrierMap,
    preprocess: &PreprocessConfig,
) -> (Vec<RunResult>, BatchSummary) {
    let results: Vec<RunResult> = runs
        .iter()
        .map(|r| RunResult {
            name: r.name.clone(),
            movement: r.movement.clone(),
            outcome: evaluate_run(r.capture, r.gt, r.pir, profile, cfg, map, preprocess)
                .map_err(|e| e.to_string()),
        })
        .collect();
    let summary = summarize(&results);
    (results, summary)
}
