//! Raw capture to clean, uniform-rate gain matrix.
//!
//! Stage order is fixed: amplitudes, linear resample to the source rate,
//! subcarrier pruning, zero-phase low-pass, decimation to the output rate.

mod filter;
mod resample;
mod subcarriers;

use alloc::vec::Vec;
use core::fmt;

pub use filter::{ButterworthLowpass, Section};
pub use resample::{grid_times, resample_linear};
pub use subcarriers::{SubcarrierMap, TABLE_VERSION};

use crate::csi::{amplitudes, CsiCapture};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum PreprocessError {
    TooFewFrames {
        frames: usize,
    },
    DegenerateSpan,
    UnsortedTimestamps,
    ShapeMismatch {
        expected: usize,
        found: usize,
    },
    CutoffAboveNyquist {
        cutoff: f64,
        rate: f64,
    },
    NonIntegerDecimation {
        rate: f64,
        target: f64,
    },
    InvalidRate,
    InvalidFilterOrder,
    NonFinite,
    InvalidMap {
        reason: &'static str,
        index: Option<usize>,
    },
}

impl fmt::Display for PreprocessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use PreprocessError::*;
        match self {
            TooFewFrames { frames } => write!(f, "need at least 2 frames, got {frames}"),
            DegenerateSpan => f.write_str("all timestamps are equal"),
            UnsortedTimestamps => f.write_str("timestamps are not non-decreasing"),
            ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            CutoffAboveNyquist { cutoff, rate } => {
                write!(
                    f,
                    "cutoff {cutoff} Hz is not below Nyquist for rate {rate} Hz"
                )
            }
            NonIntegerDecimation { rate, target } => {
                write!(f, "{rate} Hz is not an integer multiple of {target} Hz")
            }
            InvalidRate => f.write_str("rate must be finite and positive"),
            InvalidFilterOrder => f.write_str("filter order must be at least 1"),
            NonFinite => f.write_str("series contains non-finite values"),
            InvalidMap { reason, index } => match index {
                Some(i) => write!(f, "invalid subcarrier map: {reason} (index {i})"),
                None => write!(f, "invalid subcarrier map: {reason}"),
            },
        }
    }
}

impl core::error::Error for PreprocessError {}

/// Uniformly sampled gains `[N samples × K subcarriers]`. Sample `i` sits
/// at `t0 + i / rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    data: Matrix,
    rate: f64,
    t0: f64,
}

impl AmplitudeSeries {
    /// Requires at least 2 columns, finite entries and a positive rate.
    pub fn new(data: Matrix, rate: f64, t0: f64) -> Result<Self, PreprocessError> {
        if data.cols() < 2 {
            return Err(PreprocessError::ShapeMismatch {
                expected: 2,
                found: data.cols(),
            });
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(PreprocessError::InvalidRate);
        }
        if !data.iter().all(f64::is_finite) || !t0.is_finite() {
            return Err(PreprocessError::NonFinite);
        }
        Ok(AmplitudeSeries { data, rate, t0 })
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Number of samples (rows).
    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    /// Number of subcarriers (columns).
    pub fn width(&self) -> usize {
        self.data.cols()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.rate
    }
}

/// Restricts columns to the map's retained subcarriers.
pub fn prune_subcarriers(
    series: &AmplitudeSeries,
    map: &SubcarrierMap,
) -> Result<AmplitudeSeries, PreprocessError> {
    if series.width() != map.subcarrier_count() {
        return Err(PreprocessError::ShapeMismatch {
            expected: map.subcarrier_count(),
            found: series.width(),
        });
    }
    AmplitudeSeries::new(
        series.data.select_columns(map.retained()),
        series.rate,
        series.t0,
    )
}

/// Zero-phase low-pass of every column with a Butterworth filter of `order`.
pub fn lowpass(
    series: &AmplitudeSeries,
    cutoff: f64,
    order: usize,
) -> Result<AmplitudeSeries, PreprocessError> {
    let filter = ButterworthLowpass::new(order, cutoff, series.rate)?;
    let mut out = series.data.clone();
    for c in 0..out.cols() {
        let col = filter.filtfilt(&series.data.column(c));
        out.set_column(c, &col);
    }
    AmplitudeSeries::new(out, series.rate, series.t0)
}

/// Keeps every `rate / target_rate`-th sample starting at index 0.
pub fn downsample(
    series: &AmplitudeSeries,
    target_rate: f64,
) -> Result<AmplitudeSeries, PreprocessError> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(PreprocessError::InvalidRate);
    }
    let ratio = series.rate / target_rate;
    let step = libm::round(ratio);
    if step < 1.0 || libm::fabs(ratio - step) > 1e-9 * ratio.max(1.0) {
        return Err(PreprocessError::NonIntegerDecimation {
            rate: series.rate,
            target: target_rate,
        });
    }
    AmplitudeSeries::new(
        series.data.select_rows_step(step as usize),
        target_rate,
        series.t0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    /// Uniform rate the raw frames are resampled onto.
    pub source_rate: f64,
    /// Low-pass cutoff. The default equals the output rate, which leaves the
    /// band edge above the output Nyquist frequency; lower it for an
    /// alias-free output.
    pub cutoff: f64,
    pub output_rate: f64,
    pub filter_order: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            source_rate: 100.0,
            cutoff: 10.0,
            output_rate: 10.0,
            filter_order: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Amplitudes,
    Resample,
    Prune,
    Lowpass,
    Downsample,
}

/// Output shape `(rows, cols)` of each stage, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineTrace {
    pub stages: Vec<(Stage, usize, usize)>,
}

impl PipelineTrace {
    fn record(&mut self, stage: Stage, shape: (usize, usize)) {
        self.stages.push((stage, shape.0, shape.1));
    }
}

/// Full preprocessing chain.
pub fn preprocess_pipeline(
    capture: &CsiCapture,
    map: &SubcarrierMap,
    cfg: &PreprocessConfig,
) -> Result<(AmplitudeSeries, PipelineTrace), PreprocessError> {
    if capture.len() < 2 {
        return Err(PreprocessError::TooFewFrames {
            frames: capture.len(),
        });
    }
    let mut trace = PipelineTrace::default();
    let gains = amplitudes(capture);
    trace.record(Stage::Amplitudes, gains.shape());
    let resampled = resample_linear(&gains, &capture.timestamps(), cfg.source_rate)?;
    trace.record(Stage::Resample, resampled.data.shape());
    let pruned = prune_subcarriers(&resampled, map)?;
    trace.record(Stage::Prune, pruned.data.shape());
    let filtered = lowpass(&pruned, cfg.cutoff, cfg.filter_order)?;
    trace.record(Stage::Lowpass, filtered.data.shape());
    let out = downsample(&filtered, cfg.output_rate)?;
    trace.record(Stage::Downsample, out.data.shape());
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::{ChannelSpec, ComplexSample, CsiFrame};
    use alloc::vec;
    use proptest::prelude::*;

    fn series(
        rows: usize,
        cols: usize,
        f: impl Fn(usize, usize) -> f64,
        rate: f64,
    ) -> AmplitudeSeries {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        AmplitudeSeries::new(m, rate, 0.0).unwrap()
    }

    #[test]
    fn prune_vht80() {
        let s = series(3, 256, |r, c| (r * 1000 + c) as f64, 100.0);
        let map = SubcarrierMap::builtin(crate::csi::Bandwidth::Mhz80);
        let p = prune_subcarriers(&s, &map).unwrap();
        assert_eq!(p.width(), 46);
        assert_eq!(p.data().row(1)[0], 1004.0);
        let wrong = series(3, 64, |_, c| c as f64, 100.0);
        assert!(matches!(
            prune_subcarriers(&wrong, &map),
            Err(PreprocessError::ShapeMismatch {
                expected: 256,
                found: 64
            })
        ));
    }

    #[test]
    fn prune_identity() {
        let s = series(4, 5, |r, c| (r + c * c) as f64, 100.0);
        let p = prune_subcarriers(&s, &SubcarrierMap::identity(5).unwrap()).unwrap();
        assert_eq!(p, s);
    }

    #[test]
    fn downsample_examples() {
        let s = series(50, 2, |r, c| (r * 2 + c) as f64, 100.0);
        let d = downsample(&s, 10.0).unwrap();
        assert_eq!(d.len(), 5);
        assert_eq!(d.rate(), 10.0);
        for (i, r) in [0, 10, 20, 30, 40].iter().enumerate() {
            assert_eq!(d.data().row(i), s.data().row(*r));
        }
        assert_eq!(downsample(&s, 100.0).unwrap(), s);
        assert!(matches!(
            downsample(&s, 30.0),
            Err(PreprocessError::NonIntegerDecimation { .. })
        ));
    }

    #[test]
    fn lowpass_constant_and_nyquist() {
        let s = series(120, 3, |_, c| 1.0 + c as f64, 100.0);
        let f = lowpass(&s, 10.0, 5).unwrap();
        for r in 0..120 {
            for c in 0..3 {
                assert!((f.data().get(r, c) - (1.0 + c as f64)).abs() < 1e-12);
            }
        }
        assert!(matches!(
            lowpass(&s, 60.0, 5),
            Err(PreprocessError::CutoffAboveNyquist { .. })
        ));
    }

    fn uniform_capture(frames: usize, s: usize, gain: impl Fn(usize, usize) -> f64) -> CsiCapture {
        let frames = (0..frames)
            .map(|i| CsiFrame {
                timestamp: i as f64 / 100.0,
                subcarriers: (0..s)
                    .map(|k| ComplexSample::new(gain(i, k), 0.0))
                    .collect(),
                source_id: [0; 6],
                sequence: i as u16,
            })
            .collect();
        CsiCapture::new(frames, ChannelSpec::default(), 100.0).unwrap()
    }

    #[test]
    fn pipeline_constant_capture() {
        let cap = uniform_capture(1000, 256, |_, k| 1.0 + (k % 7) as f64);
        let map = SubcarrierMap::builtin(crate::csi::Bandwidth::Mhz80);
        let (out, trace) = preprocess_pipeline(&cap, &map, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.len(), 100);
        assert_eq!(out.width(), 46);
        for (r, row) in out.data().row_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let k = map.retained()[j];
                assert!((v - (1.0 + (k % 7) as f64)).abs() < 1e-9, "row {r} col {j}");
            }
        }
        let stages: Vec<Stage> = trace.stages.iter().map(|s| s.0).collect();
        assert_eq!(
            stages,
            vec![
                Stage::Amplitudes,
                Stage::Resample,
                Stage::Prune,
                Stage::Lowpass,
                Stage::Downsample
            ]
        );
        assert_eq!(trace.stages[1], (Stage::Resample, 1000, 256));
    }

    #[test]
    fn pipeline_rejects_single_frame() {
        let cap = uniform_capture(1, 256, |_, _| 1.0);
        let map = SubcarrierMap::builtin(crate::csi::Bandwidth::Mhz80);
        assert!(matches!(
            preprocess_pipeline(&cap, &map, &PreprocessConfig::default()),
            Err(PreprocessError::TooFewFrames { frames: 1 })
        ));
    }

    proptest! {
        #[test]
        fn lowpass_is_linear(
            xs in proptest::collection::vec(-10.0f64..10.0, 64),
            ys in proptest::collection::vec(-10.0f64..10.0, 64),
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let col = |v: &[f64]| {
                let rows: Vec<[f64; 2]> = v.iter().map(|&x| [x, 0.0]).collect();
                AmplitudeSeries::new(Matrix::from_rows(&rows).unwrap(), 100.0, 0.0).unwrap()
            };
            let mix: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let fx = lowpass(&col(&xs), 10.0, 5).unwrap();
            let fy = lowpass(&col(&ys), 10.0, 5).unwrap();
            let fm = lowpass(&col(&mix), 10.0, 5).unwrap();
            for i in 0..64 {
                let want = a * fx.data().get(i, 0) + b * fy.data().get(i, 0);
                let got = fm.data().get(i, 0);
                prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }

        #[test]
        fn pipeline_output_finite(
            scale_exp in -300i32..300,
            seed in any::<u64>(),
        ) {
            let scale = libm::pow(10.0, scale_exp as f64);
            let cap = uniform_capture(60, 8, |i, k| {
                let h = (seed ^ ((i * 131 + k * 17) as u64)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                scale * ((h >> 11) as f64 / (1u64 << 53) as f64)
            });
            let map = SubcarrierMap::identity(8).unwrap();
            let (out, _) = preprocess_pipeline(&cap, &map, &PreprocessConfig::default()).unwrap();
            prop_assert!(out.data().iter().all(f64::is_finite));
        }
    }
}
