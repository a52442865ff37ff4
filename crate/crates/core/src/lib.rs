//! Self-calibrating movement detection from WiFi channel state information.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numeric
//! pipeline:
//!
//! * [`csi`]: capture data model and amplitude extraction.
//! * [`preprocess`]: linear resampling, subcarrier pruning, zero-phase
//!   Butterworth low-pass and decimation.
//! * [`correlation`]: adjacent-frame Pearson correlation and the STI
//!   transform.
//! * [`detector`]: empty-room calibration, the contains-movement gate,
//!   running variance and sliding variance analysis.
//! * [`eval`]: interval ground truth, per-sample accuracy and PIR scoring.
//! * [`synth`]: seeded synthetic captures with scripted movement episodes.
//!
//! Parsing of capture files, persistence and the command line live in the
//! `csimotion` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(a < b)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod correlation;
pub mod csi;
pub mod detector;
mod error;
pub mod eval;
pub mod matrix;
pub mod preprocess;
pub mod synth;

pub use correlation::{pcc_pair, pcc_series, sti, PccSeries};
pub use csi::{amplitudes, Band, Bandwidth, ChannelSpec, ComplexSample, CsiCapture, CsiFrame};
pub use detector::{
    calibrate, contains_movement, detect, running_variance, set_initial_state,
    sliding_variance_analysis, CalibrationProfile, Detection, DetectorConfig, MovementMask,
};
pub use error::Error;
pub use eval::{rasterize, score, score_pir, AccuracyReport, GroundTruth, Interval, Label};
pub use matrix::Matrix;
pub use preprocess::{preprocess_pipeline, AmplitudeSeries, PreprocessConfig, SubcarrierMap};
