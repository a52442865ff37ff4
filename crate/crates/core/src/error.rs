use core::fmt;

use crate::correlation::CorrelationError;
use crate::csi::CaptureError;
use crate::detector::DetectorError;
use crate::eval::EvalError;
use crate::preprocess::PreprocessError;
use crate::synth::SynthError;

/// Any error raised by the pipeline stages.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Capture(CaptureError),
    Preprocess(PreprocessError),
    Correlation(CorrelationError),
    Detector(DetectorError),
    Eval(EvalError),
    Synth(SynthError),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Capture(e) => e.fmt(f),
            Error::Preprocess(e) => e.fmt(f),
            Error::Correlation(e) => e.fmt(f),
            Error::Detector(e) => e.fmt(f),
            Error::Eval(e) => e.fmt(f),
            Error::Synth(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(match self {
            Error::Capture(e) => e,
            Error::Preprocess(e) => e,
            Error::Correlation(e) => e,
            Error::Detector(e) => e,
            Error::Eval(e) => e,
            Error::Synth(e) => e,
        })
    }
}

macro_rules! from_stage {
    ($($variant:ident($ty:ty)),* $(,)?) => {
        $(impl From<$ty> for Error {
            fn from(e: $ty) -> Self {
                Error::$variant(e)
            }
        })*
    };
}

from_stage!(
    Capture(CaptureError),
    Preprocess(PreprocessError),
    Correlation(CorrelationError),
    Detector(DetectorError),
    Eval(EvalError),
    Synth(SynthError),
);
