use alloc::vec::Vec;

use super::{AmplitudeSeries, PreprocessError};
use crate::matrix::Matrix;

/// Slack, in grid steps, when deciding whether the last grid point still
/// fits in the span. Covers rounding of epoch-scale timestamps.
const GRID_EPS: f64 = 1e-3;

/// Linearly interpolates every column of `gains` (one row per timestamp) onto
/// a uniform grid anchored at `timestamps[0]` with step `1 / target_rate`.
///
/// The grid ends at or before the last timestamp. Samples that land exactly
/// on an input timestamp reproduce the input row. With duplicate timestamps
/// the later row wins.
pub fn resample_linear(
    gains: &Matrix,
    timestamps: &[f64],
    target_rate: f64,
) -> Result<AmplitudeSeries, PreprocessError> {
    let n = timestamps.len();
    if n < 2 || gains.rows() < 2 {
        return Err(PreprocessError::TooFewFrames { frames: n });
    }
    if gains.rows() != n {
        return Err(PreprocessError::ShapeMismatch {
            expected: n,
            found: gains.rows(),
        });
    }
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(PreprocessError::InvalidRate);
    }
    if timestamps.windows(2).any(|w| w[1] < w[0]) {
        return Err(PreprocessError::UnsortedTimestamps);
    }
    let t0 = timestamps[0];
    let span = timestamps[n - 1] - t0;
    if !(span > 0.0) {
        return Err(PreprocessError::DegenerateSpan);
    }

    let out_rows = libm::floor(span * target_rate + GRID_EPS) as usize + 1;
    let cols = gains.cols();
    let mut out = Matrix::zeros(out_rows, cols);
    let mut j = 0usize;
    for k in 0..out_rows {
        // relative offsets keep precision on epoch-scale timestamps
        let t = (k as f64 / target_rate).min(span);
        while j + 2 < n && timestamps[j + 1] - t0 <= t {
            j += 1;
        }
        let (ta, tb) = (timestamps[j] - t0, timestamps[j + 1] - t0);
        let frac = if tb > ta {
            ((t - ta) / (tb - ta)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let (ra, rb) = (gains.row(j), gains.row(j + 1));
        for ((dst, &a), &b) in out.row_mut(k).iter_mut().zip(ra).zip(rb) {
            *dst = lerp(a, b, frac);
        }
    }
    AmplitudeSeries::new(out, target_rate, t0)
}

/// `(1 − f)·a + f·b`, exact at both ends.
fn lerp(a: f64, b: f64, f: f64) -> f64 {
    if f == 0.0 {
        a
    } else if f == 1.0 {
        b
    } else {
        (1.0 - f) * a + f * b
    }
}

/// Grid times produced by [`resample_linear`] for the given timestamps.
pub fn grid_times(timestamps: &[f64], target_rate: f64) -> Vec<f64> {
    let t0 = timestamps[0];
    let span = timestamps[timestamps.len() - 1] - t0;
    let n = libm::floor(span * target_rate + GRID_EPS) as usize + 1;
    (0..n).map(|k| t0 + k as f64 / target_rate).collect()
}
