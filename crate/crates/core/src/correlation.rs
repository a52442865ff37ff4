//! Adjacent-frame Pearson correlation.
//!
//! Covariance and standard deviations are population (divide by K) in both
//! numerator and denominator, so the ratio equals the sample-statistic form.

use alloc::vec::Vec;
use core::fmt;

use crate::preprocess::AmplitudeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationError {
    /// One of the vectors is constant, so the coefficient is undefined.
    ZeroVariance,
    LengthMismatch {
        left: usize,
        right: usize,
    },
    TooShort {
        len: usize,
    },
    NonFinite,
}

impl fmt::Display for CorrelationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationError::ZeroVariance => f.write_str("vector has zero variance"),
            CorrelationError::LengthMismatch { left, right } => {
                write!(f, "vector lengths differ ({left} vs {right})")
            }
            CorrelationError::TooShort { len } => {
                write!(f, "need at least 2 elements, got {len}")
            }
            CorrelationError::NonFinite => f.write_str("non-finite input"),
        }
    }
}

impl core::error::Error for CorrelationError {}

/// Scales `v` by an exact power of two so its largest magnitude lies in
/// `[0.5, 1)`. Correlation is scale invariant, and the power-of-two factor
/// introduces no rounding while keeping sums away from overflow.
fn normalise(v: &[f64]) -> Vec<f64> {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return v.to_vec();
    }
    let (_, exp) = libm::frexp(max);
    v.iter().map(|x| libm::ldexp(*x, -exp)).collect()
}

/// Pearson correlation of two equally long gain vectors, clamped to
/// `[-1, 1]`.
pub fn pcc_pair(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooShort { len: x.len() });
    }
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    let (x, y) = (normalise(x), normalise(y));
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    let r = sxy / libm::sqrt(sxx * syy);
    Ok(r.clamp(-1.0, 1.0))
}

/// Signal Tendency Index `sqrt(2·n·(1 − pcc))`, with `n` the number of
/// subcarriers per frame.
pub fn sti(pcc: f64, n: usize) -> f64 {
    libm::sqrt(2.0 * n as f64 * (1.0 - pcc.clamp(-1.0, 1.0)))
}

/// Correlations of consecutive rows. `values[i]` belongs to rows `(i, i+1)`
/// and is stamped with the time of row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PccSeries {
    values: Vec<f64>,
    rate: f64,
    t0: f64,
    degenerate_frames: usize,
}

impl PccSeries {
    /// Builds a series from precomputed values, which must lie in `[-1, 1]`.
    pub fn from_values(values: Vec<f64>, rate: f64, t0: f64) -> Option<Self> {
        values
            .iter()
            .all(|v| (-1.0..=1.0).contains(v))
            .then_some(PccSeries {
                values,
                rate,
                t0,
                degenerate_frames: 0,
            })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.rate
    }

    /// Pairs that involved a constant frame and were set to 1.0.
    pub fn degenerate_frames(&self) -> usize {
        self.degenerate_frames
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `max − min` of the values.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        hi - lo
    }

    /// STI of every value for frames of `n` subcarriers.
    pub fn sti(&self, n: usize) -> Vec<f64> {
        self.values.iter().map(|p| sti(*p, n)).collect()
    }
}

/// PCC of every adjacent row pair. A constant row yields 1.0 and is counted
/// in [`PccSeries::degenerate_frames`].
pub fn pcc_series(series: &AmplitudeSeries) -> Result<PccSeries, CorrelationError> {
    let rows = series.len();
    if rows < 2 {
        return Err(CorrelationError::TooShort { len: rows });
    }
    let data = series.data();
    let mut values = Vec::with_capacity(rows - 1);
    let mut degenerate = 0;
    for i in 0..rows - 1 {
        match pcc_pair(data.row(i), data.row(i + 1)) {
            Ok(v) => values.push(v),
            Err(CorrelationError::ZeroVariance) => {
                degenerate += 1;
                values.push(1.0);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PccSeries {
        values,
        rate: series.rate(),
        t0: series.t0(),
        degenerate_frames: degenerate,
    })
}
