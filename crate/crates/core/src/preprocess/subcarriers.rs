use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::ops::Range;

use super::PreprocessError;
use crate::csi::Bandwidth;

/// Which subcarriers survive pruning: the `lower` index band minus the null
/// (guard/DC) and pilot positions, in ascending index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierMap {
    subcarrier_count: usize,
    bandwidth: Option<Bandwidth>,
    null: BTreeSet<usize>,
    pilot: BTreeSet<usize>,
    lower: Range<usize>,
    retained: Vec<usize>,
}

/// Table version shipped with [`SubcarrierMap::builtin`].
pub const TABLE_VERSION: u32 = 1;

// The lower 20 MHz block (bins 0..64) of an 80 MHz capture.
const LOWER_20_NULLS: [usize; 14] = [0, 1, 2, 3, 29, 30, 31, 32, 33, 34, 35, 61, 62, 63];
const LOWER_20_PILOTS: [usize; 4] = [11, 25, 39, 53];

impl SubcarrierMap {
    pub fn new(
        subcarrier_count: usize,
        null: impl IntoIterator<Item = usize>,
        pilot: impl IntoIterator<Item = usize>,
        lower: Range<usize>,
    ) -> Result<Self, PreprocessError> {
        let null: BTreeSet<usize> = null.into_iter().collect();
        let pilot: BTreeSet<usize> = pilot.into_iter().collect();
        if let Some(&bad) = null.iter().chain(&pilot).find(|&&i| i >= subcarrier_count) {
            return Err(PreprocessError::InvalidMap {
                reason: "null/pilot index outside subcarrier range",
                index: Some(bad),
            });
        }
        if lower.start >= lower.end || lower.end > subcarrier_count {
            return Err(PreprocessError::InvalidMap {
                reason: "lower band range empty or outside subcarrier range",
                index: None,
            });
        }
        let retained: Vec<usize> = lower
            .clone()
            .filter(|i| !null.contains(i) && !pilot.contains(i))
            .collect();
        if retained.len() < 2 {
            return Err(PreprocessError::ShapeMismatch {
                expected: 2,
                found: retained.len(),
            });
        }
        Ok(SubcarrierMap {
            subcarrier_count,
            bandwidth: Bandwidth::from_subcarriers(subcarrier_count),
            null,
            pilot,
            lower,
            retained,
        })
    }

    /// Keeps all `s` subcarriers.
    pub fn identity(s: usize) -> Result<Self, PreprocessError> {
        Self::new(s, [], [], 0..s)
    }

    /// Built-in table for a bandwidth: the lowest 64 bins with their guard,
    /// DC-adjacent and pilot positions removed (46 retained subcarriers).
    pub fn builtin(bandwidth: Bandwidth) -> Self {
        Self::new(
            bandwidth.subcarriers(),
            LOWER_20_NULLS,
            LOWER_20_PILOTS,
            0..64,
        )
        .expect("builtin table is valid")
    }

    pub fn subcarrier_count(&self) -> usize {
        self.subcarrier_count
    }

    pub fn bandwidth(&self) -> Option<Bandwidth> {
        self.bandwidth
    }

    pub fn null_indices(&self) -> &BTreeSet<usize> {
        &self.null
    }

    pub fn pilot_indices(&self) -> &BTreeSet<usize> {
        &self.pilot
    }

    pub fn lower_band(&self) -> Range<usize> {
        self.lower.clone()
    }

    /// Retained column indices, ascending.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vht80_lower_band_keeps_46() {
        let map = SubcarrierMap::builtin(Bandwidth::Mhz80);
        assert_eq!(map.subcarrier_count(), 256);
        assert_eq!(map.retained().len(), 64 - 14 - 4);
        assert!(map.retained().windows(2).all(|w| w[0] < w[1]));
        assert!(!map.retained().contains(&11));
        assert!(!map.retained().contains(&32));
        assert_eq!(map.retained()[0], 4);
    }

    #[test]
    fn invalid_maps() {
        assert!(matches!(
            SubcarrierMap::new(4, [0, 1, 2], [], 0..4),
            Err(PreprocessError::ShapeMismatch { found: 1, .. })
        ));
        assert!(matches!(
            SubcarrierMap::new(4, [9], [], 0..4),
            Err(PreprocessError::InvalidMap { index: Some(9), .. })
        ));
        assert!(SubcarrierMap::new(4, [], [], 0..5).is_err());
    }
}
