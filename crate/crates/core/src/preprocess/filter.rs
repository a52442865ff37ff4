//! Butterworth low-pass in second-order sections and zero-phase
//! forward/backward application.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::PreprocessError;

/// One second-order section in transposed direct form II, `a0 = 1`.
/// First-order sections carry `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    /// State that makes the section's output equal a constant input `x`.
    fn steady_state(&self, x: f64) -> [f64; 2] {
        let [_, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let z2 = (b2 - a2) * x;
        let z1 = (b1 - a1) * x + z2;
        // b0·x + z1 == x for a unity-DC-gain section
        [z1, z2]
    }

    fn run(&self, data: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in data.iter_mut() {
            let x = *v;
            let y = b0 * x + z[0];
            z[0] = b1 * x - a1 * y + z[1];
            z[1] = b2 * x - a2 * y;
            *v = y;
        }
    }

    /// Complex gain at normalised angular frequency `w` (rad/sample).
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + z1 * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z1 * self.a[1] + z2 * self.a[2];
        num / den
    }
}

/// Digital Butterworth low-pass designed by the bilinear transform with
/// frequency pre-warping. Every section is scaled to unity DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    order: usize,
    sections: Vec<Section>,
}

impl ButterworthLowpass {
    pub fn new(order: usize, cutoff: f64, rate: f64) -> Result<Self, PreprocessError> {
        if order == 0 {
            return Err(PreprocessError::InvalidFilterOrder);
        }
        if !(cutoff > 0.0 && cutoff.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(PreprocessError::InvalidRate);
        }
        if cutoff >= rate / 2.0 {
            return Err(PreprocessError::CutoffAboveNyquist { cutoff, rate });
        }
        let fs2 = 2.0 * rate;
        let warped = fs2 * libm::tan(PI * cutoff / rate);
        let n = order as f64;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        // Poles in the left half plane: exp(jπ(2k + n + 1) / 2n). Take the
        // upper-half member of each conjugate pair, plus the real pole when
        // the order is odd.
        for k in 0..order / 2 {
            let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            let pole = Complex64::from_polar(warped, theta);
            let z = (fs2 + pole) / (fs2 - pole);
            let a1 = -2.0 * z.re;
            let a2 = z.norm_sqr();
            let g = (1.0 + a1 + a2) / 4.0;
            sections.push(Section {
                b: [g, 2.0 * g, g],
                a: [1.0, a1, a2],
            });
        }
        if order % 2 == 1 {
            let z = (fs2 - warped) / (fs2 + warped);
            let g = (1.0 - z) / 2.0;
            sections.push(Section {
                b: [g, g, 0.0],
                a: [1.0, -z, 0.0],
            });
        }
        Ok(ButterworthLowpass { order, sections })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Magnitude response at `freq` for sampling `rate` (single pass).
    pub fn magnitude(&self, freq: f64, rate: f64) -> f64 {
        let w = 2.0 * PI * freq / rate;
        self.sections
            .iter()
            .map(|s| s.response(w))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
            .norm()
    }

    /// Causal filtering with every section started from the steady state of
    /// `data[0]`.
    pub fn filter_in_place(&self, data: &mut [f64]) {
        let Some(&x0) = data.first() else { return };
        for s in &self.sections {
            // steady state through the cascade is x0 at each stage
            s.run(data, s.steady_state(x0));
        }
    }

    /// Zero-phase filtering: odd-reflection padding of `3 × order` samples on
    /// each side, forward pass, reversed pass, then the padding is removed.
    pub fn filtfilt(&self, input: &[f64]) -> Vec<f64> {
        let n = input.len();
        if n < 2 {
            return input.to_vec();
        }
        let pad = (3 * self.order).min(n - 1);
        let (first, last) = (input[0], input[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - input[i]));
        ext.extend_from_slice(input);
        ext.extend((1..=pad).map(|i| 2.0 * last - input[n - 1 - i]));

        self.filter_in_place(&mut ext);
        ext.reverse();
        self.filter_in_place(&mut ext);
        ext.reverse();
        ext.drain(..pad);
        ext.truncate(n);
        ext
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn unity_dc_and_cutoff_half_power() {
        let f = ButterworthLowpass::new(5, 10.0, 100.0).unwrap();
        assert_eq!(f.sections().len(), 3);
        assert!((f.magnitude(0.0, 100.0) - 1.0).abs() < 1e-12);
        assert!((f.magnitude(10.0, 100.0) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let mags: Vec<f64> = (0..50).map(|i| f.magnitude(i as f64, 100.0)).collect();
        assert!(mags.windows(2).all(|w| w[1] <= w[0] + 1e-12), "monotone");
    }

    // Closed-form digital Butterworth magnitude with pre-warping:
    // |H|² = 1 / (1 + (tan(πf/fs) / tan(πfc/fs))^(2n)).
    #[test]
    fn matches_analytic_magnitude() {
        for order in 1..=6 {
            let f = ButterworthLowpass::new(order, 10.0, 100.0).unwrap();
            for freq in [1.0, 5.0, 12.0, 20.0, 35.0, 49.0] {
                let ratio = libm::tan(PI * freq / 100.0) / libm::tan(PI * 10.0 / 100.0);
                let want = 1.0 / libm::sqrt(1.0 + libm::pow(ratio, 2.0 * order as f64));
                assert!(
                    (f.magnitude(freq, 100.0) - want).abs() < 1e-9,
                    "order {order} freq {freq}"
                );
            }
        }
    }

    #[test]
    fn cutoff_at_nyquist_rejected() {
        assert!(matches!(
            ButterworthLowpass::new(5, 50.0, 100.0),
            Err(PreprocessError::CutoffAboveNyquist { .. })
        ));
    }

    #[test]
    fn constant_preserved() {
        let f = ButterworthLowpass::new(5, 10.0, 100.0).unwrap();
        let out = f.filtfilt(&vec![3.25; 200]);
        assert!(out.iter().all(|v| (v - 3.25).abs() < 1e-12));
        // very short inputs still filter
        assert_eq!(f.filtfilt(&[1.0, 1.0, 1.0]).len(), 3);
        assert_eq!(f.filtfilt(&[2.0]), vec![2.0]);
    }

    #[test]
    fn symmetric_pulse_keeps_peak_position() {
        let f = ButterworthLowpass::new(5, 10.0, 100.0).unwrap();
        let x: Vec<f64> = (0..301)
            .map(|i| {
                let d = (i as f64 - 150.0) / 6.0;
                libm::exp(-d * d)
            })
            .collect();
        let y = f.filtfilt(&x);
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 150);
    }
}
