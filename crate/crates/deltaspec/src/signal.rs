//! Mono waveform container plus a few synthetic-signal constructors used by
//! the demo and the test suites.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A mono sampled signal. Samples are dimensionless amplitudes, nominally in
/// [-1, 1]; nothing enforces that range except the PCM writer, which clips.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    /// Build a waveform, rejecting non-finite samples and a zero sample rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidWaveform(
                "sample rate must be positive".into(),
            ));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidWaveform(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Pure tone: `amplitude * sin(2*pi*frequency*t)`.
    pub fn sine(frequency_hz: f64, amplitude: f64, num_samples: usize, sample_rate: u32) -> Self {
        let sr = sample_rate as f64;
        let samples = (0..num_samples)
            .map(|n| amplitude * (2.0 * PI * frequency_hz * n as f64 / sr).sin())
            .collect();
        Self {
            samples,
            sample_rate,
        }
    }

    /// Linear chirp sweeping from `start_hz` to `end_hz` over the signal.
    pub fn linear_chirp(
        start_hz: f64,
        end_hz: f64,
        amplitude: f64,
        num_samples: usize,
        sample_rate: u32,
    ) -> Self {
        let sr = sample_rate as f64;
        let duration = num_samples as f64 / sr;
        let rate = (end_hz - start_hz) / duration;
        let samples = (0..num_samples)
            .map(|n| {
                let t = n as f64 / sr;
                let phase = 2.0 * PI * (start_hz * t + 0.5 * rate * t * t);
                amplitude * phase.sin()
            })
            .collect();
        Self {
            samples,
            sample_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_nan() {
        assert!(Waveform::new(vec![0.0, f64::NAN], 16_000).is_err());
        assert!(Waveform::new(vec![0.0, f64::INFINITY], 16_000).is_err());
    }

    #[test]
    fn new_rejects_zero_rate() {
        assert!(Waveform::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn sine_hits_expected_samples() {
        let w = Waveform::sine(4_000.0, 1.0, 8, 16_000);
        // period of 4 samples: 0, 1, 0, -1, ...
        let expected = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0];
        for (got, want) in w.samples.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn chirp_with_equal_endpoints_is_a_tone() {
        let a = Waveform::linear_chirp(440.0, 440.0, 0.5, 256, 16_000);
        let b = Waveform::sine(440.0, 0.5, 256, 16_000);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
