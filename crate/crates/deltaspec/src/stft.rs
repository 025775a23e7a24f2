//! Windowed framing, forward STFT, magnitude, least-squares inverse STFT,
//! and the adjoint maps needed to push gradients back to the waveform.
//!
//! Frames are taken fully inside the signal (no centering, no edge padding);
//! tail samples that do not fill a frame are dropped. Analysis frames are
//! multiplied by a periodic Hann window and zero-padded from `win_length` to
//! `fft_size` before the transform. Only the one-sided spectrum is kept.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::Waveform;

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

thread_local! {
    static FFT_PLANS: RefCell<PlanCache> = RefCell::new(HashMap::new());
}

/// Planning dominates at our frame sizes, so plans are cached per thread.
fn cached_plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    FFT_PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Positions where the summed squared window falls below this are not
/// invertible; inside the signal interior that is an error.
pub const WINDOW_SUM_FLOOR: f64 = 1e-8;

/// Added under the square root of the modulus in gradient paths only, so the
/// derivative stays finite at zero bins. Forward magnitudes are exact.
pub(crate) const MODULUS_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
}

/// Framing parameters for one analysis resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub win_length: usize,
    pub window: WindowKind,
}

impl StftConfig {
    /// Validates `0 < hop <= win_length <= fft_size` and that `fft_size` is a
    /// power of two.
    pub fn new(fft_size: usize, hop: usize, win_length: usize) -> Result<Self> {
        if !fft_size.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "fft_size {fft_size} is not a power of two"
            )));
        }
        if hop == 0 || hop > win_length || win_length > fft_size {
            return Err(Error::InvalidConfig(format!(
                "need 0 < hop <= win_length <= fft_size, got hop {hop}, win {win_length}, fft {fft_size}"
            )));
        }
        Ok(Self {
            fft_size,
            hop,
            win_length,
            window: WindowKind::Hann,
        })
    }

    /// Number of one-sided frequency bins, `fft_size / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// `floor((len - win_length) / hop) + 1` frames; errors when the signal
    /// is shorter than one window.
    pub fn frame_count(&self, signal_len: usize) -> Result<usize> {
        if signal_len < self.win_length {
            return Err(Error::SignalTooShort {
                len: signal_len,
                win_length: self.win_length,
            });
        }
        Ok((signal_len - self.win_length) / self.hop + 1)
    }

    pub fn window_values(&self) -> Vec<f64> {
        match self.window {
            WindowKind::Hann => hann_window(self.win_length),
        }
    }

    /// The three analysis resolutions used by the multi-resolution loss.
    pub fn resolution_bank() -> Vec<StftConfig> {
        vec![
            StftConfig::new(512, 50, 240).unwrap(),
            StftConfig::new(1024, 120, 600).unwrap(),
            StftConfig::new(2048, 240, 1200).unwrap(),
        ]
    }

    /// Resolution used by the over-/under-suppression metric and the mask
    /// optimization demo: hop 120, window 600, with the smallest
    /// power-of-two FFT that holds the window.
    pub fn suppression_default() -> StftConfig {
        StftConfig::new(1024, 120, 600).unwrap()
    }
}

/// Periodic Hann window: `0.5 * (1 - cos(2*pi*j / len))`.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * j as f64 / len as f64).cos()))
        .collect()
}

/// One-sided complex STFT of a waveform.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    /// frames x (fft_size/2 + 1)
    pub data: Array2<Complex64>,
    pub config: StftConfig,
    pub source_length: usize,
    pub sample_rate: u32,
}

/// Elementwise modulus of a complex spectrogram; entries are nonnegative.
#[derive(Debug, Clone)]
pub struct MagnitudeSpectrogram {
    /// frames x bins
    pub data: Array2<f64>,
    pub config: StftConfig,
}

/// Slice the signal into overlapping raw frames (no window applied).
/// Frame `k` is `samples[k*hop .. k*hop + win_length]`.
pub fn frame_signal(wave: &Waveform, config: &StftConfig) -> Result<Array2<f64>> {
    let frames = config.frame_count(wave.len())?;
    let mut out = Array2::zeros((frames, config.win_length));
    for k in 0..frames {
        let start = k * config.hop;
        for j in 0..config.win_length {
            out[[k, j]] = wave.samples[start + j];
        }
    }
    Ok(out)
}

/// Forward STFT: window each frame, zero-pad to `fft_size`, transform, keep
/// the one-sided spectrum.
pub fn stft(wave: &Waveform, config: &StftConfig) -> Result<ComplexSpectrogram> {
    let frames = frame_signal(wave, config)?;
    let window = config.window_values();
    let bins = config.bins();
    let n = config.fft_size;

    let fft = cached_plan(n, false);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut data = Array2::zeros((frames.nrows(), bins));
    for k in 0..frames.nrows() {
        for j in 0..n {
            let v = if j < config.win_length {
                frames[[k, j]] * window[j]
            } else {
                0.0
            };
            buf[j] = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        for f in 0..bins {
            data[[k, f]] = buf[f];
        }
    }
    Ok(ComplexSpectrogram {
        data,
        config: *config,
        source_length: wave.len(),
        sample_rate: wave.sample_rate,
    })
}

/// Elementwise complex modulus, computed as `sqrt(re^2 + im^2)`.
pub fn magnitude(spec: &ComplexSpectrogram) -> MagnitudeSpectrogram {
    MagnitudeSpectrogram {
        data: spec.data.mapv(|z| (z.re * z.re + z.im * z.im).sqrt()),
        config: spec.config,
    }
}

/// Gradient of `sum(upstream * |STFT(wave)|)` with respect to the waveform.
///
/// The modulus derivative uses an epsilon-guarded denominator so zero bins
/// produce a zero (not NaN) contribution.
pub fn magnitude_stft_vjp(
    wave: &Waveform,
    config: &StftConfig,
    upstream: &Array2<f64>,
) -> Result<Vec<f64>> {
    let spec = stft(wave, config)?;
    magnitude_stft_vjp_from_spec(&spec, upstream)
}

pub(crate) fn magnitude_stft_vjp_from_spec(
    spec: &ComplexSpectrogram,
    upstream: &Array2<f64>,
) -> Result<Vec<f64>> {
    let (frames, bins) = spec.data.dim();
    if upstream.dim() != (frames, bins) {
        return Err(Error::ShapeMismatch {
            expected: (frames, bins),
            got: upstream.dim(),
        });
    }
    let cfg = &spec.config;
    let n = cfg.fft_size;
    let window = cfg.window_values();

    let ifft = cached_plan(n, true);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut grad = vec![0.0; spec.source_length];
    for k in 0..frames {
        for f in 0..n {
            buf[f] = if f < bins {
                let z = spec.data[[k, f]];
                let m = (z.re * z.re + z.im * z.im + MODULUS_EPSILON).sqrt();
                z * (upstream[[k, f]] / m)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        // unnormalized inverse transform realizes sum_f G[f] e^{+2pi i f j / n},
        // whose real part is the frame gradient before windowing
        ifft.process(&mut buf);
        let start = k * cfg.hop;
        for j in 0..cfg.win_length {
            grad[start + j] += buf[j].re * window[j];
        }
    }
    Ok(grad)
}

/// Scatter frames additively at stride `hop` into a buffer of `total_length`.
pub fn overlap_add(frames: &Array2<f64>, hop: usize, total_length: usize) -> Result<Vec<f64>> {
    let (k, frame_len) = frames.dim();
    if k == 0 || frame_len == 0 {
        return Err(Error::EmptyMatrix);
    }
    if hop == 0 {
        return Err(Error::InvalidConfig("hop must be positive".into()));
    }
    let needed = (k - 1) * hop + frame_len;
    if total_length < needed {
        return Err(Error::OverlapAddLength {
            total: total_length,
            frames: k,
            frame_len,
            hop,
        });
    }
    let mut out = vec![0.0; total_length];
    for i in 0..k {
        let start = i * hop;
        for j in 0..frame_len {
            out[start + j] += frames[[i, j]];
        }
    }
    Ok(out)
}

/// Least-squares inverse STFT: per-frame inverse DFT, synthesis window,
/// overlap-add, and division by the summed squared analysis window.
///
/// Interior samples (at least `win_length` away from both ends) where the
/// window sum is below [`WINDOW_SUM_FLOOR`] make the configuration
/// non-invertible and raise an error; edge samples in that state are left
/// unnormalized.
pub fn istft(spec: &ComplexSpectrogram) -> Result<Waveform> {
    let cfg = &spec.config;
    let (frames, bins) = spec.data.dim();
    if bins != cfg.bins() {
        return Err(Error::ShapeMismatch {
            expected: (frames, cfg.bins()),
            got: (frames, bins),
        });
    }
    let expected = cfg.frame_count(spec.source_length)?;
    if frames != expected {
        return Err(Error::FrameCountMismatch { frames, expected });
    }

    let n = cfg.fft_size;
    let window = cfg.window_values();
    let ifft = cached_plan(n, true);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    let mut synth = Array2::zeros((frames, cfg.win_length));
    for k in 0..frames {
        expand_one_sided(&spec.data, k, n, &mut buf);
        ifft.process(&mut buf);
        for j in 0..cfg.win_length {
            // 1/n normalizes the inverse transform; windowing again gives the
            // least-squares synthesis frames
            synth[[k, j]] = buf[j].re / n as f64 * window[j];
        }
    }

    let raw = overlap_add(&synth, cfg.hop, spec.source_length)?;
    let wsum = window_sum_squares(cfg, frames, spec.source_length);

    let interior = cfg.win_length..spec.source_length.saturating_sub(cfg.win_length);
    let mut samples = vec![0.0; spec.source_length];
    for t in 0..spec.source_length {
        if wsum[t] >= WINDOW_SUM_FLOOR {
            samples[t] = raw[t] / wsum[t];
        } else if interior.contains(&t) {
            return Err(Error::NonInvertibleWindow {
                index: t,
                threshold: WINDOW_SUM_FLOOR,
            });
        } else {
            samples[t] = raw[t];
        }
    }
    Ok(Waveform {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Adjoint of [`istft`] as a linear map from the one-sided spectrogram to the
/// output samples: given a gradient with respect to the output waveform,
/// returns the gradient with respect to the complex spectrogram entries.
pub fn istft_adjoint(
    config: &StftConfig,
    frame_count: usize,
    source_length: usize,
    grad_wave: &[f64],
) -> Result<Array2<Complex64>> {
    if grad_wave.len() != source_length {
        return Err(Error::LengthMismatch {
            left: grad_wave.len(),
            right: source_length,
        });
    }
    let expected = config.frame_count(source_length)?;
    if frame_count != expected {
        return Err(Error::FrameCountMismatch {
            frames: frame_count,
            expected,
        });
    }

    let n = config.fft_size;
    let bins = config.bins();
    let window = config.window_values();
    let wsum = window_sum_squares(config, frame_count, source_length);
    let interior = config.win_length..source_length.saturating_sub(config.win_length);

    // adjoint of the normalization: same elementwise scaling
    let mut g = vec![0.0; source_length];
    for t in 0..source_length {
        if wsum[t] >= WINDOW_SUM_FLOOR {
            g[t] = grad_wave[t] / wsum[t];
        } else if interior.contains(&t) {
            return Err(Error::NonInvertibleWindow {
                index: t,
                threshold: WINDOW_SUM_FLOOR,
            });
        } else {
            g[t] = grad_wave[t];
        }
    }

    let fft = cached_plan(n, false);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut out = Array2::zeros((frame_count, bins));
    let scale = 1.0 / n as f64;
    for k in 0..frame_count {
        let start = k * config.hop;
        for j in 0..n {
            let v = if j < config.win_length {
                window[j] * g[start + j]
            } else {
                0.0
            };
            buf[j] = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        // fold the conjugate-symmetric half back onto the one-sided bins
        out[[k, 0]] = buf[0] * scale;
        out[[k, n / 2]] = buf[n / 2] * scale;
        for f in 1..n / 2 {
            out[[k, f]] = (buf[f] + buf[n - f].conj()) * scale;
        }
    }
    Ok(out)
}

/// Rebuild the full conjugate-symmetric spectrum of frame `k` into `buf`.
fn expand_one_sided(data: &Array2<Complex64>, k: usize, n: usize, buf: &mut [Complex64]) {
    let bins = n / 2 + 1;
    for f in 0..bins {
        buf[f] = data[[k, f]];
    }
    for f in 1..n / 2 {
        buf[n - f] = data[[k, f]].conj();
    }
}

fn window_sum_squares(config: &StftConfig, frames: usize, total_length: usize) -> Vec<f64> {
    let window = config.window_values();
    let mut wsum = vec![0.0; total_length];
    for k in 0..frames {
        let start = k * config.hop;
        for j in 0..config.win_length {
            wsum[start + j] += window[j] * window[j];
        }
    }
    wsum
}
