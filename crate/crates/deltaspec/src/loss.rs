//! Training losses with analytic gradients with respect to the estimated
//! waveform: the scale-invariant SDR loss in the time domain, the
//! delta-spectrum loss in the frequency domain, and their hybrid combination
//! averaged over several analysis resolutions.

use ndarray::Array2;

use crate::delta::{delta, delta_adjoint, DeltaConfig};
use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::stft::{
    magnitude, magnitude_stft_vjp_from_spec, stft, MagnitudeSpectrogram, StftConfig,
};

/// Floor applied to squared norms before division or logarithm, so perfect
/// reconstructions cap the loss instead of blowing it up.
pub const DEFAULT_NORM_FLOOR: f64 = 1e-8;

/// Floor applied to magnitudes before taking their logarithm.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-7;

/// 10 / ln(10): converts natural logs to decibels-over-ten.
const DB: f64 = 10.0 / std::f64::consts::LN_10;

/// Floor that lets NaN through instead of masking it (`f64::max` would
/// return the floor), so non-finite inputs surface as non-finite losses.
pub(crate) fn nan_floor(x: f64, floor: f64) -> f64 {
    if x.is_nan() {
        x
    } else {
        x.max(floor)
    }
}

/// Scalar loss value paired with its gradient, shaped like the estimate.
#[derive(Debug, Clone)]
pub struct LossResult {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Configuration of the hybrid loss: the resolutions of the frequency term,
/// its weight `gamma`, the delta order, and the numerical floors.
#[derive(Debug, Clone)]
pub struct HybridConfig {
    pub resolutions: Vec<StftConfig>,
    pub gamma: f64,
    pub delta: DeltaConfig,
    pub log_floor: f64,
    pub norm_floor: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            resolutions: StftConfig::resolution_bank(),
            gamma: 1.0,
            delta: DeltaConfig::default(),
            log_floor: DEFAULT_LOG_FLOOR,
            norm_floor: DEFAULT_NORM_FLOOR,
        }
    }
}

impl HybridConfig {
    fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::InvalidConfig("resolution list is empty".into()));
        }
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig("gamma must be finite and >= 0".into()));
        }
        if self.log_floor <= 0.0 || self.norm_floor <= 0.0 {
            return Err(Error::InvalidConfig("floors must be positive".into()));
        }
        Ok(())
    }
}

/// Negative scale-invariant SDR: `-20 log10(||alpha s|| / ||s_hat - alpha s||)`
/// with `alpha = <s_hat, s> / ||s||^2`.
///
/// With `zero_mean` set, both signals are mean-subtracted first. The error
/// energy (and, symmetrically, the projected-target energy) is floored at
/// [`DEFAULT_NORM_FLOOR`], which caps the loss on perfect reconstructions.
pub fn si_sdr_loss(
    estimate: &Waveform,
    reference: &Waveform,
    zero_mean: bool,
) -> Result<LossResult> {
    si_sdr_core(
        &estimate.samples,
        &reference.samples,
        zero_mean,
        DEFAULT_NORM_FLOOR,
    )
}

pub(crate) fn si_sdr_core(
    estimate: &[f64],
    reference: &[f64],
    zero_mean: bool,
    norm_floor: f64,
) -> Result<LossResult> {
    if estimate.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: estimate.len(),
            right: reference.len(),
        });
    }
    let n = estimate.len();
    if n == 0 {
        return Err(Error::LengthMismatch { left: 0, right: 0 });
    }

    let (est, refr): (Vec<f64>, Vec<f64>) = if zero_mean {
        let me = estimate.iter().sum::<f64>() / n as f64;
        let mr = reference.iter().sum::<f64>() / n as f64;
        (
            estimate.iter().map(|s| s - me).collect(),
            reference.iter().map(|s| s - mr).collect(),
        )
    } else {
        (estimate.to_vec(), reference.to_vec())
    };

    let ref_energy: f64 = refr.iter().map(|s| s * s).sum();
    if ref_energy <= norm_floor {
        return Err(Error::Silent {
            role: "reference",
            energy: ref_energy,
        });
    }
    let dot: f64 = est.iter().zip(&refr).map(|(a, b)| a * b).sum();
    let alpha = dot / ref_energy;

    // target energy ||alpha s||^2 and error energy ||s_hat - alpha s||^2
    let target_energy = alpha * alpha * ref_energy;
    let error: Vec<f64> = est.iter().zip(&refr).map(|(a, b)| a - alpha * b).collect();
    let error_energy: f64 = error.iter().map(|e| e * e).sum();

    let target_floored = nan_floor(target_energy, norm_floor);
    let error_floored = nan_floor(error_energy, norm_floor);
    let value = -DB * (target_floored.ln() - error_floored.ln());

    // d(target_energy)/d(est) = 2 alpha s; d(error_energy)/d(est) = 2 error.
    // Floored terms are locally constant, so their contribution drops out.
    let mut gradient = vec![0.0; n];
    let target_active = target_energy > norm_floor;
    let error_active = error_energy > norm_floor;
    for i in 0..n {
        let mut g = 0.0;
        if target_active {
            g -= DB * 2.0 * alpha * refr[i] / target_energy;
        }
        if error_active {
            g += DB * 2.0 * error[i] / error_energy;
        }
        gradient[i] = g;
    }
    if zero_mean {
        let mean = gradient.iter().sum::<f64>() / n as f64;
        for g in &mut gradient {
            *g -= mean;
        }
    }
    Ok(LossResult { value, gradient })
}

fn check_shapes(est: &Array2<f64>, reference: &Array2<f64>) -> Result<()> {
    if est.dim() != reference.dim() {
        return Err(Error::ShapeMismatch {
            expected: reference.dim(),
            got: est.dim(),
        });
    }
    Ok(())
}

/// Spectral convergence with delta features: three Frobenius-ratio terms on
/// the raw magnitudes, their differentials, and their accelerations. Returns
/// the scalar and the gradient with respect to the estimated magnitudes.
pub fn spectral_convergence_delta(
    est_mag: &MagnitudeSpectrogram,
    ref_mag: &MagnitudeSpectrogram,
    delta_cfg: &DeltaConfig,
) -> Result<(f64, Array2<f64>)> {
    spectral_convergence_core(&est_mag.data, &ref_mag.data, delta_cfg, DEFAULT_NORM_FLOOR)
}

/// The raw matrix, its differential, and its acceleration.
fn delta_stack(m: &Array2<f64>, cfg: &DeltaConfig) -> Result<[Array2<f64>; 2]> {
    let d = delta(m, cfg)?;
    let dd = delta(&d, cfg)?;
    Ok([d, dd])
}

pub(crate) fn spectral_convergence_core(
    est: &Array2<f64>,
    reference: &Array2<f64>,
    delta_cfg: &DeltaConfig,
    norm_floor: f64,
) -> Result<(f64, Array2<f64>)> {
    check_shapes(est, reference)?;
    let [d_est, dd_est] = delta_stack(est, delta_cfg)?;
    let [d_ref, dd_ref] = delta_stack(reference, delta_cfg)?;

    let mut value = 0.0;
    let mut grad = Array2::zeros(est.dim());
    for (stage, (te, tr)) in [(est, reference), (&d_est, &d_ref), (&dd_est, &dd_ref)]
        .into_iter()
        .enumerate()
    {
        let mut num2 = 0.0;
        let mut den2 = 0.0;
        for (e, r) in te.iter().zip(tr.iter()) {
            num2 += (r - e) * (r - e);
            den2 += r * r;
        }
        let num = num2.sqrt();
        let den = nan_floor(den2.sqrt(), norm_floor);
        value += num / den;
        if num > 0.0 {
            // d(num/den)/d(te) = (te - tr) / (num * den), pulled back through
            // the transform's adjoint
            let scale = 1.0 / (num * den);
            let mut upstream = Array2::zeros(est.dim());
            upstream
                .iter_mut()
                .zip(te.iter().zip(tr.iter()))
                .for_each(|(u, (e, r))| *u = (e - r) * scale);
            for _ in 0..stage {
                upstream = delta_adjoint(&upstream, delta_cfg)?;
            }
            grad += &upstream;
        }
    }
    Ok((value, grad))
}

/// Log-magnitude loss with delta features: three mean-L1 terms on the
/// log-magnitude difference, its differential, and its acceleration.
/// Magnitudes are floored before the (natural) logarithm; the L1 subgradient
/// at a kink is taken as zero.
pub fn log_magnitude_delta(
    est_mag: &MagnitudeSpectrogram,
    ref_mag: &MagnitudeSpectrogram,
    delta_cfg: &DeltaConfig,
) -> Result<(f64, Array2<f64>)> {
    log_magnitude_core(&est_mag.data, &ref_mag.data, delta_cfg, DEFAULT_LOG_FLOOR)
}

pub(crate) fn log_magnitude_core(
    est: &Array2<f64>,
    reference: &Array2<f64>,
    delta_cfg: &DeltaConfig,
    log_floor: f64,
) -> Result<(f64, Array2<f64>)> {
    check_shapes(est, reference)?;
    let n = (est.nrows() * est.ncols()) as f64;
    let est_log = est.mapv(|v| v.max(log_floor).ln());
    let ref_log = reference.mapv(|v| v.max(log_floor).ln());
    let [d_est, dd_est] = delta_stack(&est_log, delta_cfg)?;
    let [d_ref, dd_ref] = delta_stack(&ref_log, delta_cfg)?;

    let mut value = 0.0;
    let mut grad_log = Array2::zeros(est.dim());
    for (stage, (te, tr)) in [(&est_log, &ref_log), (&d_est, &d_ref), (&dd_est, &dd_ref)]
        .into_iter()
        .enumerate()
    {
        // L1 subgradient at a kink (equal entries) is pinned to zero
        let mut sum = 0.0;
        let mut upstream = Array2::zeros(est.dim());
        upstream
            .iter_mut()
            .zip(te.iter().zip(tr.iter()))
            .for_each(|(u, (e, r))| {
                let d = r - e;
                sum += d.abs();
                *u = if d == 0.0 { 0.0 } else { -d.signum() / n };
            });
        value += sum / n;
        for _ in 0..stage {
            upstream = delta_adjoint(&upstream, delta_cfg)?;
        }
        grad_log += &upstream;
    }

    // chain through log(max(est, floor)): 1/est above the floor, 0 below
    let mut grad = grad_log;
    grad.zip_mut_with(est, |g, &e| {
        if e > log_floor {
            *g /= e;
        } else {
            *g = 0.0;
        }
    });
    Ok((value, grad))
}

/// Single-resolution delta-spectrum loss: spectral convergence plus
/// log-magnitude terms on `|STFT|`, with the gradient chained back to the
/// estimated waveform.
pub fn delta_spectrum_loss(
    estimate: &Waveform,
    reference: &Waveform,
    config: &StftConfig,
    delta_cfg: &DeltaConfig,
) -> Result<LossResult> {
    delta_spectrum_core(
        estimate,
        reference,
        config,
        delta_cfg,
        DEFAULT_LOG_FLOOR,
        DEFAULT_NORM_FLOOR,
    )
}

pub(crate) fn delta_spectrum_core(
    estimate: &Waveform,
    reference: &Waveform,
    config: &StftConfig,
    delta_cfg: &DeltaConfig,
    log_floor: f64,
    norm_floor: f64,
) -> Result<LossResult> {
    if estimate.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: estimate.len(),
            right: reference.len(),
        });
    }
    let est_spec = stft(estimate, config)?;
    let ref_spec = stft(reference, config)?;
    let est_mag = magnitude(&est_spec);
    let ref_mag = magnitude(&ref_spec);

    let (sc_value, sc_grad) =
        spectral_convergence_core(&est_mag.data, &ref_mag.data, delta_cfg, norm_floor)?;
    let (lm_value, lm_grad) =
        log_magnitude_core(&est_mag.data, &ref_mag.data, delta_cfg, log_floor)?;

    let upstream = sc_grad + lm_grad;
    let gradient = magnitude_stft_vjp_from_spec(&est_spec, &upstream)?;
    Ok(LossResult {
        value: sc_value + lm_value,
        gradient,
    })
}

/// Hybrid loss: SI-SDR plus `gamma` times the mean delta-spectrum loss over
/// all configured resolutions. The gradient is the matching sum.
pub fn hybrid_loss(
    estimate: &Waveform,
    reference: &Waveform,
    config: &HybridConfig,
) -> Result<LossResult> {
    config.validate()?;
    let si = si_sdr_core(
        &estimate.samples,
        &reference.samples,
        false,
        config.norm_floor,
    )?;
    if config.gamma == 0.0 {
        return Ok(si);
    }

    let m = config.resolutions.len() as f64;
    let mut freq_sum = 0.0;
    let mut gradient = si.gradient;
    for res in &config.resolutions {
        let term = delta_spectrum_core(
            estimate,
            reference,
            res,
            &config.delta,
            config.log_floor,
            config.norm_floor,
        )?;
        freq_sum += term.value;
        let w = config.gamma / m;
        for (g, t) in gradient.iter_mut().zip(&term.gradient) {
            *g += w * t;
        }
    }
    Ok(LossResult {
        value: si.value + config.gamma * (freq_sum / m),
        gradient,
    })
}
