//! Central finite-difference verification of every analytic gradient in the
//! crate, on deterministic random inputs.
//!
//! The error of a probed coordinate is
//! `|analytic - fd| / (max(|analytic|, |fd|) + noise_floor)` where the noise
//! floor absorbs central-difference roundoff, which is on the order of
//! `eps * |f| / step`. Without it, coordinates orders of magnitude below the
//! gradient's scale would fail on pure rounding noise that says nothing
//! about the analytic gradient.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demo::{mask_objective, mask_objective_grad, LossKind};
use crate::error::Result;
use crate::loss::{delta_spectrum_loss, hybrid_loss, si_sdr_loss, HybridConfig};
use crate::signal::Waveform;
use crate::stft::{stft, StftConfig};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const PROBES_PER_CHECK: usize = 20;
/// Central-difference step; near the f64 optimum `cbrt(eps)`, small enough
/// that truncation error stays well under the tolerance.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub checks: Vec<CheckOutcome>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.max_rel_err <= self.tolerance)
    }
}

/// Max relative error between `gradient` and central finite differences of
/// `f`, probed at `probes` coordinates drawn from `rng`.
pub fn probe_gradient<F>(
    mut f: F,
    x0: &[f64],
    gradient: &[f64],
    probes: usize,
    rng: &mut ChaCha8Rng,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let noise_floor = 1e-5 * (1.0 + f(&x).abs());
    let mut max_rel = 0.0f64;
    for _ in 0..probes {
        let i = rng.random_range(0..x.len());
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let up = f(&x);
        x[i] = orig - FD_STEP;
        let down = f(&x);
        x[i] = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        let denom = gradient[i].abs().max(fd.abs()) + noise_floor;
        max_rel = max_rel.max((gradient[i] - fd).abs() / denom);
    }
    max_rel
}

fn random_wave(len: usize, rng: &mut ChaCha8Rng) -> Waveform {
    Waveform {
        samples: (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        sample_rate: 16_000,
    }
}

/// Run the full battery: SI-SDR, each single-resolution delta-spectrum loss,
/// the hybrid loss, and the end-to-end mask chain under both objectives.
pub fn run_gradient_checks(
    seed: u64,
    length: usize,
    resolutions: &[StftConfig],
    tolerance: f64,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = random_wave(length, &mut rng);
    let noise = random_wave(length, &mut rng);
    let estimate = Waveform {
        samples: reference
            .samples
            .iter()
            .zip(&noise.samples)
            .map(|(r, n)| 0.8 * r + 0.4 * n)
            .collect(),
        sample_rate: reference.sample_rate,
    };

    let mut checks = Vec::new();

    {
        let analytic = si_sdr_loss(&estimate, &reference, false)?;
        let refc = reference.clone();
        let err = probe_gradient(
            |x| {
                let w = Waveform {
                    samples: x.to_vec(),
                    sample_rate: 16_000,
                };
                si_sdr_loss(&w, &refc, false).unwrap().value
            },
            &estimate.samples,
            &analytic.gradient,
            PROBES_PER_CHECK,
            &mut rng,
        );
        checks.push(CheckOutcome {
            name: "si_sdr_loss".into(),
            max_rel_err: err,
        });
    }

    let delta_cfg = crate::delta::DeltaConfig::default();
    for res in resolutions {
        let analytic = delta_spectrum_loss(&estimate, &reference, res, &delta_cfg)?;
        let refc = reference.clone();
        let resc = *res;
        let err = probe_gradient(
            |x| {
                let w = Waveform {
                    samples: x.to_vec(),
                    sample_rate: 16_000,
                };
                delta_spectrum_loss(&w, &refc, &resc, &delta_cfg)
                    .unwrap()
                    .value
            },
            &estimate.samples,
            &analytic.gradient,
            PROBES_PER_CHECK,
            &mut rng,
        );
        checks.push(CheckOutcome {
            name: format!("delta_spectrum_loss_fft{}", res.fft_size),
            max_rel_err: err,
        });
    }

    {
        let hybrid_cfg = HybridConfig {
            resolutions: resolutions.to_vec(),
            ..HybridConfig::default()
        };
        let analytic = hybrid_loss(&estimate, &reference, &hybrid_cfg)?;
        let refc = reference.clone();
        let cfgc = hybrid_cfg.clone();
        let err = probe_gradient(
            |x| {
                let w = Waveform {
                    samples: x.to_vec(),
                    sample_rate: 16_000,
                };
                hybrid_loss(&w, &refc, &cfgc).unwrap().value
            },
            &estimate.samples,
            &analytic.gradient,
            PROBES_PER_CHECK,
            &mut rng,
        );
        checks.push(CheckOutcome {
            name: "hybrid_loss".into(),
            max_rel_err: err,
        });
    }

    // end-to-end mask chain: loss(istft(sigmoid(logits) * stft(mixture)))
    let mask_cfg = StftConfig::suppression_default();
    let spec = stft(&estimate, &mask_cfg)?;
    let logits0 = Array2::from_shape_fn(spec.data.dim(), |_| rng.random_range(-0.5..0.5));
    let hybrid_cfg = HybridConfig {
        resolutions: resolutions.to_vec(),
        ..HybridConfig::default()
    };
    for kind in [LossKind::SiSdrOnly, LossKind::Hybrid] {
        let (_, grad) = mask_objective_grad(&spec, &logits0, &reference, kind, &hybrid_cfg)?;
        let flat0: Vec<f64> = logits0.iter().copied().collect();
        let grad_flat: Vec<f64> = grad.iter().copied().collect();
        let dim = logits0.dim();
        let specc = spec.clone();
        let refc = reference.clone();
        let cfgc = hybrid_cfg.clone();
        let err = probe_gradient(
            |flat| {
                let logits = Array2::from_shape_vec(dim, flat.to_vec()).unwrap();
                mask_objective(&specc, &logits, &refc, kind, &cfgc)
                    .unwrap()
                    .0
                    .value
            },
            &flat0,
            &grad_flat,
            PROBES_PER_CHECK,
            &mut rng,
        );
        checks.push(CheckOutcome {
            name: format!("mask_chain_{}", kind.name()),
            max_rel_err: err,
        });
    }

    Ok(GradCheckReport { tolerance, checks })
}
