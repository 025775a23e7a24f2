//! SNR-controlled mixture simulation: length-matching, gain solving, additive
//! mixing, and a deterministic sampler for building mixture datasets.
//!
//! All randomness comes from `ChaCha8Rng` seeded with a caller-provided
//! 64-bit seed, so identical seeds reproduce identical datasets on any
//! platform. Use [`derive_seed`] to derive independent per-utterance seeds
//! from a base seed.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Energies at or below this are treated as silence.
pub const SILENCE_ENERGY_FLOOR: f64 = 1e-8;

/// Default interference SNR sampling range in dB.
pub const DEFAULT_INTERFERENCE_SNR_DB: RangeInclusive<f64> = -10.0..=10.0;

/// Default noise SNR sampling range in dB.
pub const DEFAULT_NOISE_SNR_DB: RangeInclusive<f64> = -5.0..=15.0;

/// Everything needed to build one mixture deterministically.
#[derive(Debug, Clone)]
pub struct MixSpec {
    pub target: Waveform,
    pub interferences: Vec<Waveform>,
    pub noise: Option<Waveform>,
    /// Target-relative SNR in dB, one entry per interference.
    pub interference_snr_db: Vec<f64>,
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
}

/// A mixture plus the scaled sources that were summed with the target, in
/// order: interferences first, then noise if present.
#[derive(Debug, Clone)]
pub struct MixResult {
    pub mixture: Waveform,
    pub scaled_components: Vec<Waveform>,
}

/// Truncate (keeping the first samples) or zero-pad (at the end) to
/// `target_length`.
pub fn fit_length(signal: &Waveform, target_length: usize) -> Waveform {
    let mut samples = signal.samples.clone();
    samples.resize(target_length, 0.0);
    Waveform {
        samples,
        sample_rate: signal.sample_rate,
    }
}

/// Scale `signal` so that `10 log10(||reference||^2 / ||scaled||^2)` equals
/// `snr_db`. Both inputs must be non-silent.
pub fn scale_to_snr(signal: &Waveform, reference: &Waveform, snr_db: f64) -> Result<Waveform> {
    let sig_energy = signal.energy();
    if sig_energy <= SILENCE_ENERGY_FLOOR {
        return Err(Error::Silent {
            role: "signal",
            energy: sig_energy,
        });
    }
    let ref_energy = reference.energy();
    if ref_energy <= SILENCE_ENERGY_FLOOR {
        return Err(Error::Silent {
            role: "reference",
            energy: ref_energy,
        });
    }
    let gain = (ref_energy / (sig_energy * 10f64.powf(snr_db / 10.0))).sqrt();
    Ok(Waveform {
        samples: signal.samples.iter().map(|s| gain * s).collect(),
        sample_rate: signal.sample_rate,
    })
}

/// Build the mixture described by `spec`: every source is length-fitted to
/// the target, scaled to its SNR, and summed with the unscaled target.
pub fn make_mixture(spec: &MixSpec) -> Result<MixResult> {
    if spec.interference_snr_db.len() != spec.interferences.len() {
        return Err(Error::InvalidConfig(format!(
            "{} interferences but {} SNR values",
            spec.interferences.len(),
            spec.interference_snr_db.len()
        )));
    }
    if spec.noise.is_some() != spec.noise_snr_db.is_some() {
        return Err(Error::InvalidConfig(
            "noise and noise_snr_db must be given together".into(),
        ));
    }
    let target_energy = spec.target.energy();
    if target_energy <= SILENCE_ENERGY_FLOOR {
        return Err(Error::Silent {
            role: "target",
            energy: target_energy,
        });
    }
    let len = spec.target.len();

    let mut scaled_components = Vec::new();
    for (source, &snr) in spec.interferences.iter().zip(&spec.interference_snr_db) {
        check_rate(source, &spec.target)?;
        scaled_components.push(scale_to_snr(&fit_length(source, len), &spec.target, snr)?);
    }
    if let (Some(noise), Some(snr)) = (&spec.noise, spec.noise_snr_db) {
        check_rate(noise, &spec.target)?;
        scaled_components.push(scale_to_snr(&fit_length(noise, len), &spec.target, snr)?);
    }

    let mut samples = spec.target.samples.clone();
    for component in &scaled_components {
        for (m, c) in samples.iter_mut().zip(&component.samples) {
            *m += c;
        }
    }
    Ok(MixResult {
        mixture: Waveform {
            samples,
            sample_rate: spec.target.sample_rate,
        },
        scaled_components,
    })
}

fn check_rate(source: &Waveform, target: &Waveform) -> Result<()> {
    if source.sample_rate != target.sample_rate {
        return Err(Error::InvalidConfig(format!(
            "sample rates differ: {} vs {}",
            source.sample_rate, target.sample_rate
        )));
    }
    Ok(())
}

/// Sample a mixture plan: one interference drawn uniformly from `pool`, SNR
/// values drawn uniformly from the given ranges, everything driven by a
/// ChaCha8 generator seeded with `seed`. The pool must not contain the
/// target utterance.
pub fn sample_mix_plan(
    target: &Waveform,
    pool: &[Waveform],
    seed: u64,
    snr_range_db: RangeInclusive<f64>,
    noise_pool: Option<&[Waveform]>,
    noise_snr_range_db: Option<RangeInclusive<f64>>,
) -> Result<MixSpec> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = rng.random_range(0..pool.len());
    let snr = rng.random_range(snr_range_db);

    let (noise, noise_snr_db) = match noise_pool {
        Some(noises) => {
            if noises.is_empty() {
                return Err(Error::EmptyPool);
            }
            let npick = rng.random_range(0..noises.len());
            let nrange = noise_snr_range_db.unwrap_or(DEFAULT_NOISE_SNR_DB);
            let nsnr = rng.random_range(nrange);
            (Some(noises[npick].clone()), Some(nsnr))
        }
        None => (None, None),
    };

    Ok(MixSpec {
        target: target.clone(),
        interferences: vec![pool[pick].clone()],
        noise,
        interference_snr_db: vec![snr],
        noise_snr_db,
        seed,
    })
}

/// Derive an independent 64-bit sub-seed (splitmix64 step), so per-utterance
/// seeds can be generated from one base seed in any order.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Measured target-to-component SNR in dB.
pub fn measured_snr_db(target: &Waveform, component: &Waveform) -> f64 {
    10.0 * (target.energy() / component.energy()).log10()
}
