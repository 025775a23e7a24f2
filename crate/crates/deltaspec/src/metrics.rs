//! Evaluation-side measures: SI-SDR and plain SDR in dB, over-/under-
//! suppression MAE on magnitude spectrograms, and word/character error
//! rates from a Levenshtein alignment.

use crate::error::{Error, Result};
use crate::loss::{si_sdr_loss, DEFAULT_NORM_FLOOR};
use crate::signal::Waveform;
use crate::stft::{magnitude, stft, StftConfig};

/// Scale-invariant SDR in dB (higher is better); the negation of the
/// SI-SDR loss value, floor-capped the same way.
pub fn si_sdr_metric(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    Ok(-si_sdr_loss(estimate, reference, false)?.value)
}

/// Plain (scale-sensitive) signal-to-distortion ratio in dB:
/// `10 log10(||s||^2 / ||s_hat - s||^2)` with a floored denominator.
pub fn sdr_metric(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: estimate.len(),
            right: reference.len(),
        });
    }
    let signal: f64 = reference.samples.iter().map(|s| s * s).sum();
    if signal <= DEFAULT_NORM_FLOOR {
        return Err(Error::Silent {
            role: "reference",
            energy: signal,
        });
    }
    let error: f64 = estimate
        .samples
        .iter()
        .zip(&reference.samples)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(10.0 * (signal / crate::loss::nan_floor(error, DEFAULT_NORM_FLOOR)).log10())
}

/// Per-utterance over- and under-suppression mean absolute error.
#[derive(Debug, Clone, Copy)]
pub struct SuppressionReport {
    /// Mean over bins of `ReLU(|S| - |S_hat|)`: energy the estimate lost.
    pub mae_over: f64,
    /// Mean over bins of `ReLU(|S_hat| - |S|)`: energy the estimate kept
    /// that the reference does not have.
    pub mae_under: f64,
    pub config: StftConfig,
}

/// Over/under suppression MAE between the estimate and the clean reference,
/// measured on magnitude spectrograms under `config` (use
/// [`StftConfig::suppression_default`] for the standard 512/120/600 setting).
pub fn suppression_mae(
    estimate: &Waveform,
    reference: &Waveform,
    config: &StftConfig,
) -> Result<SuppressionReport> {
    if estimate.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: estimate.len(),
            right: reference.len(),
        });
    }
    let est_mag = magnitude(&stft(estimate, config)?);
    let ref_mag = magnitude(&stft(reference, config)?);
    let n = (est_mag.data.nrows() * est_mag.data.ncols()) as f64;
    let mut over = 0.0;
    let mut under = 0.0;
    for (e, r) in est_mag.data.iter().zip(ref_mag.data.iter()) {
        over += (r - e).max(0.0);
        under += (e - r).max(0.0);
    }
    Ok(SuppressionReport {
        mae_over: over / n,
        mae_under: under / n,
        config: *config,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenUnit {
    Word,
    Character,
}

/// A reference/hypothesis transcript pair tokenized for scoring.
#[derive(Debug, Clone)]
pub struct TranscriptPair {
    pub reference: Vec<String>,
    pub hypothesis: Vec<String>,
    pub unit: TokenUnit,
}

impl TranscriptPair {
    /// Tokenize on whitespace for word error rate.
    pub fn words(reference: &str, hypothesis: &str) -> Self {
        Self {
            reference: reference.split_whitespace().map(str::to_owned).collect(),
            hypothesis: hypothesis.split_whitespace().map(str::to_owned).collect(),
            unit: TokenUnit::Word,
        }
    }

    /// One token per character, spaces included, for character error rate.
    pub fn characters(reference: &str, hypothesis: &str) -> Self {
        Self {
            reference: reference.chars().map(String::from).collect(),
            hypothesis: hypothesis.chars().map(String::from).collect(),
            unit: TokenUnit::Character,
        }
    }
}

/// Edit-distance scoring breakdown; `rate` is `errors / reference length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditDistanceReport {
    pub errors: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub rate: f64,
}

/// Unit-cost Levenshtein distance with a deterministic backtrace that breaks
/// ties by preferring substitution over insertion over deletion.
pub fn edit_distance_rate(pair: &TranscriptPair) -> Result<EditDistanceReport> {
    let reference = &pair.reference;
    let hypothesis = &pair.hypothesis;
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let m = reference.len();
    let n = hypothesis.len();

    let mut dp = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dp[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            dp[i][j] = (dp[i - 1][j - 1] + cost)
                .min(dp[i][j - 1] + 1)
                .min(dp[i - 1][j] + 1);
        }
    }

    let (mut i, mut j) = (m, n);
    let (mut subs, mut ins, mut dels) = (0usize, 0usize, 0usize);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if dp[i][j] == dp[i - 1][j - 1] + cost {
                if cost == 1 {
                    subs += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && dp[i][j] == dp[i][j - 1] + 1 {
            ins += 1;
            j -= 1;
        } else {
            dels += 1;
            i -= 1;
        }
    }

    let errors = dp[m][n];
    debug_assert_eq!(errors, subs + ins + dels);
    Ok(EditDistanceReport {
        errors,
        substitutions: subs,
        insertions: ins,
        deletions: dels,
        rate: errors as f64 / m as f64,
    })
}
