//! Differentiable audio losses and evaluation tools for speaker-extraction
//! experiments: a scale-invariant SDR loss and a multi-resolution
//! delta-spectrum loss with analytic waveform gradients, over-/under-
//! suppression metrics, WER/CER scoring, SNR-controlled mixture simulation,
//! and a mask-optimization harness that compares training objectives.
//!
//! Everything runs in 64-bit floats and every analytic gradient is covered
//! by finite-difference checks (see [`gradcheck`] or `deltaspec grad-check`).
//!
//! ```
//! use deltaspec::{hybrid_loss, HybridConfig, Waveform};
//!
//! let reference = Waveform::sine(440.0, 0.5, 4096, 16_000);
//! let estimate = Waveform::sine(440.0, 0.4, 4096, 16_000);
//! let loss = hybrid_loss(&estimate, &reference, &HybridConfig::default()).unwrap();
//! assert!(loss.value.is_finite());
//! assert_eq!(loss.gradient.len(), 4096);
//! ```

pub mod cli;
pub mod delta;
pub mod demo;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod manifest;
pub mod metrics;
pub mod mixsim;
pub mod signal;
pub mod stft;
pub mod wav;

pub use delta::{acceleration, delta, delta_adjoint, DeltaConfig};
pub use demo::{
    apply_mask, optimize_mask, run_ab_experiment, synthetic_scenario, AbReport, ArmReport,
    LossKind, MaskParams,
};
pub use error::{Error, Result};
pub use loss::{
    delta_spectrum_loss, hybrid_loss, log_magnitude_delta, si_sdr_loss, spectral_convergence_delta,
    HybridConfig, LossResult,
};
pub use metrics::{
    edit_distance_rate, sdr_metric, si_sdr_metric, suppression_mae, EditDistanceReport,
    SuppressionReport, TokenUnit, TranscriptPair,
};
pub use mixsim::{
    derive_seed, fit_length, make_mixture, sample_mix_plan, scale_to_snr, MixResult, MixSpec,
};
pub use signal::Waveform;
pub use stft::{
    frame_signal, istft, magnitude, magnitude_stft_vjp, overlap_add, stft, ComplexSpectrogram,
    MagnitudeSpectrogram, StftConfig, WindowKind,
};
pub use wav::{load_wav, save_wav, WavEncoding};
