//! Compute the time-domain, frequency-domain, and hybrid losses for a
//! degraded estimate, and show how the hybrid value decomposes.
//!
//! Run with: `cargo run --example hybrid_loss`

use deltaspec::{
    delta_spectrum_loss, hybrid_loss, si_sdr_loss, DeltaConfig, HybridConfig, Waveform,
};

fn main() {
    let sample_rate = 16_000;
    let n = 8_000;
    // a moving target so the delta-feature terms see real trajectories
    let reference = Waveform::linear_chirp(330.0, 880.0, 0.5, n, sample_rate);

    // estimate: attenuated reference plus an interfering tone
    let interference = Waveform::sine(297.0, 0.2, n, sample_rate);
    let estimate = Waveform {
        samples: reference
            .samples
            .iter()
            .zip(&interference.samples)
            .map(|(r, i)| 0.7 * r + i)
            .collect(),
        sample_rate,
    };

    let si = si_sdr_loss(&estimate, &reference, false).unwrap();
    println!(
        "SI-SDR loss:          {:+.4}  (negative SI-SDR in dB)",
        si.value
    );

    let cfg = HybridConfig::default();
    for resolution in &cfg.resolutions {
        let term = delta_spectrum_loss(&estimate, &reference, resolution, &DeltaConfig::default())
            .unwrap();
        println!(
            "delta spectrum @ fft {:4}: {:+.4}",
            resolution.fft_size, term.value
        );
    }

    let hybrid = hybrid_loss(&estimate, &reference, &cfg).unwrap();
    println!("hybrid loss:          {:+.4}", hybrid.value);
    println!(
        "gradient: {} samples, max magnitude {:.3e}",
        hybrid.gradient.len(),
        hybrid.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()))
    );

    // the hybrid value is SI-SDR plus gamma times the mean frequency term
    let mut freq = 0.0;
    for resolution in &cfg.resolutions {
        freq += delta_spectrum_loss(&estimate, &reference, resolution, &cfg.delta)
            .unwrap()
            .value;
    }
    let recomposed = si.value + cfg.gamma * freq / cfg.resolutions.len() as f64;
    println!("recomposed:           {:+.4}  (identical)", recomposed);
    assert_eq!(hybrid.value, recomposed);
}
