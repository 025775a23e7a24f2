//! Round-trip a random signal through the forward and inverse STFT at the
//! three analysis resolutions and report interior reconstruction error.
//!
//! Run with: `cargo run --example stft_roundtrip`

use deltaspec::{istft, stft, StftConfig, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 4096;
    let wave = Waveform {
        samples: (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        sample_rate: 16_000,
    };
    let peak = wave.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));

    for cfg in StftConfig::resolution_bank() {
        let spec = stft(&wave, &cfg).unwrap();
        let back = istft(&spec).unwrap();
        let mut max_err = 0.0f64;
        for t in cfg.win_length..n - cfg.win_length {
            max_err = max_err.max((back.samples[t] - wave.samples[t]).abs());
        }
        println!(
            "fft {:4} hop {:3} win {:4}: {:3} frames x {:4} bins, interior error {:.3e} relative",
            cfg.fft_size,
            cfg.hop,
            cfg.win_length,
            spec.data.nrows(),
            spec.data.ncols(),
            max_err / peak
        );
    }
}
