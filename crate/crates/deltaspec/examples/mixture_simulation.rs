//! Sample mixture plans from a pool of synthetic utterances, build the
//! mixtures, verify the realized SNRs, and write a few WAV files.
//!
//! Run with: `cargo run --example mixture_simulation`

use deltaspec::mixsim::{derive_seed, measured_snr_db, DEFAULT_INTERFERENCE_SNR_DB};
use deltaspec::{make_mixture, sample_mix_plan, save_wav, WavEncoding, Waveform};

fn main() {
    let sample_rate = 16_000;
    let target = Waveform::linear_chirp(220.0, 880.0, 0.5, 32_000, sample_rate);
    let pool: Vec<Waveform> = (0..8)
        .map(|i| {
            Waveform::sine(
                150.0 + 55.0 * i as f64,
                0.4,
                24_000 + 2_000 * i,
                sample_rate,
            )
        })
        .collect();

    let out_dir = std::env::temp_dir().join("deltaspec_mixtures");
    std::fs::create_dir_all(&out_dir).unwrap();

    let base_seed = 2024;
    for i in 0..5u64 {
        let plan = sample_mix_plan(
            &target,
            &pool,
            derive_seed(base_seed, i),
            DEFAULT_INTERFERENCE_SNR_DB,
            None,
            None,
        )
        .unwrap();
        let result = make_mixture(&plan).unwrap();
        let realized = measured_snr_db(&target, &result.scaled_components[0]);
        let path = out_dir.join(format!("mixture_{i}.wav"));
        save_wav(&result.mixture, &path, WavEncoding::Float32).unwrap();
        println!(
            "mixture {i}: requested {:+7.3} dB, realized {:+7.3} dB, {} samples -> {}",
            plan.interference_snr_db[0],
            realized,
            result.mixture.len(),
            path.display()
        );
    }
}
