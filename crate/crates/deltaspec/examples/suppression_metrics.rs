//! Measure over- and under-suppression of two degraded estimates: one that
//! attenuates the reference (over-suppression) and one that keeps residual
//! interference (under-suppression).
//!
//! Run with: `cargo run --example suppression_metrics`

use deltaspec::{sdr_metric, si_sdr_metric, suppression_mae, StftConfig, Waveform};

fn main() {
    let sample_rate = 16_000;
    let n = 16_000;
    let reference = Waveform::sine(440.0, 0.5, n, sample_rate);
    let interference = Waveform::sine(290.0, 0.5, n, sample_rate);
    let config = StftConfig::suppression_default();

    // over-suppressing estimate: target attenuated to 40%
    let quiet = Waveform {
        samples: reference.samples.iter().map(|s| 0.4 * s).collect(),
        sample_rate,
    };
    // under-suppressing estimate: full target plus leaked interference
    let leaky = Waveform {
        samples: reference
            .samples
            .iter()
            .zip(&interference.samples)
            .map(|(r, i)| r + 0.3 * i)
            .collect(),
        sample_rate,
    };

    for (name, estimate) in [("attenuated", &quiet), ("leaky", &leaky)] {
        let report = suppression_mae(estimate, &reference, &config).unwrap();
        println!(
            "{name:11}: MAE over {:.6}  under {:.6}  | SI-SDR {:+7.2} dB  SDR {:+7.2} dB",
            report.mae_over,
            report.mae_under,
            si_sdr_metric(estimate, &reference).unwrap(),
            sdr_metric(estimate, &reference).unwrap(),
        );
    }
    println!("(the attenuated estimate loads mae_over, the leaky one mae_under)");
}
