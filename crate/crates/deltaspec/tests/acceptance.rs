//! End-to-end acceptance suite. Each test prints one pass/fail line with the
//! measured quantities; run with `--nocapture` to see them.

use std::time::Instant;

use deltaspec::delta::{delta, delta_adjoint, DeltaConfig};
use deltaspec::demo::{
    run_ab_experiment, synthetic_scenario, DEFAULT_LEARNING_RATE, DEFAULT_SEED, DEFAULT_STEPS,
};
use deltaspec::gradcheck::run_gradient_checks;
use deltaspec::loss::{delta_spectrum_loss, hybrid_loss, si_sdr_loss, HybridConfig};
use deltaspec::metrics::{edit_distance_rate, suppression_mae, TranscriptPair};
use deltaspec::mixsim::{derive_seed, make_mixture, measured_snr_db, sample_mix_plan};
use deltaspec::signal::Waveform;
use deltaspec::stft::{frame_signal, istft, magnitude, stft, StftConfig};
use deltaspec::wav::{save_wav, WavEncoding};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

fn verdict(criterion: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({name}) failed: {detail}");
}

fn random_wave(len: usize, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Waveform {
        samples: (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        sample_rate: 16_000,
    }
}

#[test]
fn criterion_1_gradient_suite() {
    let start = Instant::now();
    let report = run_gradient_checks(11, 4096, &StftConfig::resolution_bank(), 1e-4).unwrap();
    let elapsed = start.elapsed();
    let worst = report
        .checks
        .iter()
        .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
        .unwrap();
    let ok = report.all_pass() && elapsed.as_secs() < 60;
    let detail = format!(
        "{} checks, worst {} at {:.3e}, tolerance 1e-4, {:.1}s",
        report.checks.len(),
        worst.name,
        worst.max_rel_err,
        elapsed.as_secs_f64()
    );
    verdict(1, "gradient suite", ok, &detail);
}

/// Naive per-frame DFT, the independent oracle for the FFT path.
fn dft_oracle(frame: &[f64], window: &[f64], fft_size: usize) -> Vec<Complex64> {
    (0..fft_size / 2 + 1)
        .map(|f| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &x) in frame.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (f * j) as f64 / fft_size as f64;
                acc += x * window[j] * Complex64::new(ang.cos(), ang.sin());
            }
            acc
        })
        .collect()
}

#[test]
fn criterion_2_stft_correctness() {
    let mut worst_dft = 0.0f64;
    for cfg in StftConfig::resolution_bank() {
        let wave = random_wave(2048, 7);
        let spec = stft(&wave, &cfg).unwrap();
        let frames = frame_signal(&wave, &cfg).unwrap();
        let window = cfg.window_values();
        let mut max_abs = 0.0f64;
        let mut max_err = 0.0f64;
        for k in 0..frames.nrows() {
            let row: Vec<f64> = (0..cfg.win_length).map(|j| frames[[k, j]]).collect();
            for (f, want) in dft_oracle(&row, &window, cfg.fft_size).iter().enumerate() {
                max_abs = max_abs.max(want.norm());
                max_err = max_err.max((spec.data[[k, f]] - want).norm());
            }
        }
        worst_dft = worst_dft.max(max_err / max_abs);
    }

    let mut worst_rt = 0.0f64;
    for cfg in StftConfig::resolution_bank() {
        let wave = random_wave(4096, 21);
        let back = istft(&stft(&wave, &cfg).unwrap()).unwrap();
        let max_abs = wave.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        for t in cfg.win_length..4096 - cfg.win_length {
            worst_rt = worst_rt.max((back.samples[t] - wave.samples[t]).abs() / max_abs);
        }
    }

    let ok = worst_dft <= 1e-10 && worst_rt <= 1e-6;
    let detail = format!(
        "naive-DFT rel err {worst_dft:.3e} (<= 1e-10), interior round-trip rel err {worst_rt:.3e} (<= 1e-6)"
    );
    verdict(2, "stft correctness", ok, &detail);
}

#[test]
fn criterion_3_delta_closed_forms() {
    let cfg = DeltaConfig::default();

    let constant = Array2::from_elem((9, 5), 3.7);
    let dc = delta(&constant, &cfg).unwrap();
    let const_ok = dc.iter().all(|&v| v == 0.0);

    let slope = 0.61;
    let ramp = Array2::from_shape_fn((12, 3), |(t, _)| slope * t as f64);
    let dr = delta(&ramp, &cfg).unwrap();
    let mut ramp_err = 0.0f64;
    for t in 2..10 {
        for b in 0..3 {
            ramp_err = ramp_err.max((dr[[t, b]] - slope).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut adjoint_err = 0.0f64;
    for _ in 0..50 {
        let x = Array2::from_shape_fn((8, 5), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((8, 5), |_| rng.random_range(-1.0..1.0));
        let lhs: f64 = delta(&x, &cfg)
            .unwrap()
            .iter()
            .zip(y.iter())
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = x
            .iter()
            .zip(delta_adjoint(&y, &cfg).unwrap().iter())
            .map(|(a, b)| a * b)
            .sum();
        adjoint_err = adjoint_err.max((lhs - rhs).abs());
    }

    let ok = const_ok && ramp_err <= 1e-12 && adjoint_err <= 1e-12;
    let detail = format!(
        "constant exactly zero: {const_ok}; ramp slope err {ramp_err:.3e}; adjoint identity err {adjoint_err:.3e} (<= 1e-12)"
    );
    verdict(3, "delta closed forms", ok, &detail);
}

#[test]
fn criterion_4_loss_identities() {
    let reference = random_wave(4096, 41);
    let noise = random_wave(4096, 42);
    let est = Waveform {
        samples: reference
            .samples
            .iter()
            .zip(&noise.samples)
            .map(|(r, n)| 0.8 * r + 0.4 * n)
            .collect(),
        sample_rate: 16_000,
    };

    // both frequency sub-losses vanish on identical magnitudes
    let cfg512 = StftConfig::new(512, 50, 240).unwrap();
    let m = magnitude(&stft(&reference, &cfg512).unwrap());
    let d = DeltaConfig::default();
    let (sc, _) = deltaspec::loss::spectral_convergence_delta(&m, &m, &d).unwrap();
    let (lm, _) = deltaspec::loss::log_magnitude_delta(&m, &m, &d).unwrap();
    let zero_ok = sc == 0.0 && lm == 0.0;

    // exact decomposition
    let hybrid_cfg = HybridConfig::default();
    let h = hybrid_loss(&est, &reference, &hybrid_cfg).unwrap();
    let s = si_sdr_loss(&est, &reference, false).unwrap();
    let mut freq_sum = 0.0;
    for res in &hybrid_cfg.resolutions {
        freq_sum += delta_spectrum_loss(&est, &reference, res, &hybrid_cfg.delta)
            .unwrap()
            .value;
    }
    let expected = s.value + hybrid_cfg.gamma * (freq_sum / hybrid_cfg.resolutions.len() as f64);
    let decomposition_ok = h.value == expected;

    // scale invariance over 100 random positive factors
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let base = s.value;
    let mut scale_err = 0.0f64;
    for _ in 0..100 {
        let a: f64 = 10f64.powf(rng.random_range(-2.0..2.0));
        let scaled = Waveform {
            samples: est.samples.iter().map(|s| a * s).collect(),
            sample_rate: 16_000,
        };
        let v = si_sdr_loss(&scaled, &reference, false).unwrap().value;
        scale_err = scale_err.max((v - base).abs() / base.abs().max(1.0));
    }

    let ok = zero_ok && decomposition_ok && scale_err <= 1e-10;
    let detail = format!(
        "sub-losses on identical inputs: ({sc}, {lm}); decomposition exact: {decomposition_ok}; scale-invariance rel err {scale_err:.3e} (<= 1e-10)"
    );
    verdict(4, "loss identities", ok, &detail);
}

#[test]
fn criterion_5_suppression_identities() {
    // hop 120 / window 600 suppression framing (1024-point FFT holds the
    // 600-sample window)
    let cfg = StftConfig::suppression_default();
    let mut worst_split = 0.0f64;
    let mut per_bin_exact = true;
    let mut swap_exact = true;
    for pair in 0..100u64 {
        let a = random_wave(1400, derive_seed(900, pair));
        let b = random_wave(1400, derive_seed(901, pair));
        let ab = suppression_mae(&a, &b, &cfg).unwrap();
        let ba = suppression_mae(&b, &a, &cfg).unwrap();
        swap_exact &= ab.mae_over == ba.mae_under && ab.mae_under == ba.mae_over;

        let am = magnitude(&stft(&a, &cfg).unwrap());
        let bm = magnitude(&stft(&b, &cfg).unwrap());
        let n = (am.data.nrows() * am.data.ncols()) as f64;
        let mut total = 0.0;
        for (e, r) in am.data.iter().zip(bm.data.iter()) {
            let d = r - e;
            per_bin_exact &= d.max(0.0) + (-d).max(0.0) == d.abs();
            total += d.abs();
        }
        total /= n;
        worst_split = worst_split.max(((ab.mae_over + ab.mae_under) - total).abs() / total);
    }
    let ok = per_bin_exact && swap_exact && worst_split <= 1e-12;
    let detail = format!(
        "per-bin ReLU split exact: {per_bin_exact}; swap antisymmetry exact: {swap_exact}; aggregate split rel err {worst_split:.3e} (<= 1e-12, float summation order)"
    );
    verdict(5, "suppression identities", ok, &detail);
}

#[test]
fn criterion_6_mixing_fidelity() {
    let sr = 16_000;
    let pool: Vec<Waveform> = (0..16)
        .map(|i| Waveform::sine(150.0 + 40.0 * i as f64, 0.4, 1800 + 90 * i, sr))
        .collect();
    let noise_pool: Vec<Waveform> = (0..8)
        .map(|i| random_wave(2200 + 60 * i, 7000 + i as u64))
        .collect();
    let target = Waveform::linear_chirp(220.0, 880.0, 0.5, 2000, sr);

    let mut worst_snr = 0.0f64;
    let mut lengths_ok = true;
    for i in 0..1000u64 {
        let plan = sample_mix_plan(
            &target,
            &pool,
            derive_seed(123, i),
            -10.0..=10.0,
            Some(&noise_pool),
            Some(-5.0..=15.0),
        )
        .unwrap();
        let result = make_mixture(&plan).unwrap();
        lengths_ok &= result.mixture.len() == target.len();
        let measured = measured_snr_db(&target, &result.scaled_components[0]);
        worst_snr = worst_snr.max((measured - plan.interference_snr_db[0]).abs());
        let noise_measured = measured_snr_db(&target, &result.scaled_components[1]);
        worst_snr = worst_snr.max((noise_measured - plan.noise_snr_db.unwrap()).abs());
    }

    // identical seeds reproduce byte-identical files
    let dir = tempfile::tempdir().unwrap();
    let mut bytes_ok = true;
    for i in 0..4u64 {
        let plan =
            sample_mix_plan(&target, &pool, derive_seed(5, i), -10.0..=10.0, None, None).unwrap();
        let mixture = make_mixture(&plan).unwrap().mixture;
        let p1 = dir.path().join(format!("a{i}.wav"));
        let p2 = dir.path().join(format!("b{i}.wav"));
        save_wav(&mixture, &p1, WavEncoding::Float32).unwrap();
        let plan2 =
            sample_mix_plan(&target, &pool, derive_seed(5, i), -10.0..=10.0, None, None).unwrap();
        let mixture2 = make_mixture(&plan2).unwrap().mixture;
        save_wav(&mixture2, &p2, WavEncoding::Float32).unwrap();
        bytes_ok &= std::fs::read(&p1).unwrap() == std::fs::read(&p2).unwrap();
    }

    let ok = worst_snr <= 1e-6 && lengths_ok && bytes_ok;
    let detail = format!(
        "1000 plans, worst SNR deviation {worst_snr:.3e} dB (<= 1e-6); lengths match: {lengths_ok}; byte-identical reruns: {bytes_ok}"
    );
    verdict(6, "mixing fidelity", ok, &detail);
}

#[test]
fn criterion_7_over_suppression_direction() {
    let start = Instant::now();
    let report = run_ab_experiment(
        &synthetic_scenario(),
        DEFAULT_STEPS,
        DEFAULT_LEARNING_RATE,
        DEFAULT_SEED,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let si = &report.arms[0];
    let hy = &report.arms[1];
    let direction = hy.mae_over <= si.mae_over;
    let gap = (hy.final_si_sdr_db - si.final_si_sdr_db).abs();
    let improvement_si = si.final_si_sdr_db - report.mixture_si_sdr_db;
    let improvement_hy = hy.final_si_sdr_db - report.mixture_si_sdr_db;
    let ok = direction
        && gap <= 1.0
        && improvement_si >= 5.0
        && improvement_hy >= 5.0
        && elapsed.as_secs() < 300;
    let detail = format!(
        "over-MAE {:.6} (hybrid) <= {:.6} (si-sdr): {direction}; SI-SDR gap {gap:.3} dB (<= 1.0); improvements {improvement_si:.2}/{improvement_hy:.2} dB (>= 5); {:.0}s (< 300)",
        hy.mae_over,
        si.mae_over,
        elapsed.as_secs_f64()
    );
    verdict(7, "over-suppression direction", ok, &detail);
}

#[test]
fn criterion_8_wer_plumbing() {
    let identical = edit_distance_rate(&TranscriptPair::words("a b c d", "a b c d")).unwrap();
    let one_sub = edit_distance_rate(&TranscriptPair::words("a b c d", "a b x d")).unwrap();
    let empty_hyp = edit_distance_rate(&TranscriptPair::words("v w x y z", "")).unwrap();
    let ok = identical.rate == 0.0
        && one_sub.rate == 0.25
        && one_sub.substitutions == 1
        && empty_hyp.rate == 1.0
        && empty_hyp.deletions == 5;
    let detail = format!(
        "identical {}, one-substitution-in-four {}, empty hypothesis {} ({} deletions)",
        identical.rate, one_sub.rate, empty_hyp.rate, empty_hyp.deletions
    );
    verdict(8, "wer plumbing", ok, &detail);
}
