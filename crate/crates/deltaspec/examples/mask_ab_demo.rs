//! Optimize a free time-frequency mask on the built-in synthetic mixture
//! under the SI-SDR-only and hybrid objectives, then compare suppression
//! behavior. A reduced step budget keeps this example quick; the `demo`
//! subcommand runs the full-length experiment.
//!
//! Run with: `cargo run --release --example mask_ab_demo`

use deltaspec::{run_ab_experiment, synthetic_scenario};

fn main() {
    let steps = 120;
    let report = run_ab_experiment(&synthetic_scenario(), steps, 0.8, 17).unwrap();

    println!(
        "unprocessed mixture: {:+.3} dB SI-SDR",
        report.mixture_si_sdr_db
    );
    for arm in &report.arms {
        println!(
            "{:11}: SI-SDR {:+.3} dB | MAE over {:.6} | MAE under {:.6} | loss {:+.3} -> {:+.3}",
            arm.loss_name,
            arm.final_si_sdr_db,
            arm.mae_over,
            arm.mae_under,
            arm.loss_curve.first().unwrap(),
            arm.loss_curve.last().unwrap(),
        );
    }

    let (si, hy) = (&report.arms[0], &report.arms[1]);
    let reduction = 100.0 * (si.mae_over - hy.mae_over) / si.mae_over;
    println!("hybrid training reduced over-suppression MAE by {reduction:.1}%");
}
