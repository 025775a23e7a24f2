//! Verify every analytic gradient against central finite differences.
//!
//! Run with: `cargo run --example gradient_check`

use deltaspec::gradcheck::{run_gradient_checks, DEFAULT_TOLERANCE};
use deltaspec::StftConfig;

fn main() {
    let report =
        run_gradient_checks(11, 4096, &StftConfig::resolution_bank(), DEFAULT_TOLERANCE).unwrap();
    for check in &report.checks {
        println!(
            "{:32} max relative error {:.3e}  {}",
            check.name,
            check.max_rel_err,
            if check.max_rel_err <= report.tolerance {
                "ok"
            } else {
                "FAIL"
            }
        );
    }
    assert!(report.all_pass());
    println!("all gradients within {:.0e}", report.tolerance);
}
