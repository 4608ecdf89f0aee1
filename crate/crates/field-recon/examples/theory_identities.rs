//! Numerical verification of the analysis identities: the series expansion
//! of the Fourier matrix around mean positions, the displacement-averaged
//! first and second moments, the trace-functional / eigenvalue duality, and
//! the zero-jitter reductions. Equivalent to `field-recon verify`.

use field_recon::experiment::{verify, VerifyLevel};

fn main() {
    let outcomes = verify(VerifyLevel::Quick).expect("checks run");
    let mut all_ok = true;
    for o in &outcomes {
        println!(
            "[{}] {}: {}",
            if o.passed { "pass" } else { "FAIL" },
            o.name,
            o.detail
        );
        all_ok &= o.passed;
    }
    assert!(all_ok, "a verification check failed");
}
