//! Shared fixtures for the criterion benchmarks.

use bqd_core::frontend::solve;
use bqd_core::{DioSystem, Outcome, SearchOptions, SolvCert};
use num_bigint::BigInt;

/// `x² − 5^(2n+1)·y² = −1`, the anti-Pell family whose least solutions grow
/// like `(2 + √5)^(5^n)`.
pub fn anti_pell_system(n: u32) -> DioSystem {
    let d = BigInt::from(5).pow(2 * n + 1);
    let raw = [BigInt::from(1), BigInt::from(0), -d, BigInt::from(0), BigInt::from(0), BigInt::from(1)];
    DioSystem::normalize(raw, BigInt::from(1), [BigInt::from(0), BigInt::from(0)]).expect("valid side conditions")
}

/// The infrastructure certificate for [`anti_pell_system`].
pub fn anti_pell_certificate(n: u32) -> SolvCert {
    let sys = anti_pell_system(n);
    let options = SearchOptions { force_cert: true, fp_precision: None };
    match solve(&sys, &options).expect("search stays within its bounds") {
        Outcome::Solvable(cert) => cert,
        Outcome::Unsolvable => unreachable!("the anti-Pell family is solvable"),
    }
}
