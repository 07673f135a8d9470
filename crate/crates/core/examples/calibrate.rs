//! Calibrates the concrete strong-concavity constants by halving from 1/16
//! until a randomized suite shows no violation.
//!
//! ```text
//! cargo run --release -p logdet-ftrl --example calibrate -- [trials] [seed]
//! ```

use logdet_ftrl::verify;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(100_000);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(2024);

    let mut c = 1.0 / 16.0;
    loop {
        let report = verify::payoff_modulus_suite(trials, seed, c)?;
        println!("{report}");
        if report.passed() {
            break;
        }
        c *= 0.5;
    }
    println!("payoff modulus constant: {c}");

    let mut c = 1.0 / 16.0;
    loop {
        let report = verify::logdet_suite(trials, seed, c)?;
        println!("{report}");
        if report.passed() {
            break;
        }
        c *= 0.5;
    }
    println!("logdet concavity constant: {c}");
    Ok(())
}
