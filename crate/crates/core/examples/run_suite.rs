//! Runs every named sweep, negative controls included, and prints a table.
//!
//! `cargo run --release --example run_suite`

use std::time::Instant;

use heisenberg_rch::suite::{run_check, CheckOptions, DEFAULT_CHECKS, NEGATIVE_CHECKS};

fn main() {
    let opts = CheckOptions::default();
    for name in DEFAULT_CHECKS.iter().chain(NEGATIVE_CHECKS) {
        let start = Instant::now();
        match run_check(name, &opts) {
            Ok(records) => {
                for r in records {
                    println!(
                        "{:<40} {:>6} {:>12.3e} {:>8.1e} {}",
                        r.name,
                        r.samples,
                        r.max_residual,
                        r.threshold,
                        if r.passed { "pass" } else { "FAIL" }
                    );
                }
                println!("  {name}: {:.2}s", start.elapsed().as_secs_f64());
            }
            Err(e) => println!("{name}: error: {e}"),
        }
    }
}
