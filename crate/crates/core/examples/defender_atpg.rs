// SPDX-License-Identifier: Apache-2.0

//! The defender's stuck-at suite: fault list, random-pattern generation to
//! a coverage target, and a fault-simulation check of the result.

use tzlab::atpg::{enumerate_faults, fault_simulate, generate_tests, DEFAULT_BUDGET};
use tzlab::benchmarks;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [benchmarks::c17(), benchmarks::c432(), benchmarks::c880()] {
        let faults = enumerate_faults(&n);
        let suite = generate_tests(&n, 0.99, 1, DEFAULT_BUDGET)?;
        let check = fault_simulate(&n, &suite.patterns, &faults)?;
        println!(
            "{}: {} faults ({} detectable), {} patterns from {} draws, coverage {:.4}, {} detected",
            n.name(),
            faults.len(),
            suite.detectable,
            suite.patterns.count(),
            suite.draws,
            suite.coverage,
            check.detected_count()
        );
        for f in suite.undetected.iter().take(3) {
            println!("  undetected {f}");
        }
    }
    Ok(())
}
