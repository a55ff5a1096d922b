// SPDX-License-Identifier: Apache-2.0

//! Salvaging on c880 at several defender coverages. A tie-off behaves like a
//! stuck-at fault, so a stronger suite leaves less to salvage.

use tzlab::atpg::{generate_tests, DefenderProfile, DEFAULT_BUDGET};
use tzlab::attack::{salvage, StepOutcome};
use tzlab::benchmarks;
use tzlab::costmodel::{CellLibrary, Workload};
use tzlab::detector::{functional_test, Margins};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = benchmarks::c880();
    let lib = CellLibrary::default();
    let workload = Workload::random(n.inputs().len(), 2000, 42);
    for target in [0.99, 0.95, 0.90] {
        let suite = generate_tests(&n, target, 1, DEFAULT_BUDGET)?;
        let patterns = suite.patterns.count();
        let defender = DefenderProfile::new(vec![suite], Margins::default())?;
        let (n_prime, r) = salvage(&n, &defender, 0.992, &lib, &workload)?;
        let reverted = r
            .log
            .iter()
            .filter(|s| matches!(s.outcome, StepOutcome::Reverted { .. }))
            .count();
        let passes = functional_test(&n_prime, &n, &defender)?.pass;
        println!(
            "coverage {target} ({patterns} patterns): |C| = {}, accepted {}, reverted {reverted}, E_g = {}, \
             freed {:.2} GE ({:.2}%), leakage {:.3}, dynamic {:.4}, suite passes: {passes}",
            r.candidates,
            r.accepted(),
            r.e_g,
            r.delta.d_area,
            100.0 * r.delta.frac_area,
            r.delta.d_leak,
            r.delta.d_dyn
        );
    }
    Ok(())
}
