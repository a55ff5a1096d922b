// SPDX-License-Identifier: Apache-2.0

//! The full attack on c880: salvage, insert the first template that fits the
//! freed budget, then face the defender. An additive 3-bit counter insertion
//! without salvage is shown for contrast.

use std::time::Instant;

use tzlab::atpg::{generate_tests, DefenderProfile, DEFAULT_BUDGET};
use tzlab::attack::{inject, salvage, AttackConfig, AttackError, InjectOptions, TrojanTemplate};
use tzlab::benchmarks;
use tzlab::costmodel::{CellLibrary, Workload};
use tzlab::detector::{evaluate_attack, DetectorConfig, Margins};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let start = Instant::now();
    let n = benchmarks::c880();
    let lib = CellLibrary::default();
    let workload = Workload::random(n.inputs().len(), 2000, 42);

    let suite = generate_tests(&n, 0.99, 1, DEFAULT_BUDGET)?;
    println!(
        "defender suite: {} patterns, coverage {:.4}",
        suite.patterns.count(),
        suite.coverage
    );
    let defender = DefenderProfile::new(vec![suite], Margins::default())?;

    let (n_prime, s) = salvage(&n, &defender, 0.992, &lib, &workload)?;
    println!(
        "salvage: |C| = {}, accepted {}, E_g = {} {:?}",
        s.candidates,
        s.accepted(),
        s.e_g,
        s.expendable
    );
    println!(
        "  freed area {:.2} GE, leakage {:.3}, dynamic {:.3}",
        s.delta.d_area, s.delta.d_leak, s.delta.d_dyn
    );

    let templates = AttackConfig::default().templates;
    let opts = InjectOptions::default();
    let (infected, ht, report) = match inject(&n, &n_prime, &templates, &defender, &lib, &workload, &opts) {
        Ok(found) => found,
        Err(AttackError::Exhausted(report)) => {
            println!("inject: budget exhausted after {} attempts", report.tried.len());
            for t in &report.tried {
                println!("  {t:?}");
            }
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let d = report.delta.as_ref().expect("delta on success");
    println!(
        "inject: {} taps {:?} (rare {:?}) -> target {}, {} rejected pairs, {} dummies",
        ht.template.label(),
        ht.taps,
        ht.rare,
        ht.target,
        report.tried.len(),
        report.dummies.len()
    );
    println!(
        "  residual vs original: total {:+.3}%, dynamic {:+.3}%, leakage {:+.3}%, area {:+.3}%",
        -100.0 * d.frac_total,
        -100.0 * d.frac_dyn,
        -100.0 * d.frac_leak,
        -100.0 * d.frac_area
    );
    if let Some(p) = &report.p_ft {
        println!(
            "  P_ft over {} patterns: {:.2e} (p_e {:.2e})",
            p.patterns, p.analytic, p.p_e
        );
    }

    let config = DetectorConfig::default();
    let verdict = evaluate_attack(&n, &infected, &defender, &lib, &workload, &config)?;
    println!("detector on N'': {:?} {:?}", verdict.overall, verdict.reasons);

    let additive = InjectOptions {
        enforce_budget: false,
        ..InjectOptions::default()
    };
    let (control, _, _) = inject(
        &n,
        &n,
        &[TrojanTemplate::counter(3)],
        &defender,
        &lib,
        &workload,
        &additive,
    )?;
    let verdict = evaluate_attack(&n, &control, &defender, &lib, &workload, &config)?;
    println!(
        "detector on additive control: {:?} {:?} (area {:+.2}%)",
        verdict.overall,
        verdict.reasons,
        100.0 * verdict.screens.area.excess
    );
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
