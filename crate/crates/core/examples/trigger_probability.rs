// SPDX-License-Identifier: Apache-2.0

//! How a counter trigger hides from testing: analytic binomial tail against
//! seeded Monte Carlo sessions, for a few event rates and counter widths.

use tzlab::attack::{binomial_tail, trigger_prob, TrojanTemplate};
use tzlab::attack::{instantiate_ht, TrojanInstance};
use tzlab::netlist::insert_subcircuit;
use tzlab::parse_bench;
use tzlab::probability::propagate_uniform;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("P[fire within 1000 patterns] by event rate and counter width");
    for p_e in [1e-2, 1e-3, 1e-4] {
        let row: Vec<String> = (2..=4)
            .map(|k| binomial_tail(1000, p_e, (1 << k) - 1).map(|v| format!("{v:.3e}")))
            .collect::<Result<_, _>>()?;
        println!("  p_e {p_e:.0e}: k=2 {}  k=3 {}  k=4 {}", row[0], row[1], row[2]);
    }

    // A tap that is 1 with probability 2^-9 drives a 3-bit counter.
    let mut text = String::new();
    for i in 0..10 {
        text.push_str(&format!("INPUT(x{i})\n"));
    }
    text.push_str("OUTPUT(z)\nt = AND(x0, x1, x2, x3, x4, x5, x6, x7, x8)\nz = NOT(x9)\n");
    let host = parse_bench(&text)?;
    let template = TrojanTemplate::counter(3);
    let sub = instantiate_ht(&template, &[true])?;
    let placed = insert_subcircuit(&host, &sub, &["t".into()], "z")?;
    let ht = TrojanInstance {
        template,
        taps: vec!["t".into()],
        rare: vec![true],
        target: "z".into(),
        location: 0,
        subcircuit: sub,
        host_nets: placed.renamed.clone(),
    };
    let probs = propagate_uniform(&placed.netlist);
    for t in [1000, 3000, 10_000] {
        let est = trigger_prob(&placed.netlist, &ht, &probs, t, 200_000, 11)?;
        let mc = est.monte_carlo.as_ref().expect("trials requested");
        println!(
            "T = {t}: analytic {:.4e}, sampled {:.4e} [{:.4e}, {:.4e}]",
            est.analytic, mc.estimate, mc.ci_low, mc.ci_high
        );
    }
    Ok(())
}
