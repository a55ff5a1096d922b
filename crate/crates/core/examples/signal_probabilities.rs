// SPDX-License-Identifier: Apache-2.0

//! Signal probabilities three ways on c17, then the near-constant nets of
//! c880 that an attacker would try to salvage.

use tzlab::benchmarks;
use tzlab::probability::{exact_probs, find_candidates, monte_carlo_probs, propagate_uniform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c17 = benchmarks::c17();
    let exact = exact_probs(&c17)?;
    let prop = propagate_uniform(&c17);
    let mc = monte_carlo_probs(&c17, 100_000, 3);
    println!(
        "{:>4} {:>8} {:>10} {:>10} {:>9}",
        "net", "exact", "propagated", "sampled", "stderr"
    );
    for (net, p) in exact.iter() {
        println!(
            "{net:>4} {p:>8.5} {:>10.5} {:>10.5} {:>9.2e}",
            prop.p1(net).unwrap(),
            mc.p1(net).unwrap(),
            mc.stderr(net).unwrap()
        );
    }

    // Reconvergence makes propagation approximate on c880.
    let c880 = benchmarks::c880();
    let probs = propagate_uniform(&c880);
    for p_th in [0.95, 0.975, 0.992] {
        let c = find_candidates(&probs, &c880, p_th)?;
        println!(
            "c880 P_th {p_th}: |C| = {} (|X| = {}, |Y| = {})",
            c.len(),
            c.x.len(),
            c.y.len()
        );
    }
    let c = find_candidates(&probs, &c880, 0.992)?;
    for cand in c.c.iter().take(5) {
        println!("  {} -> {} (p = {:.4})", cand.net, cand.value as u8, cand.extremity);
    }
    Ok(())
}
