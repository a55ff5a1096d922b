// SPDX-License-Identifier: Apache-2.0

//! Untargeted exposure: the share of the input space on which a salvaged
//! circuit disagrees with the original.

use tzlab::attack::{untargeted_prob, untargeted_ratio};
use tzlab::logicsim::exhaustive_diff;
use tzlab::netlist::{replace_with_constant, sweep_dead_gates};
use tzlab::parse_bench;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // r = OR of four inputs is 0 on one pattern in 16.
    let n = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nOUTPUT(y)\n\
         u = OR(a, b)\nv = OR(c, d)\nr = OR(u, v)\ny = AND(r, e)\n",
    )?;
    let (tied, removed) = sweep_dead_gates(&replace_with_constant(&n, "r", true)?);
    let n_u = exhaustive_diff(&n, &tied)?;
    let inputs = n.inputs().len() as u32;
    println!(
        "tie r to 1 ({} gates swept): N_u = {n_u} of {} patterns, P_u = {} = {}",
        removed.len(),
        1u64 << inputs,
        untargeted_ratio(n_u as u128, inputs)?,
        untargeted_prob(n_u as u128, inputs)?
    );
    for width in [16u32, 32, 64] {
        println!("one bad pattern in 2^{width}: P_u = {:e}", untargeted_prob(1, width)?);
    }
    Ok(())
}
