// SPDX-License-Identifier: Apache-2.0

//! Parse a `.bench` netlist, simulate it on every input pattern, and check
//! a hand-edited copy for equivalence.

use tzlab::logicsim::{equivalent_on, simulate_comb, simulate_seq, PatternBlock};
use tzlab::netlist::replace_with_constant;
use tzlab::{parse_bench, write_bench};

const TEXT: &str = "\
# 2-bit comparator with a registered flag
INPUT(a1)
INPUT(a0)
INPUT(b1)
INPUT(b0)
OUTPUT(eq)
OUTPUT(seen)
x1 = XNOR(a1, b1)
x0 = XNOR(a0, b0)
eq = AND(x1, x0)
seen = DFF(hold)
hold = OR(seen, eq)
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = parse_bench(TEXT)?;
    println!(
        "{} inputs, {} outputs, {} gates ({} DFF)",
        n.inputs().len(),
        n.outputs().len(),
        n.gates().len(),
        n.dff_count()
    );
    print!("{}", write_bench(&n));

    let steps = PatternBlock::from_strings(4, &["0110", "1010", "0000", "1100"])?;
    let trace = simulate_seq(&n, &steps)?;
    for t in 0..trace.steps() {
        println!(
            "step {t}: eq={} seen={}",
            trace.value("eq", t).unwrap() as u8,
            trace.value("seen", t).unwrap() as u8
        );
    }

    let comb = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\nu = AND(a, b)\ny = OR(u, c)\n")?;
    let all = PatternBlock::exhaustive(3)?;
    print!("truth table of y:\n{}", simulate_comb(&comb, &all)?.to_text());
    let tied = replace_with_constant(&comb, "u", false)?;
    let eq = equivalent_on(&comb, &tied, &all)?;
    println!(
        "tie u to 0: equivalent = {}, counterexample {:?}",
        eq.pass, eq.counterexample
    );
    Ok(())
}
