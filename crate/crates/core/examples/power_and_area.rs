// SPDX-License-Identifier: Apache-2.0

//! Area, leakage and workload-driven dynamic power from the cell library,
//! and the delta between two netlists.

use tzlab::benchmarks;
use tzlab::costmodel::{cost_report, delta, CellLibrary, Workload};
use tzlab::netlist::{replace_with_constant, sweep_dead_gates};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lib = CellLibrary::default();
    let nand = lib.cost(tzlab::GateKind::Nand, 2)?;
    println!(
        "NAND2: {} GE, leakage {}, toggle energy {}",
        nand.area_ge, nand.leak, nand.e_toggle
    );
    for n in [benchmarks::c17(), benchmarks::c432(), benchmarks::c880()] {
        let w = Workload::random(n.inputs().len(), 2000, 42);
        let r = cost_report(&n, &lib, &w)?;
        println!(
            "{}: area {:.2} GE, leakage {:.3}, dynamic {:.3}, total {:.3}",
            n.name(),
            r.area_ge,
            r.p_leak,
            r.p_dyn,
            r.p_total
        );
    }

    let c17 = benchmarks::c17();
    let w = Workload::random(5, 2000, 42);
    let (cut, removed) = sweep_dead_gates(&replace_with_constant(&c17, "16", true)?);
    let d = delta(&cost_report(&c17, &lib, &w)?, &cost_report(&cut, &lib, &w)?)?;
    println!(
        "c17 with net 16 tied high: {} gates swept, area -{:.2} GE ({:.1}%), total power -{:.1}%",
        removed.len(),
        d.d_area,
        100.0 * d.frac_area,
        100.0 * d.frac_total
    );
    Ok(())
}
