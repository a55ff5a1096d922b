// SPDX-License-Identifier: Apache-2.0

//! Bundled ISCAS85 benchmark netlists.

use crate::netlist::{parse_bench, Netlist};

pub const C17_BENCH: &str = include_str!("../data/iscas85/c17.bench");
pub const C432_BENCH: &str = include_str!("../data/iscas85/c432.bench");
pub const C880_BENCH: &str = include_str!("../data/iscas85/c880.bench");

fn load(text: &str, name: &str) -> Netlist {
    parse_bench(text)
        .unwrap_or_else(|e| panic!("bundled {name} is malformed: {e}"))
        .with_name(name)
}

pub fn c17() -> Netlist {
    load(C17_BENCH, "c17")
}

pub fn c432() -> Netlist {
    load(C432_BENCH, "c432")
}

pub fn c880() -> Netlist {
    load(C880_BENCH, "c880")
}

/// Looks up a bundled benchmark by name (`c17`, `c432`, `c880`).
pub fn by_name(name: &str) -> Option<Netlist> {
    match name {
        "c17" => Some(c17()),
        "c432" => Some(c432()),
        "c880" => Some(c880()),
        _ => None,
    }
}
