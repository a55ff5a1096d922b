// SPDX-License-Identifier: Apache-2.0

//! Shared test helpers: seeded random circuits and scalar reference
//! evaluation written independently of the library's simulators.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use tzlab::atpg::{Fault, FaultSite};
use tzlab::{Gate, GateKind, Netlist};

const COMB_KINDS: [GateKind; 9] = [
    GateKind::And,
    GateKind::Nand,
    GateKind::Or,
    GateKind::Nor,
    GateKind::Xor,
    GateKind::Xnor,
    GateKind::Not,
    GateKind::Buff,
    GateKind::Mux2,
];

fn fanin_for<R: Rng>(kind: GateKind, rng: &mut R) -> usize {
    match kind {
        GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => rng.random_range(2..=4),
        GateKind::Xor | GateKind::Xnor => 2,
        GateKind::Mux2 => 3,
        GateKind::Not | GateKind::Buff => 1,
        _ => 0,
    }
}

/// A random combinational netlist with `1..=max_inputs` inputs and
/// `1..=max_gates` gates. Every gate nobody reads is an output, plus a few
/// more picked at random. Constants appear occasionally.
pub fn random_comb<R: Rng>(rng: &mut R, max_inputs: usize, max_gates: usize) -> Netlist {
    let inputs: Vec<String> = (0..rng.random_range(1..=max_inputs)).map(|i| format!("i{i}")).collect();
    let mut nets = inputs.clone();
    let mut gates = Vec::new();
    for g in 0..rng.random_range(1..=max_gates) {
        let out = format!("g{g}");
        let kind = if rng.random_bool(0.03) {
            if rng.random_bool(0.5) {
                GateKind::Const0
            } else {
                GateKind::Const1
            }
        } else {
            *COMB_KINDS.choose(rng).unwrap()
        };
        let ins: Vec<&str> = (0..fanin_for(kind, rng))
            .map(|_| nets.choose(rng).unwrap().as_str())
            .collect();
        gates.push(Gate::new(&out, kind, &ins));
        nets.push(out);
    }
    let read: std::collections::HashSet<&str> =
        gates.iter().flat_map(|g| g.inputs.iter().map(String::as_str)).collect();
    let mut outputs: Vec<String> = gates
        .iter()
        .filter(|g| !read.contains(g.output.as_str()) || rng.random_bool(0.1))
        .map(|g| g.output.clone())
        .collect();
    outputs.dedup();
    Netlist::new("random", inputs, outputs, gates).expect("generated netlist is valid")
}

/// A random fanout-free tree: every net is read at most once and the root
/// is the only output.
pub fn random_tree<R: Rng>(rng: &mut R, max_inputs: usize) -> Netlist {
    let n_inputs = rng.random_range(2..=max_inputs);
    let inputs: Vec<String> = (0..n_inputs).map(|i| format!("i{i}")).collect();
    let mut free = inputs.clone();
    let mut gates = Vec::new();
    let mut next = 0;
    while free.len() > 1 || gates.is_empty() {
        let kind = *COMB_KINDS.choose(rng).unwrap();
        let want = fanin_for(kind, rng).min(free.len());
        if !kind.arity().contains(&want) {
            continue;
        }
        let mut ins = Vec::with_capacity(want);
        for _ in 0..want {
            let k = rng.random_range(0..free.len());
            ins.push(free.swap_remove(k));
        }
        let out = format!("g{next}");
        next += 1;
        let refs: Vec<&str> = ins.iter().map(String::as_str).collect();
        gates.push(Gate::new(&out, kind, &refs));
        free.push(out);
    }
    Netlist::new("tree", inputs, free, gates).expect("generated tree is valid")
}

/// Gate semantics from their truth-table definitions.
pub fn oracle_gate(kind: GateKind, ins: &[bool]) -> bool {
    let ones = ins.iter().filter(|&&b| b).count();
    match kind {
        GateKind::And => ones == ins.len(),
        GateKind::Nand => ones != ins.len(),
        GateKind::Or => ones > 0,
        GateKind::Nor => ones == 0,
        GateKind::Xor => ones % 2 == 1,
        GateKind::Xnor => ones % 2 == 0,
        GateKind::Not => !ins[0],
        GateKind::Buff | GateKind::Dff => ins[0],
        GateKind::Mux2 => [ins[1], ins[2]][ins[0] as usize],
        GateKind::Const0 => false,
        GateKind::Const1 => true,
    }
}

/// Scalar evaluation of a combinational netlist with an optional single
/// stuck-at fault, by memoised recursion from the outputs. Gate order in
/// the netlist is not relied upon.
pub struct ScalarEval<'a> {
    n: &'a Netlist,
    by_output: HashMap<&'a str, &'a Gate>,
}

impl<'a> ScalarEval<'a> {
    pub fn new(n: &'a Netlist) -> Self {
        ScalarEval {
            n,
            by_output: n.gates().iter().map(|g| (g.output.as_str(), g)).collect(),
        }
    }

    pub fn outputs(&self, row: &[bool], fault: Option<&Fault>) -> Vec<bool> {
        let mut memo: HashMap<&str, bool> = HashMap::new();
        self.n
            .outputs()
            .iter()
            .map(|o| self.net(o, row, fault, &mut memo))
            .collect()
    }

    pub fn all_nets(&self, row: &[bool]) -> HashMap<String, bool> {
        let mut memo: HashMap<&str, bool> = HashMap::new();
        for net in self.n.nets() {
            self.net(net, row, None, &mut memo);
        }
        memo.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn net(&self, net: &'a str, row: &[bool], fault: Option<&Fault>, memo: &mut HashMap<&'a str, bool>) -> bool {
        if let Some(f) = fault {
            if f.site == FaultSite::Stem && f.net == net {
                return f.stuck;
            }
        }
        if let Some(&v) = memo.get(net) {
            return v;
        }
        let v = match self.by_output.get(net) {
            Some(g) => {
                let ins: Vec<bool> = g
                    .inputs
                    .iter()
                    .enumerate()
                    .map(|(pin, i)| match fault {
                        Some(Fault {
                            net: fnet,
                            stuck,
                            site: FaultSite::Branch { reader, pin: fpin },
                        }) if fnet == i && *reader == g.output && *fpin == pin => *stuck,
                        _ => self.net(i, row, fault, memo),
                    })
                    .collect();
                oracle_gate(g.kind, &ins)
            }
            None => {
                let i = self.n.inputs().iter().position(|p| p == net).expect("net is driven");
                row[i]
            }
        };
        memo.insert(net, v);
        v
    }
}
