// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlist graph.
//!
//! A [`Netlist`] is immutable once built: every constructor validates the
//! single-driver rule, resolves every reference and normalizes the gate list
//! into topological order (DFF outputs act as sources). Transformations in
//! [`transform`] return new netlists.

mod bench;
pub mod transform;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{parse_bench, write_bench};
pub use transform::{insert_subcircuit, replace_with_constant, sweep_dead_gates, Insertion, Subcircuit};

/// Widest AND/NAND/OR/NOR gate kept as a single cell.
pub const MAX_FANIN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported gate kind `{kind}` at line {line}")]
    UnsupportedGate { line: usize, kind: String },
    #[error("gate driving `{net}`: {kind} does not accept {got} inputs")]
    Arity { net: String, kind: GateKind, got: usize },
    #[error("net `{net}` is read but never driven")]
    UndrivenNet { net: String },
    #[error("net `{net}` has more than one driver")]
    DuplicateDriver { net: String },
    #[error("net `{net}` is declared as an output more than once")]
    DuplicateOutput { net: String },
    #[error("combinational cycle through net `{net}`")]
    CombinationalCycle { net: String },
    #[error("net `{net}` does not exist")]
    UnknownNet { net: String },
    #[error("net `{net}` is a primary input, not a gate output")]
    NotGateDriven { net: String },
    #[error("net `{net}` has no readers and is not a primary output")]
    UnobservedNet { net: String },
    #[error("net `{net}` is both a primary input and a primary output")]
    PortPassThrough { net: String },
    #[error("subcircuit: {0}")]
    Subcircuit(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buff,
    Mux2,
    Dff,
    Const0,
    Const1,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buff,
        GateKind::Mux2,
        GateKind::Dff,
        GateKind::Const0,
        GateKind::Const1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buff => "BUFF",
            GateKind::Mux2 => "MUX2",
            GateKind::Dff => "DFF",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn arity(self) -> RangeInclusive<usize> {
        match self {
            GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => 2..=MAX_FANIN,
            GateKind::Xor | GateKind::Xnor => 2..=2,
            GateKind::Not | GateKind::Buff | GateKind::Dff => 1..=1,
            GateKind::Mux2 => 3..=3,
            GateKind::Const0 | GateKind::Const1 => 0..=0,
        }
    }

    pub fn is_const(self) -> bool {
        matches!(self, GateKind::Const0 | GateKind::Const1)
    }

    /// AND/OR families whose cell cost scales with fan-in.
    pub fn is_variadic(self) -> bool {
        matches!(self, GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor)
    }

    /// The non-inverting kind used for the inner levels of a decomposed wide gate.
    pub(crate) fn tree_kind(self) -> Option<GateKind> {
        match self {
            GateKind::And | GateKind::Nand => Some(GateKind::And),
            GateKind::Or | GateKind::Nor => Some(GateKind::Or),
            GateKind::Xor | GateKind::Xnor => Some(GateKind::Xor),
            _ => None,
        }
    }

    /// Evaluates the gate on 64 packed patterns.
    #[inline]
    pub fn eval_word(self, inputs: &[u64]) -> u64 {
        match self {
            GateKind::And => inputs.iter().fold(!0, |acc, &x| acc & x),
            GateKind::Nand => !inputs.iter().fold(!0, |acc, &x| acc & x),
            GateKind::Or => inputs.iter().fold(0, |acc, &x| acc | x),
            GateKind::Nor => !inputs.iter().fold(0, |acc, &x| acc | x),
            GateKind::Xor => inputs.iter().fold(0, |acc, &x| acc ^ x),
            GateKind::Xnor => !inputs.iter().fold(0, |acc, &x| acc ^ x),
            GateKind::Not => !inputs[0],
            GateKind::Buff | GateKind::Dff => inputs[0],
            GateKind::Mux2 => (!inputs[0] & inputs[1]) | (inputs[0] & inputs[2]),
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
        }
    }

    /// Scalar reference semantics, kept independent of [`GateKind::eval_word`].
    pub fn eval_bool(self, inputs: &[bool]) -> bool {
        match self {
            GateKind::And => inputs.iter().all(|&x| x),
            GateKind::Nand => !inputs.iter().all(|&x| x),
            GateKind::Or => inputs.iter().any(|&x| x),
            GateKind::Nor => !inputs.iter().any(|&x| x),
            GateKind::Xor => inputs.iter().filter(|&&x| x).count() % 2 == 1,
            GateKind::Xnor => inputs.iter().filter(|&&x| x).count() % 2 == 0,
            GateKind::Not => !inputs[0],
            GateKind::Buff | GateKind::Dff => inputs[0],
            GateKind::Mux2 => {
                if inputs[0] {
                    inputs[2]
                } else {
                    inputs[1]
                }
            }
            GateKind::Const0 => false,
            GateKind::Const1 => true,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        match upper.as_str() {
            "BUF" => return Ok(GateKind::Buff),
            "MUX" => return Ok(GateKind::Mux2),
            _ => {}
        }
        GateKind::ALL.iter().copied().find(|k| k.name() == upper).ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub output: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
    /// Exempt from dead-gate sweeping (dummy padding cells).
    #[serde(default)]
    pub keep: bool,
}

impl Gate {
    pub fn new(output: impl Into<String>, kind: GateKind, inputs: &[&str]) -> Self {
        Gate {
            output: output.into(),
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            keep: false,
        }
    }

    pub fn kept(mut self) -> Self {
        self.keep = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Gate(usize),
}

#[derive(Clone, Debug)]
pub struct Netlist {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<Gate>,
    drivers: HashMap<String, Driver>,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.inputs == other.inputs && self.outputs == other.outputs && self.gates == other.gates
    }
}

impl Netlist {
    /// Validates and builds a netlist. Gates are reordered topologically;
    /// the relative order of independent gates is preserved.
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
        gates: Vec<Gate>,
    ) -> Result<Self, NetlistError> {
        for g in &gates {
            if !g.kind.arity().contains(&g.inputs.len()) {
                return Err(NetlistError::Arity {
                    net: g.output.clone(),
                    kind: g.kind,
                    got: g.inputs.len(),
                });
            }
        }
        let mut drivers = HashMap::with_capacity(inputs.len() + gates.len());
        for (i, pi) in inputs.iter().enumerate() {
            if drivers.insert(pi.clone(), Driver::Input(i)).is_some() {
                return Err(NetlistError::DuplicateDriver { net: pi.clone() });
            }
        }
        for (i, g) in gates.iter().enumerate() {
            if drivers.insert(g.output.clone(), Driver::Gate(i)).is_some() {
                return Err(NetlistError::DuplicateDriver { net: g.output.clone() });
            }
        }
        for g in &gates {
            if let Some(missing) = g.inputs.iter().find(|n| !drivers.contains_key(*n)) {
                return Err(NetlistError::UndrivenNet { net: missing.clone() });
            }
        }
        let mut seen = HashSet::new();
        for po in &outputs {
            if !drivers.contains_key(po) {
                return Err(NetlistError::UndrivenNet { net: po.clone() });
            }
            if !seen.insert(po) {
                return Err(NetlistError::DuplicateOutput { net: po.clone() });
            }
        }

        let order = topo_sort(&gates, &drivers)?;
        let mut slots: Vec<Option<Gate>> = gates.into_iter().map(Some).collect();
        let gates: Vec<Gate> = order.iter().map(|&i| slots[i].take().unwrap()).collect();
        for (i, g) in gates.iter().enumerate() {
            drivers.insert(g.output.clone(), Driver::Gate(i));
        }
        Ok(Netlist {
            name: name.into(),
            inputs,
            outputs,
            gates,
            drivers,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Gates in topological order.
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn driver(&self, net: &str) -> Option<Driver> {
        self.drivers.get(net).copied()
    }

    pub fn contains_net(&self, net: &str) -> bool {
        self.drivers.contains_key(net)
    }

    pub fn driving_gate(&self, net: &str) -> Option<&Gate> {
        match self.driver(net)? {
            Driver::Gate(i) => Some(&self.gates[i]),
            Driver::Input(_) => None,
        }
    }

    pub fn is_input(&self, net: &str) -> bool {
        matches!(self.driver(net), Some(Driver::Input(_)))
    }

    pub fn is_output(&self, net: &str) -> bool {
        self.outputs.iter().any(|o| o == net)
    }

    /// Primary inputs followed by gate outputs in topological order.
    pub fn nets(&self) -> impl Iterator<Item = &str> {
        self.inputs
            .iter()
            .map(String::as_str)
            .chain(self.gates.iter().map(|g| g.output.as_str()))
    }

    pub fn net_count(&self) -> usize {
        self.inputs.len() + self.gates.len()
    }

    pub fn has_dff(&self) -> bool {
        self.gates.iter().any(|g| g.kind == GateKind::Dff)
    }

    pub fn dff_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind == GateKind::Dff).count()
    }

    /// Readers of every net as (gate index, input pin).
    pub fn readers(&self) -> HashMap<&str, Vec<(usize, usize)>> {
        let mut map: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
        for (gi, g) in self.gates.iter().enumerate() {
            for (pin, net) in g.inputs.iter().enumerate() {
                map.entry(net.as_str()).or_default().push((gi, pin));
            }
        }
        map
    }

    /// Dense net index: primary inputs first, then gate outputs in gate order.
    pub fn net_index(&self) -> HashMap<&str, usize> {
        self.nets().enumerate().map(|(i, n)| (n, i)).collect()
    }

    /// Nets with a structural path to some primary output (through DFFs too).
    pub fn observable_nets(&self) -> HashSet<&str> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut stack: Vec<&str> = self.outputs.iter().map(String::as_str).collect();
        while let Some(net) = stack.pop() {
            if !seen.insert(net) {
                continue;
            }
            if let Some(g) = self.driving_gate(net) {
                stack.extend(g.inputs.iter().map(String::as_str));
            }
        }
        seen
    }

    /// Transitive fan-out of `net` (excluding `net` itself).
    pub fn fanout_cone(&self, net: &str) -> HashSet<&str> {
        let readers = self.readers();
        let mut seen: HashSet<&str> = HashSet::new();
        let mut stack = vec![net];
        while let Some(n) = stack.pop() {
            for &(gi, _) in readers.get(n).map(Vec::as_slice).unwrap_or(&[]) {
                let out = self.gates[gi].output.as_str();
                if seen.insert(out) {
                    stack.push(out);
                }
            }
        }
        seen
    }

    /// Transitive fan-in of the given nets, including the nets themselves.
    pub fn fanin_cone<'a>(&'a self, nets: &[&'a str]) -> HashSet<&'a str> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut stack: Vec<&str> = nets.to_vec();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let Some(g) = self.driving_gate(n) {
                stack.extend(g.inputs.iter().map(String::as_str));
            }
        }
        seen
    }

    /// Sub-netlist of the gates in the fan-in of `nets`; they become its outputs.
    pub fn cone(&self, nets: &[&str]) -> Result<Netlist, NetlistError> {
        for n in nets {
            if !self.contains_net(n) {
                return Err(NetlistError::UnknownNet { net: n.to_string() });
            }
        }
        let keep = self.fanin_cone(nets);
        let inputs = self
            .inputs
            .iter()
            .filter(|i| keep.contains(i.as_str()))
            .cloned()
            .collect();
        let gates = self
            .gates
            .iter()
            .filter(|g| keep.contains(g.output.as_str()))
            .cloned()
            .collect();
        let mut outputs: Vec<String> = Vec::new();
        for n in nets {
            if !outputs.iter().any(|o| o == n) {
                outputs.push(n.to_string());
            }
        }
        Netlist::new(format!("{}_cone", self.name), inputs, outputs, gates)
    }

    pub(crate) fn into_parts(self) -> (String, Vec<String>, Vec<String>, Vec<Gate>) {
        (self.name, self.inputs, self.outputs, self.gates)
    }
}

/// Topological gate order of a netlist: each gate follows the drivers of
/// its inputs, with DFF outputs treated as sources.
pub fn topo_order(n: &Netlist) -> Vec<usize> {
    topo_sort(&n.gates, &n.drivers).expect("validated netlist is acyclic")
}

fn topo_sort(gates: &[Gate], drivers: &HashMap<String, Driver>) -> Result<Vec<usize>, NetlistError> {
    let mut pending = vec![0usize; gates.len()];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (gi, g) in gates.iter().enumerate() {
        for net in &g.inputs {
            if let Some(Driver::Gate(src)) = drivers.get(net) {
                // A DFF output is available before any evaluation.
                if gates[*src].kind != GateKind::Dff {
                    pending[gi] += 1;
                    dependents[*src].push(gi);
                }
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = pending
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(Reverse(gi)) = ready.pop() {
        order.push(gi);
        if gates[gi].kind == GateKind::Dff {
            continue;
        }
        for &d in &dependents[gi] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.push(Reverse(d));
            }
        }
    }
    if order.len() != gates.len() {
        let stuck = (0..gates.len()).find(|&i| pending[i] > 0).unwrap_or(0);
        return Err(NetlistError::CombinationalCycle {
            net: gates[stuck].output.clone(),
        });
    }
    Ok(order)
}

/// Generator of `_tz<counter>` net names that cannot collide with a netlist.
#[derive(Clone, Debug)]
pub struct FreshNames {
    next: usize,
}

impl FreshNames {
    pub fn avoiding<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let next = names
            .into_iter()
            .filter_map(|n| n.strip_prefix("_tz")?.parse::<usize>().ok())
            .max()
            .map_or(0, |m| m + 1);
        FreshNames { next }
    }

    pub fn for_netlist(n: &Netlist) -> Self {
        Self::avoiding(n.nets())
    }

    pub fn next_name(&mut self) -> String {
        let name = format!("_tz{}", self.next);
        self.next += 1;
        name
    }
}

/// Splits an over-wide gate into a balanced tree of same-family gates.
pub(crate) fn decompose_wide(gate: Gate, fresh: &mut FreshNames, out: &mut Vec<Gate>) {
    let max = *gate.kind.arity().end();
    let Some(inner) = gate.kind.tree_kind() else {
        out.push(gate);
        return;
    };
    if gate.inputs.len() <= max {
        out.push(gate);
        return;
    }
    let n = gate.inputs.len();
    let groups = n.div_ceil(max);
    let (base, extra) = (n / groups, n % groups);
    let mut tops = Vec::with_capacity(groups);
    let mut rest = gate.inputs.as_slice();
    for gi in 0..groups {
        let size = base + usize::from(gi < extra);
        let (chunk, tail) = rest.split_at(size);
        rest = tail;
        if chunk.len() == 1 {
            tops.push(chunk[0].clone());
        } else {
            let net = fresh.next_name();
            decompose_wide(
                Gate {
                    output: net.clone(),
                    kind: inner,
                    inputs: chunk.to_vec(),
                    keep: gate.keep,
                },
                fresh,
                out,
            );
            tops.push(net);
        }
    }
    decompose_wide(
        Gate {
            output: gate.output,
            kind: gate.kind,
            inputs: tops,
            keep: gate.keep,
        },
        fresh,
        out,
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Netlist {
        Netlist::new(
            "chain",
            vec!["a".into()],
            vec!["y".into()],
            vec![
                Gate::new("y", GateKind::Not, &["m"]),
                Gate::new("m", GateKind::Not, &["a"]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn chain_is_reordered() {
        let n = chain();
        assert_eq!(n.gates()[0].output, "m");
        assert_eq!(n.gates()[1].output, "y");
        assert_eq!(topo_order(&n), vec![0, 1]);
    }

    #[test]
    fn diamond_merge_is_last() {
        let n = Netlist::new(
            "diamond",
            vec!["a".into(), "b".into()],
            vec!["y".into()],
            vec![
                Gate::new("y", GateKind::And, &["l", "r"]),
                Gate::new("l", GateKind::Not, &["a"]),
                Gate::new("r", GateKind::Nand, &["a", "b"]),
            ],
        )
        .unwrap();
        assert_eq!(n.gates().last().unwrap().output, "y");
    }

    #[test]
    fn cycle_is_rejected() {
        let err = Netlist::new(
            "loop",
            vec!["a".into()],
            vec!["x".into()],
            vec![
                Gate::new("x", GateKind::And, &["a", "y"]),
                Gate::new("y", GateKind::Not, &["x"]),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, NetlistError::CombinationalCycle { .. }));
    }

    #[test]
    fn dff_breaks_cycle() {
        let n = Netlist::new(
            "toggle",
            vec![],
            vec!["q".into()],
            vec![
                Gate::new("d", GateKind::Not, &["q"]),
                Gate::new("q", GateKind::Dff, &["d"]),
            ],
        )
        .unwrap();
        assert_eq!(n.dff_count(), 1);
    }

    #[test]
    fn single_driver_rule() {
        let err = Netlist::new(
            "dup",
            vec!["a".into()],
            vec!["a".into()],
            vec![Gate::new("a", GateKind::Not, &["a"])],
        )
        .unwrap_err();
        assert_eq!(err, NetlistError::DuplicateDriver { net: "a".into() });
        let err = Netlist::new("u", vec!["a".into()], vec!["z".into()], vec![]).unwrap_err();
        assert_eq!(err, NetlistError::UndrivenNet { net: "z".into() });
    }

    #[test]
    fn arity_limits() {
        for kind in GateKind::ALL {
            let r = kind.arity();
            assert!(r.start() <= r.end());
        }
        let err = Netlist::new(
            "x",
            vec!["a".into(), "b".into(), "c".into()],
            vec!["y".into()],
            vec![Gate::new("y", GateKind::Xor, &["a", "b", "c"])],
        )
        .unwrap_err();
        assert!(matches!(err, NetlistError::Arity { got: 3, .. }));
    }

    #[test]
    fn wide_gate_decomposes_balanced() {
        let names: Vec<String> = (0..10).map(|i| format!("i{i}")).collect();
        let gate = Gate {
            output: "y".into(),
            kind: GateKind::Nand,
            inputs: names.clone(),
            keep: false,
        };
        let mut fresh = FreshNames::avoiding(names.iter().map(String::as_str));
        let mut out = Vec::new();
        decompose_wide(gate, &mut fresh, &mut out);
        // 10 inputs -> two AND5 subtrees under one NAND2.
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].kind, GateKind::And);
        assert_eq!(out[0].inputs.len(), 5);
        assert_eq!(out[2].kind, GateKind::Nand);
        assert_eq!(out[2].inputs, vec!["_tz0".to_string(), "_tz1".to_string()]);
    }

    #[test]
    fn fresh_names_skip_existing() {
        let mut f = FreshNames::avoiding(["_tz4", "a", "_tzx", "_tz1"]);
        assert_eq!(f.next_name(), "_tz5");
        assert_eq!(f.next_name(), "_tz6");
    }

    #[test]
    fn word_and_scalar_semantics_agree() {
        for kind in GateKind::ALL {
            let arity = *kind.arity().start().max(&1).min(kind.arity().end());
            let arity = if kind.is_const() {
                0
            } else {
                arity.max(*kind.arity().start())
            };
            for bits in 0u32..(1 << arity) {
                let ins: Vec<bool> = (0..arity).map(|i| bits >> i & 1 == 1).collect();
                let words: Vec<u64> = ins.iter().map(|&b| if b { !0 } else { 0 }).collect();
                let w = kind.eval_word(&words);
                assert_eq!(w == !0, kind.eval_bool(&ins), "{kind} {ins:?}");
                assert!(w == 0 || w == !0);
            }
        }
    }
}
