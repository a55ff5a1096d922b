// SPDX-License-Identifier: Apache-2.0

//! Structural rewrites: constant tie-off, dead-logic sweeping and
//! subcircuit splicing.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use super::{Driver, FreshNames, Gate, GateKind, Netlist, NetlistError};

/// Re-drives a gate output with a constant; readers are untouched.
pub fn replace_with_constant(n: &Netlist, net: &str, value: bool) -> Result<Netlist, NetlistError> {
    let idx = match n.driver(net) {
        None => return Err(NetlistError::UnknownNet { net: net.into() }),
        Some(Driver::Input(_)) => return Err(NetlistError::NotGateDriven { net: net.into() }),
        Some(Driver::Gate(i)) => i,
    };
    let (name, inputs, outputs, mut gates) = n.clone().into_parts();
    gates[idx] = Gate {
        output: net.to_string(),
        kind: if value { GateKind::Const1 } else { GateKind::Const0 },
        inputs: Vec::new(),
        keep: false,
    };
    Netlist::new(name, inputs, outputs, gates)
}

/// Removes, to a fixed point, every gate whose output has no reader and is
/// not a primary output, then any state loop that no longer reaches an
/// output. Keep-marked gates are never removed. Returns the removed gates in
/// removal order.
pub fn sweep_dead_gates(n: &Netlist) -> (Netlist, Vec<Gate>) {
    let gates = n.gates();
    let mut readers: HashMap<&str, usize> = HashMap::new();
    for g in gates {
        for i in &g.inputs {
            *readers.entry(i.as_str()).or_default() += 1;
        }
    }
    let outputs: HashSet<&str> = n.outputs().iter().map(String::as_str).collect();
    let removable = |g: &Gate, readers: &HashMap<&str, usize>| {
        !g.keep && !outputs.contains(g.output.as_str()) && readers.get(g.output.as_str()).copied().unwrap_or(0) == 0
    };

    let mut removed = vec![false; gates.len()];
    let mut order = Vec::new();
    let mut queue: VecDeque<usize> = (0..gates.len()).filter(|&i| removable(&gates[i], &readers)).collect();
    while let Some(gi) = queue.pop_front() {
        if removed[gi] {
            continue;
        }
        removed[gi] = true;
        order.push(gi);
        for input in &gates[gi].inputs {
            let count = readers.get_mut(input.as_str()).expect("counted reader");
            *count -= 1;
            if *count == 0 {
                if let Some(Driver::Gate(src)) = n.driver(input) {
                    if !removed[src] && removable(&gates[src], &readers) {
                        queue.push_back(src);
                    }
                }
            }
        }
    }

    let roots: Vec<&str> = outputs
        .iter()
        .copied()
        .chain(gates.iter().filter(|g| g.keep).map(|g| g.output.as_str()))
        .collect();
    let live = n.fanin_cone(&roots);
    for (gi, g) in gates.iter().enumerate() {
        if !removed[gi] && !g.keep && !live.contains(g.output.as_str()) {
            removed[gi] = true;
            order.push(gi);
        }
    }

    if order.is_empty() {
        return (n.clone(), Vec::new());
    }
    let removed_gates = order.iter().map(|&i| gates[i].clone()).collect();
    let kept = gates
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed[*i])
        .map(|(_, g)| g.clone())
        .collect();
    let swept = Netlist::new(n.name().to_string(), n.inputs().to_vec(), n.outputs().to_vec(), kept)
        .expect("removing unread gates keeps a netlist valid");
    (swept, removed_gates)
}

/// A netlist fragment with named boundary ports, ready to be spliced into a
/// host. Its primary inputs are exactly the tap ports plus `payload_in`.
#[derive(Clone, Debug)]
pub struct Subcircuit {
    netlist: Netlist,
    taps: Vec<String>,
    payload_in: String,
    payload_out: String,
}

impl Subcircuit {
    pub fn new(
        netlist: Netlist,
        taps: Vec<String>,
        payload_in: impl Into<String>,
        payload_out: impl Into<String>,
    ) -> Result<Self, NetlistError> {
        let payload_in = payload_in.into();
        let payload_out = payload_out.into();
        let mut ports: Vec<&String> = taps.iter().collect();
        ports.push(&payload_in);
        let declared: HashSet<&String> = netlist.inputs().iter().collect();
        if ports.len() != declared.len() || ports.iter().any(|p| !declared.contains(p)) {
            return Err(NetlistError::Subcircuit(
                "inputs must be exactly the tap ports and payload_in".into(),
            ));
        }
        if netlist.driving_gate(&payload_out).is_none() {
            return Err(NetlistError::Subcircuit(format!(
                "payload_out `{payload_out}` must be a gate output"
            )));
        }
        Ok(Subcircuit {
            netlist,
            taps,
            payload_in,
            payload_out,
        })
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn taps(&self) -> &[String] {
        &self.taps
    }

    pub fn payload_in(&self) -> &str {
        &self.payload_in
    }

    pub fn payload_out(&self) -> &str {
        &self.payload_out
    }

    pub fn gates(&self) -> &[Gate] {
        self.netlist.gates()
    }
}

/// Result of [`insert_subcircuit`]: the new host plus where every internal
/// subcircuit net ended up.
#[derive(Clone, Debug)]
pub struct Insertion {
    pub netlist: Netlist,
    /// Subcircuit net name -> host net name.
    pub renamed: BTreeMap<String, String>,
}

impl Insertion {
    pub fn host_net(&self, sub_net: &str) -> Option<&str> {
        self.renamed.get(sub_net).map(String::as_str)
    }
}

/// Splices `s` into `n`: tap ports are bound to `taps` (in port order), the
/// payload reads `target`, and every former reader of `target` reads the
/// payload output instead. Internal nets receive fresh `_tz` names. When
/// `target` is a primary output its driver is renamed so the port name stays
/// stable.
pub fn insert_subcircuit(
    n: &Netlist,
    s: &Subcircuit,
    taps: &[String],
    target: &str,
) -> Result<Insertion, NetlistError> {
    if taps.len() != s.taps.len() {
        return Err(NetlistError::Subcircuit(format!(
            "expected {} tap bindings, got {}",
            s.taps.len(),
            taps.len()
        )));
    }
    for net in taps.iter().map(String::as_str).chain([target]) {
        if !n.contains_net(net) {
            return Err(NetlistError::UnknownNet { net: net.into() });
        }
    }
    let target_is_po = n.is_output(target);
    if target_is_po && n.is_input(target) {
        return Err(NetlistError::PortPassThrough { net: target.into() });
    }
    let has_readers = n.gates().iter().any(|g| g.inputs.iter().any(|i| i == target));
    if !has_readers && !target_is_po {
        return Err(NetlistError::UnobservedNet { net: target.into() });
    }

    let mut fresh = FreshNames::avoiding(n.nets().chain(s.netlist.nets()));
    let mut renamed: BTreeMap<String, String> = BTreeMap::new();
    for (port, host) in s.taps.iter().zip(taps) {
        renamed.insert(port.clone(), host.clone());
    }
    for g in s.netlist.gates() {
        renamed.insert(g.output.clone(), fresh.next_name());
    }

    let (name, inputs, outputs, mut gates) = n.clone().into_parts();
    let payload_out = if target_is_po {
        // The payload takes over the port name; the original driver moves.
        let moved = fresh.next_name();
        for g in gates.iter_mut().filter(|g| g.output == target) {
            g.output = moved.clone();
        }
        renamed.insert(s.payload_in.clone(), moved);
        renamed.insert(s.payload_out.clone(), target.to_string());
        target.to_string()
    } else {
        let out = renamed[&s.payload_out].clone();
        for g in gates.iter_mut() {
            for i in g.inputs.iter_mut() {
                if i == target {
                    *i = out.clone();
                }
            }
        }
        renamed.insert(s.payload_in.clone(), target.to_string());
        out
    };
    debug_assert!(renamed.values().any(|v| *v == payload_out));

    for g in s.netlist.gates() {
        gates.push(Gate {
            output: renamed[&g.output].clone(),
            kind: g.kind,
            inputs: g.inputs.iter().map(|i| renamed[i].clone()).collect(),
            keep: g.keep,
        });
    }
    let netlist = Netlist::new(name, inputs, outputs, gates)?;
    Ok(Insertion { netlist, renamed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    fn buffer_payload() -> Subcircuit {
        let n = Netlist::new(
            "pass",
            vec!["t".into(), "pin".into()],
            vec!["pout".into()],
            vec![Gate::new("pout", GateKind::Buff, &["pin"])],
        )
        .unwrap();
        Subcircuit::new(n, vec!["t".into()], "pin", "pout").unwrap()
    }

    #[test]
    fn constant_replacement_keeps_readers() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nm = AND(a, b)\ny = NOR(m, a)\n").unwrap();
        let r = replace_with_constant(&n, "m", false).unwrap();
        assert_eq!(r.driving_gate("m").unwrap().kind, GateKind::Const0);
        assert_eq!(r.driving_gate("y").unwrap().inputs, vec!["m", "a"]);
    }

    #[test]
    fn constant_replacement_of_output() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        let r = replace_with_constant(&n, "y", true).unwrap();
        assert_eq!(r.driving_gate("y").unwrap().kind, GateKind::Const1);
    }

    #[test]
    fn constant_replacement_refuses_inputs() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        assert_eq!(
            replace_with_constant(&n, "a", false).unwrap_err(),
            NetlistError::NotGateDriven { net: "a".into() }
        );
    }

    #[test]
    fn sweep_is_transitive() {
        let n = parse_bench(
            "INPUT(a)\nINPUT(b)\nOUTPUT(y)\np = NOT(a)\nq = AND(p, b)\nr = OR(q, b)\ny = AND(a, b)\nk = NOT(b)  # keep\n",
        )
        .unwrap();
        let (swept, removed) = sweep_dead_gates(&n);
        let names: Vec<&str> = removed.iter().map(|g| g.output.as_str()).collect();
        assert_eq!(names, vec!["r", "q", "p"]);
        assert_eq!(swept.gates().len(), 2);
        assert!(swept.contains_net("k"));
    }

    #[test]
    fn sweep_removes_orphaned_state_loops() {
        let n = parse_bench(
            "INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ns = DFF(t)\nt = XOR(s, a)\nk = BUFF(s)  # keep\nu = DFF(v)\nv = NOT(u)\n",
        )
        .unwrap();
        let (swept, removed) = sweep_dead_gates(&n);
        let names: Vec<&str> = removed.iter().map(|g| g.output.as_str()).collect();
        assert_eq!(names.len(), 2);
        assert!(names.contains(&"u") && names.contains(&"v"));
        assert!(swept.contains_net("s") && swept.contains_net("t"));
    }

    #[test]
    fn sweep_fixed_point_on_live_netlist() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\nOUTPUT(z)\ny = NOT(a)\nz = BUFF(y)\n").unwrap();
        let (swept, removed) = sweep_dead_gates(&n);
        assert!(removed.is_empty());
        assert_eq!(swept, n);
    }

    #[test]
    fn identity_payload_rewires_readers() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nm = AND(a, b)\ny = NOT(m)\n").unwrap();
        let ins = insert_subcircuit(&n, &buffer_payload(), &["b".into()], "m").unwrap();
        let out = ins.host_net("pout").unwrap().to_string();
        assert!(out.starts_with("_tz"));
        assert_eq!(ins.netlist.driving_gate("y").unwrap().inputs, vec![out.clone()]);
        assert_eq!(ins.netlist.driving_gate(&out).unwrap().inputs, vec!["m"]);
    }

    #[test]
    fn payload_on_primary_output_keeps_port_name() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        let ins = insert_subcircuit(&n, &buffer_payload(), &["a".into()], "y").unwrap();
        let g = ins.netlist.driving_gate("y").unwrap();
        assert_eq!(g.kind, GateKind::Buff);
        let moved = &g.inputs[0];
        assert_eq!(ins.netlist.driving_gate(moved).unwrap().kind, GateKind::Not);
    }

    #[test]
    fn missing_tap_is_a_binding_error() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        let err = insert_subcircuit(&n, &buffer_payload(), &["zzz".into()], "y").unwrap_err();
        assert_eq!(err, NetlistError::UnknownNet { net: "zzz".into() });
    }
}
