// SPDX-License-Identifier: Apache-2.0

//! Trojan templates: a rare-event counter or comparator trigger with a
//! MUX2 inversion payload.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::netlist::{Gate, GateKind, Netlist, Subcircuit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Counter,
    Comparator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrojanTemplate {
    pub kind: TemplateKind,
    /// Counter width; ignored for comparators.
    #[serde(default)]
    pub k: usize,
    pub tap_arity: usize,
}

/// Port and net names inside an instantiated template.
pub(crate) const PAYLOAD_IN: &str = "s";
pub(crate) const PAYLOAD_OUT: &str = "s_out";
pub(crate) const TRIGGER: &str = "q";
pub(crate) const EVENT: &str = "e";

impl TrojanTemplate {
    pub fn counter(k: usize) -> Self {
        TrojanTemplate {
            kind: TemplateKind::Counter,
            k,
            tap_arity: 1,
        }
    }

    pub fn comparator(tap_arity: usize) -> Self {
        TrojanTemplate {
            kind: TemplateKind::Comparator,
            k: 0,
            tap_arity,
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if self.tap_arity == 0 {
            return Err(AttackError::NoTaps);
        }
        if self.kind == TemplateKind::Counter && !(2..=8).contains(&self.k) {
            return Err(AttackError::Width(self.k));
        }
        Ok(())
    }

    /// Rare events needed before the trigger fires: `2^k - 1`, or 1 for a
    /// comparator.
    pub fn threshold(&self) -> u64 {
        match self.kind {
            TemplateKind::Counter => (1u64 << self.k) - 1,
            TemplateKind::Comparator => 1,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            TemplateKind::Counter => format!("counter-k{}-taps{}", self.k, self.tap_arity),
            TemplateKind::Comparator => format!("comparator-taps{}", self.tap_arity),
        }
    }

    pub fn tap_ports(&self) -> Vec<String> {
        (0..self.tap_arity).map(|i| format!("t{i}")).collect()
    }
}

/// Builds the template as a standalone subcircuit. Tap `i` counts as a
/// rare event when it equals `rare[i]`.
///
/// Counter: bit `b_i` is a DFF; carries `c_0 = e`, `c_i = c_{i-1} AND
/// b_{i-1}`; next state `b_i XOR c_i`; `q` is the AND of all bits.
pub fn instantiate_ht(t: &TrojanTemplate, rare: &[bool]) -> Result<Subcircuit, AttackError> {
    t.validate()?;
    if rare.len() != t.tap_arity {
        return Err(AttackError::TapCount {
            expected: t.tap_arity,
            got: rare.len(),
        });
    }
    let taps = t.tap_ports();
    let mut gates = Vec::new();
    let literals: Vec<String> = taps
        .iter()
        .zip(rare)
        .map(|(tap, &r)| {
            if r {
                tap.clone()
            } else {
                gates.push(Gate::new(format!("{tap}_n"), GateKind::Not, &[tap]));
                format!("{tap}_n")
            }
        })
        .collect();
    let event = if literals.len() == 1 {
        literals[0].clone()
    } else if rare.iter().all(|r| !r) {
        gates.retain(|g| g.kind != GateKind::Not);
        let ins: Vec<&str> = taps.iter().map(String::as_str).collect();
        gates.push(Gate::new(EVENT, GateKind::Nor, &ins));
        EVENT.to_string()
    } else {
        let ins: Vec<&str> = literals.iter().map(String::as_str).collect();
        gates.push(Gate::new(EVENT, GateKind::And, &ins));
        EVENT.to_string()
    };

    let select = match t.kind {
        TemplateKind::Comparator => event,
        TemplateKind::Counter => {
            let mut carry = event;
            for i in 0..t.k {
                let b = format!("b{i}");
                let next = format!("n{i}");
                gates.push(Gate::new(&b, GateKind::Dff, &[&next]));
                gates.push(Gate::new(&next, GateKind::Xor, &[&b, &carry]));
                if i + 1 < t.k {
                    let c = format!("c{}", i + 1);
                    gates.push(Gate::new(&c, GateKind::And, &[&carry, &b]));
                    carry = c;
                }
            }
            let bits: Vec<String> = (0..t.k).map(|i| format!("b{i}")).collect();
            let bits: Vec<&str> = bits.iter().map(String::as_str).collect();
            gates.push(Gate::new(TRIGGER, GateKind::And, &bits));
            TRIGGER.to_string()
        }
    };
    gates.push(Gate::new("s_n", GateKind::Not, &[PAYLOAD_IN]));
    gates.push(Gate::new(PAYLOAD_OUT, GateKind::Mux2, &[&select, PAYLOAD_IN, "s_n"]));

    let mut inputs = taps.clone();
    inputs.push(PAYLOAD_IN.to_string());
    let n = Netlist::new(t.label(), inputs, vec![PAYLOAD_OUT.to_string()], gates)?;
    Ok(Subcircuit::new(n, taps, PAYLOAD_IN, PAYLOAD_OUT)?)
}

/// A template placed in a host.
#[derive(Clone, Debug)]
pub struct TrojanInstance {
    pub template: TrojanTemplate,
    pub taps: Vec<String>,
    pub rare: Vec<bool>,
    /// The payload site (the signal the trojan can invert).
    pub target: String,
    /// Index of the location in the enumerated order.
    pub location: usize,
    pub subcircuit: Subcircuit,
    /// Subcircuit net -> host net.
    pub host_nets: BTreeMap<String, String>,
}

impl TrojanInstance {
    /// Host name of the trigger signal driving the MUX select.
    pub fn trigger_net(&self) -> &str {
        let port = self.subcircuit.gates().last().expect("payload mux").inputs[0].as_str();
        &self.host_nets[port]
    }

    /// Host name of the net that is 1 on a rare event.
    pub fn event_net(&self) -> &str {
        let port = if self.template.tap_arity > 1 {
            EVENT
        } else if self.rare[0] {
            "t0"
        } else {
            "t0_n"
        };
        &self.host_nets[port]
    }

    /// Host names of the trojan's own gates.
    pub fn gate_nets(&self) -> Vec<String> {
        self.subcircuit
            .gates()
            .iter()
            .map(|g| self.host_nets[&g.output].clone())
            .collect()
    }
}
