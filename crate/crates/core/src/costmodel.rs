// SPDX-License-Identifier: Apache-2.0

//! Area, leakage and switching-activity power under a cell library.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logicsim::{toggle_counts, PatternBlock, SimError, ToggleCounts};
use crate::netlist::{Gate, GateKind, Netlist};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("cell library has no entry for {kind} with {fanin} inputs")]
    MissingCell { kind: GateKind, fanin: usize },
    #[error("cell library: {0}")]
    BadLibrary(String),
    #[error("toggle counts have no entry for net `{0}`")]
    MissingToggle(String),
    #[error("at least 2 workload steps are needed, got {0}")]
    TooFewSteps(usize),
    #[error("workloads differ: `{0}` vs `{1}`")]
    WorkloadMismatch(String, String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Cost of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCost {
    pub area_ge: f64,
    pub leak: f64,
    pub e_toggle: f64,
}

impl CellCost {
    fn scaled(self, k: f64) -> CellCost {
        CellCost {
            area_ge: self.area_ge * k,
            leak: self.leak * k,
            e_toggle: self.e_toggle * k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LibraryEntry {
    #[serde(flatten)]
    base: CellCost,
    /// Explicit costs for particular fan-ins.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    fanin: BTreeMap<usize, CellCost>,
}

/// Per-kind cell costs. The base entry of AND/OR/NAND/NOR is the 2-input
/// cell; a `k`-input cell without an explicit override costs `k - 1` times
/// the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellLibrary {
    cells: BTreeMap<GateKind, LibraryEntry>,
}

impl Default for CellLibrary {
    fn default() -> Self {
        let area = [
            (GateKind::Nand, 1.0),
            (GateKind::Nor, 1.0),
            (GateKind::Not, 0.67),
            (GateKind::Buff, 0.67),
            (GateKind::And, 1.33),
            (GateKind::Or, 1.33),
            (GateKind::Xor, 2.33),
            (GateKind::Xnor, 2.33),
            (GateKind::Mux2, 2.33),
            (GateKind::Dff, 4.33),
            (GateKind::Const0, 0.0),
            (GateKind::Const1, 0.0),
        ];
        let cells = area
            .into_iter()
            .map(|(kind, a)| {
                let base = CellCost {
                    area_ge: a,
                    leak: 0.5 * a,
                    e_toggle: a,
                };
                (
                    kind,
                    LibraryEntry {
                        base,
                        fanin: BTreeMap::new(),
                    },
                )
            })
            .collect();
        CellLibrary { cells }
    }
}

impl CellLibrary {
    /// Parses and validates a JSON library.
    pub fn from_json(text: &str) -> Result<Self, CostError> {
        let lib: CellLibrary = serde_json::from_str(text).map_err(|e| CostError::BadLibrary(e.to_string()))?;
        lib.validate()?;
        Ok(lib)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }

    fn validate(&self) -> Result<(), CostError> {
        for (kind, entry) in &self.cells {
            for c in std::iter::once(&entry.base).chain(entry.fanin.values()) {
                let vals = [c.area_ge, c.leak, c.e_toggle];
                let ok = if kind.is_const() {
                    vals.iter().all(|&v| v == 0.0)
                } else {
                    vals.iter().all(|&v| v > 0.0 && v.is_finite())
                };
                if !ok {
                    return Err(CostError::BadLibrary(format!(
                        "{kind}: costs must be positive (zero for constants)"
                    )));
                }
            }
        }
        if self.cost(GateKind::Nand, 2).ok().map(|c| c.area_ge) != Some(1.0) {
            return Err(CostError::BadLibrary("NAND2 must define area_ge = 1.0".into()));
        }
        Ok(())
    }

    /// Cost of a `kind` cell with `fanin` inputs.
    pub fn cost(&self, kind: GateKind, fanin: usize) -> Result<CellCost, CostError> {
        let missing = CostError::MissingCell { kind, fanin };
        let entry = self.cells.get(&kind).ok_or(missing.clone())?;
        if let Some(c) = entry.fanin.get(&fanin) {
            return Ok(*c);
        }
        if kind.is_variadic() {
            if fanin < 2 {
                return Err(missing);
            }
            return Ok(entry.base.scaled((fanin - 1) as f64));
        }
        Ok(entry.base)
    }

    pub fn gate_cost(&self, g: &Gate) -> Result<CellCost, CostError> {
        self.cost(g.kind, g.inputs.len())
    }

    /// Overrides one library entry.
    pub fn set(&mut self, kind: GateKind, fanin: Option<usize>, cost: CellCost) {
        let entry = self.cells.entry(kind).or_insert(LibraryEntry {
            base: cost,
            fanin: BTreeMap::new(),
        });
        match fanin {
            Some(k) => {
                entry.fanin.insert(k, cost);
            }
            None => entry.base = cost,
        }
    }
}

fn sum_gates(gates: &[Gate], lib: &CellLibrary, f: impl Fn(CellCost) -> f64) -> Result<f64, CostError> {
    gates.iter().try_fold(0.0, |acc, g| Ok(acc + f(lib.gate_cost(g)?)))
}

/// Total cell area in gate equivalents.
pub fn area(n: &Netlist, lib: &CellLibrary) -> Result<f64, CostError> {
    sum_gates(n.gates(), lib, |c| c.area_ge)
}

/// State-independent leakage: the sum of per-cell leakage.
pub fn leakage(n: &Netlist, lib: &CellLibrary) -> Result<f64, CostError> {
    sum_gates(n.gates(), lib, |c| c.leak)
}

/// Average switching energy per applied step over the gates of `gates`.
pub fn dynamic_of(gates: &[Gate], toggles: &ToggleCounts, lib: &CellLibrary) -> Result<f64, CostError> {
    let steps = toggles.steps;
    if steps < 2 {
        return Err(CostError::TooFewSteps(steps));
    }
    let index: std::collections::HashMap<&str, u64> = toggles.iter().collect();
    let transitions = (steps - 1) as f64;
    gates.iter().try_fold(0.0, |acc, g| {
        let t = *index
            .get(g.output.as_str())
            .ok_or_else(|| CostError::MissingToggle(g.output.clone()))?;
        Ok(acc + t as f64 / transitions * lib.gate_cost(g)?.e_toggle)
    })
}

/// Dynamic power: `sum(toggles(out) / (steps - 1) * e_toggle)` over gates.
pub fn dynamic(toggles: &ToggleCounts, n: &Netlist, lib: &CellLibrary) -> Result<f64, CostError> {
    dynamic_of(n.gates(), toggles, lib)
}

/// A named, ordered pattern sequence used to exercise a circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub id: String,
    pub patterns: PatternBlock,
}

impl Workload {
    pub fn new(id: impl Into<String>, patterns: PatternBlock) -> Self {
        Workload {
            id: id.into(),
            patterns,
        }
    }

    /// `count` uniform random patterns; the id records the seed.
    pub fn random(width: usize, count: usize, seed: u64) -> Self {
        Workload::new(
            format!("random-{count}-seed{seed}"),
            PatternBlock::seeded(width, count, seed),
        )
    }

    pub fn descriptor(&self) -> WorkloadId {
        WorkloadId {
            id: self.id.clone(),
            count: self.patterns.count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadId {
    pub id: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub area_ge: f64,
    pub p_leak: f64,
    pub p_dyn: f64,
    pub p_total: f64,
    pub workload: WorkloadId,
}

impl CostReport {
    pub fn new(area_ge: f64, p_leak: f64, p_dyn: f64, workload: WorkloadId) -> Self {
        CostReport {
            area_ge,
            p_leak,
            p_dyn,
            p_total: p_leak + p_dyn,
            workload,
        }
    }
}

/// Area, leakage and dynamic power of `n` under `workload`.
pub fn cost_report(n: &Netlist, lib: &CellLibrary, workload: &Workload) -> Result<CostReport, CostError> {
    let toggles = toggle_counts(n, &workload.patterns)?;
    Ok(CostReport::new(
        area(n, lib)?,
        leakage(n, lib)?,
        dynamic(&toggles, n, lib)?,
        workload.descriptor(),
    ))
}

/// Reference minus subject, componentwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub d_total: f64,
    pub d_dyn: f64,
    pub d_leak: f64,
    pub d_area: f64,
    /// Each delta as a fraction of the reference value (0 when it is 0).
    pub frac_total: f64,
    pub frac_dyn: f64,
    pub frac_leak: f64,
    pub frac_area: f64,
    pub workload: WorkloadId,
}

fn frac(d: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        d / reference
    }
}

pub fn delta(reference: &CostReport, subject: &CostReport) -> Result<DeltaReport, CostError> {
    if reference.workload != subject.workload {
        return Err(CostError::WorkloadMismatch(
            format!("{}/{}", reference.workload.id, reference.workload.count),
            format!("{}/{}", subject.workload.id, subject.workload.count),
        ));
    }
    let d_dyn = reference.p_dyn - subject.p_dyn;
    let d_leak = reference.p_leak - subject.p_leak;
    let d_area = reference.area_ge - subject.area_ge;
    let d_total = d_dyn + d_leak;
    Ok(DeltaReport {
        d_total,
        d_dyn,
        d_leak,
        d_area,
        frac_total: frac(d_total, reference.p_total),
        frac_dyn: frac(d_dyn, reference.p_dyn),
        frac_leak: frac(d_leak, reference.p_leak),
        frac_area: frac(d_area, reference.area_ge),
        workload: reference.workload.clone(),
    })
}
