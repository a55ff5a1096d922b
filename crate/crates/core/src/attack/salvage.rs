// SPDX-License-Identifier: Apache-2.0

//! Greedy removal of near-constant gates that survives the defender's tests.

use serde::{Deserialize, Serialize};

use super::{untargeted_prob, AttackError};
use crate::atpg::DefenderProfile;
use crate::costmodel::{cost_report, delta, CellLibrary, CostReport, DeltaReport, Workload};
use crate::detector::functional_test;
use crate::logicsim::{exhaustive_diff, MAX_EXHAUSTIVE_INPUTS};
use crate::netlist::{replace_with_constant, sweep_dead_gates, Driver, Netlist};
use crate::probability::{find_candidates, propagate_uniform};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum StepOutcome {
    Accepted {
        /// Gates swept as dead after the tie-off, in removal order.
        swept: Vec<String>,
    },
    Reverted {
        suite: usize,
        step: usize,
        output: String,
    },
    /// The net had already been swept or tied off by an earlier step.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SalvageStep {
    pub net: String,
    pub value: bool,
    pub extremity: f64,
    #[serde(flatten)]
    pub outcome: StepOutcome,
    /// Input patterns on which this step changes some output, and that
    /// count over all patterns; only for hosts small enough to enumerate.
    pub n_u: Option<u64>,
    pub p_u: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SalvageReport {
    pub p_th: f64,
    pub candidates: usize,
    pub candidate_nets: Vec<String>,
    /// Outputs of every removed non-constant gate.
    pub expendable: Vec<String>,
    pub e_g: usize,
    pub log: Vec<SalvageStep>,
    pub reference: CostReport,
    pub modified: CostReport,
    pub delta: DeltaReport,
}

impl SalvageReport {
    pub fn accepted(&self) -> usize {
        self.log
            .iter()
            .filter(|s| matches!(s.outcome, StepOutcome::Accepted { .. }))
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Ties each candidate to its dominant value, sweeps the dead logic, and
/// keeps the change only if every defender suite still passes against `n`.
pub fn salvage(
    n: &Netlist,
    defender: &DefenderProfile,
    p_th: f64,
    lib: &CellLibrary,
    workload: &Workload,
) -> Result<(Netlist, SalvageReport), AttackError> {
    let up_front = functional_test(n, n, defender)?;
    if let Some(m) = up_front.mismatches.first() {
        return Err(AttackError::UnverifiedHost {
            suite: m.suite,
            step: m.step,
        });
    }
    let probs = propagate_uniform(n);
    let cands = find_candidates(&probs, n, p_th)?;
    let enumerable = n.inputs().len() <= MAX_EXHAUSTIVE_INPUTS;

    let mut current = n.clone();
    let mut expendable = Vec::new();
    let mut log = Vec::with_capacity(cands.len());
    for c in &cands.c {
        let live = matches!(current.driver(&c.net), Some(Driver::Gate(gi)) if !current.gates()[gi].kind.is_const());
        let mut step = SalvageStep {
            net: c.net.clone(),
            value: c.value,
            extremity: c.extremity,
            outcome: StepOutcome::Skipped,
            n_u: None,
            p_u: None,
        };
        if !live {
            log.push(step);
            continue;
        }
        let tied = replace_with_constant(&current, &c.net, c.value)?;
        let (trial, removed) = sweep_dead_gates(&tied);
        let verdict = functional_test(&trial, n, defender)?;
        if let Some(m) = verdict.mismatches.into_iter().next() {
            step.outcome = StepOutcome::Reverted {
                suite: m.suite,
                step: m.step,
                output: m.output,
            };
            log.push(step);
            continue;
        }
        if enumerable {
            let n_u = exhaustive_diff(&current, &trial)?;
            step.n_u = Some(n_u);
            step.p_u = Some(untargeted_prob(n_u as u128, n.inputs().len() as u32)?);
        }
        expendable.push(c.net.clone());
        let swept: Vec<String> = removed
            .iter()
            .filter(|g| !g.kind.is_const())
            .map(|g| g.output.clone())
            .collect();
        expendable.extend(swept.iter().cloned());
        step.outcome = StepOutcome::Accepted { swept };
        log.push(step);
        current = trial;
    }

    let reference = cost_report(n, lib, workload)?;
    let modified = cost_report(&current, lib, workload)?;
    let delta = delta(&reference, &modified)?;
    let report = SalvageReport {
        p_th,
        candidates: cands.len(),
        candidate_nets: cands.c.iter().map(|c| c.net.clone()).collect(),
        e_g: expendable.len(),
        expendable,
        log,
        reference,
        modified,
        delta,
    };
    Ok((current.with_name(format!("{}_salvaged", n.name())), report))
}
