// SPDX-License-Identifier: Apache-2.0

//! The attacker's pipeline: salvage near-constant logic, then spend the
//! freed power and area on a rarely-triggered trojan.

mod inject;
mod salvage;
mod trigger;
mod trojan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atpg::AtpgError;
use crate::costmodel::CostError;
use crate::logicsim::SimError;
use crate::netlist::NetlistError;
use crate::probability::ProbError;

pub use inject::{
    enumerate_locations, inject, insert_ht, pad_dummy, InjectOptions, InjectionReport, Location, LocationRules,
    PadOutcome, Rejection, Tried,
};
pub use salvage::{salvage, SalvageReport, SalvageStep, StepOutcome};
pub use trigger::{binomial_tail, trigger_prob, untargeted_prob, untargeted_ratio, MonteCarloTrigger, TriggerEstimate};
pub use trojan::{instantiate_ht, TemplateKind, TrojanInstance, TrojanTemplate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("the original circuit fails defender suite {suite} at step {step}")]
    UnverifiedHost { suite: usize, step: usize },
    #[error("counter width {0} is outside 2..=8")]
    Width(usize),
    #[error("a trojan needs at least one tap")]
    NoTaps,
    #[error("tap count {got} does not match template tap arity {expected}")]
    TapCount { expected: usize, got: usize },
    #[error("no net is rare enough to serve as a trigger tap")]
    NoLocations,
    #[error("no template fits at any location ({} pairs tried)", .0.tried.len())]
    Exhausted(Box<InjectionReport>),
    #[error("N_u = {n_u} is outside 0..=2^{inputs}")]
    UntargetedRange { n_u: u128, inputs: u32 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Atpg(#[from] AtpgError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Seeds of every random choice in a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub atpg: u64,
    pub bespoke: u64,
    pub montecarlo: u64,
    pub workload: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            atpg: 1,
            bespoke: 0xB35_90CE,
            montecarlo: 7,
            workload: 42,
        }
    }
}

/// Attack configuration as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    #[serde(rename = "P_th")]
    pub p_th: f64,
    pub epsilon: f64,
    pub templates: Vec<TrojanTemplate>,
    /// Expected rare events during testing, as a fraction of the trigger
    /// threshold, that a tap may cause.
    pub p_e_safety_factor: f64,
    pub seeds: Seeds,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            p_th: 0.992,
            epsilon: 0.01,
            templates: vec![
                TrojanTemplate::counter(3),
                TrojanTemplate::counter(2),
                TrojanTemplate::comparator(2),
            ],
            p_e_safety_factor: 0.1,
            seeds: Seeds::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_defaults() {
        let c: AttackConfig = serde_json::from_str(r#"{"P_th": 0.95}"#).unwrap();
        assert_eq!(c.p_th, 0.95);
        assert_eq!(c.epsilon, 0.01);
        let round: AttackConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }
}
