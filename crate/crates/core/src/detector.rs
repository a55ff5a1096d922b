// SPDX-License-Identifier: Apache-2.0

//! The defender baseline: functional testing plus threshold screening of
//! power and area against a golden circuit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atpg::{bespoke_suite, AtpgError, DefenderProfile};
use crate::costmodel::{cost_report, CellLibrary, CostError, CostReport, Workload};
use crate::logicsim::{equivalent_on, mismatch_steps, SimError};
use crate::netlist::Netlist;

pub const DEFAULT_BESPOKE_COUNT: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Atpg(#[from] AtpgError),
    #[error("noise deviation must be finite and non-negative, got {0}")]
    Noise(f64),
}

/// Fractional excess over golden that each screen tolerates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub total: f64,
    pub dynamic: f64,
    pub leakage: f64,
    pub area: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins {
            total: 0.005,
            dynamic: 0.00265,
            leakage: 0.005,
            area: 0.0058,
        }
    }
}

impl Margins {
    pub fn uniform(m: f64) -> Self {
        Margins {
            total: m,
            dynamic: m,
            leakage: m,
            area: m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricScreen {
    pub measured: f64,
    pub golden: f64,
    /// `(measured - golden) / golden`.
    pub excess: f64,
    pub flagged: bool,
}

impl MetricScreen {
    fn new(measured: f64, golden: f64, margin: f64) -> Self {
        let excess = if golden != 0.0 {
            (measured - golden) / golden
        } else if measured > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        MetricScreen {
            measured,
            golden,
            excess,
            flagged: excess > margin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Screens {
    pub total: MetricScreen,
    pub dynamic: MetricScreen,
    pub leakage: MetricScreen,
    pub area: MetricScreen,
}

impl Screens {
    pub fn any_flagged(&self) -> bool {
        self.reasons().next().is_some()
    }

    fn reasons(&self) -> impl Iterator<Item = Reason> + '_ {
        [
            (self.total.flagged, Reason::Total),
            (self.dynamic.flagged, Reason::Dynamic),
            (self.leakage.flagged, Reason::Leakage),
            (self.area.flagged, Reason::Area),
        ]
        .into_iter()
        .filter(|(f, _)| *f)
        .map(|(_, r)| r)
    }
}

/// Flags each metric whose fractional excess over golden exceeds its margin.
pub fn power_screen(dut: &CostReport, golden: &CostReport, margins: &Margins) -> Result<Screens, CostError> {
    if dut.workload != golden.workload {
        return Err(CostError::WorkloadMismatch(
            dut.workload.id.clone(),
            golden.workload.id.clone(),
        ));
    }
    Ok(Screens {
        total: MetricScreen::new(dut.p_total, golden.p_total, margins.total),
        dynamic: MetricScreen::new(dut.p_dyn, golden.p_dyn, margins.dynamic),
        leakage: MetricScreen::new(dut.p_leak, golden.p_leak, margins.leakage),
        area: MetricScreen::new(dut.area_ge, golden.area_ge, margins.area),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteMismatch {
    pub suite: usize,
    pub step: usize,
    pub output: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalResult {
    pub pass: bool,
    pub mismatches: Vec<SuiteMismatch>,
}

/// Runs every defender suite; each failing suite contributes its first
/// mismatch.
pub fn functional_test(
    dut: &Netlist,
    golden: &Netlist,
    defender: &DefenderProfile,
) -> Result<FunctionalResult, SimError> {
    let mut mismatches = Vec::new();
    for (i, suite) in defender.suites().iter().enumerate() {
        let eq = equivalent_on(golden, dut, &suite.patterns)?;
        if let Some(m) = eq.counterexample {
            mismatches.push(SuiteMismatch {
                suite: i,
                step: m.step,
                output: m.output,
            });
        }
    }
    Ok(FunctionalResult {
        pass: mismatches.is_empty(),
        mismatches,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reason {
    Functional,
    Total,
    Dynamic,
    Leakage,
    Area,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Overall {
    Clean,
    Flagged,
}

/// Outcome of the bespoke random suite the attacker never saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LuckyCatch {
    pub fired: bool,
    /// Mismatching steps over applied patterns.
    pub frequency: f64,
    pub hits: usize,
    pub patterns: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub functional: FunctionalResult,
    pub screens: Screens,
    pub overall: Overall,
    pub reasons: Vec<Reason>,
    pub lucky_catch: LuckyCatch,
}

impl DetectionVerdict {
    pub fn is_clean(&self) -> bool {
        self.overall == Overall::Clean
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// Settings of [`evaluate_attack`] beyond the defender profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub bespoke_count: usize,
    pub bespoke_seed: u64,
    /// Relative standard deviation of Gaussian noise on measured power and
    /// area; 0 disables it.
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            bespoke_count: DEFAULT_BESPOKE_COUNT,
            bespoke_seed: 0xB35_90CE,
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }
}

fn add_noise(r: &CostReport, sigma: f64, seed: u64) -> Result<CostReport, DetectError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(DetectError::Noise(sigma));
    }
    if sigma == 0.0 {
        return Ok(r.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| DetectError::Noise(sigma))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |v: f64| v * (1.0 + normal.sample(&mut rng));
    let area = jitter(r.area_ge);
    let leak = jitter(r.p_leak);
    let dyn_ = jitter(r.p_dyn);
    Ok(CostReport::new(area, leak, dyn_, r.workload.clone()))
}

/// Functional test plus power/area screen, with the bespoke suite run
/// on the side.
pub fn evaluate_attack(
    golden: &Netlist,
    dut: &Netlist,
    defender: &DefenderProfile,
    lib: &CellLibrary,
    workload: &Workload,
    config: &DetectorConfig,
) -> Result<DetectionVerdict, DetectError> {
    let functional = functional_test(dut, golden, defender)?;
    let golden_cost = cost_report(golden, lib, workload)?;
    let dut_cost = add_noise(&cost_report(dut, lib, workload)?, config.noise_sigma, config.noise_seed)?;
    let screens = power_screen(&dut_cost, &golden_cost, &defender.margins)?;

    let bespoke = bespoke_suite(golden, config.bespoke_count, config.bespoke_seed)?;
    let hits = mismatch_steps(golden, dut, &bespoke.patterns)?.len();
    let lucky_catch = LuckyCatch {
        fired: hits > 0,
        frequency: if config.bespoke_count == 0 {
            0.0
        } else {
            hits as f64 / config.bespoke_count as f64
        },
        hits,
        patterns: config.bespoke_count,
        seed: config.bespoke_seed,
    };

    let mut reasons = Vec::new();
    if !functional.pass {
        reasons.push(Reason::Functional);
    }
    reasons.extend(screens.reasons());
    Ok(DetectionVerdict {
        functional,
        screens,
        overall: if reasons.is_empty() {
            Overall::Clean
        } else {
            Overall::Flagged
        },
        reasons,
        lucky_catch,
    })
}
