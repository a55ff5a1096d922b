// SPDX-License-Identifier: Apache-2.0

//! How likely a trojan is to fire during testing, and how likely an
//! untargeted change is to show up on a random input.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use super::{AttackError, TemplateKind, TrojanInstance};
use crate::logicsim::{Compiled, LaneSim};
use crate::netlist::Netlist;
use crate::probability::SignalProbabilityMap;

/// `P[Bin(t, p) >= m]`.
pub fn binomial_tail(t: u64, p: f64, m: u64) -> Result<f64, AttackError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AttackError::Invalid(format!("event probability {p} is outside [0, 1]")));
    }
    if m == 0 {
        return Ok(1.0);
    }
    if m > t {
        return Ok(0.0);
    }
    let b = Binomial::new(p, t).map_err(|e| AttackError::Invalid(e.to_string()))?;
    Ok(b.sf(m - 1))
}

/// Monte Carlo count of sessions in which the trigger fired.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTrigger {
    pub fires: u64,
    pub trials: u64,
    pub estimate: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerEstimate {
    /// Per-pattern probability of a rare event on the taps.
    pub p_e: f64,
    pub threshold: u64,
    pub patterns: u64,
    pub analytic: f64,
    pub monte_carlo: Option<MonteCarloTrigger>,
}

fn wilson(fires: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = fires as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let low = if fires == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if fires == trials { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

const MC_CHUNK_BATCHES: u64 = 16;

/// Runs `trials` random sessions of `t` patterns from the reset state on
/// the fan-in cone of `trigger` and counts those in which it fired.
///
/// For a counter the state reached after the last pattern counts too, so a
/// session fires exactly when `threshold` rare events occur among its `t`
/// patterns.
fn simulate_sessions(cone: &Netlist, trigger: &str, t: u64, trials: u64, seed: u64, stateful: bool) -> u64 {
    let prog = Compiled::new(cone);
    let q = cone.net_index()[trigger];
    let width = cone.inputs().len();
    let steps = if stateful { t + 1 } else { t };
    let batches = trials.div_ceil(64);
    (0..batches.div_ceil(MC_CHUNK_BATCHES))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut sim = LaneSim::new(&prog);
            let mut inputs = vec![0u64; width];
            let mut fires = 0u64;
            for b in c * MC_CHUNK_BATCHES..((c + 1) * MC_CHUNK_BATCHES).min(batches) {
                sim.reset();
                let mut fired = 0u64;
                for _ in 0..steps {
                    inputs.iter_mut().for_each(|x| *x = rng.random());
                    fired |= sim.step(&inputs)[q];
                }
                let live = trials - b * 64;
                if live < 64 {
                    fired &= (1u64 << live) - 1;
                }
                fires += fired.count_ones() as u64;
            }
            fires
        })
        .sum()
}

/// Probability that `ht` fires during `t` defender patterns: the binomial
/// tail over the rare-event probability taken from `probs` (taps treated
/// as independent), plus an optional seeded Monte Carlo count over `trials`
/// sessions on `n_infected`.
pub fn trigger_prob(
    n_infected: &Netlist,
    ht: &TrojanInstance,
    probs: &SignalProbabilityMap,
    t: u64,
    trials: u64,
    seed: u64,
) -> Result<TriggerEstimate, AttackError> {
    let mut p_e = 1.0;
    for (tap, &rare) in ht.taps.iter().zip(&ht.rare) {
        let p1 = probs
            .p1(tap)
            .ok_or_else(|| AttackError::Invalid(format!("no probability for tap `{tap}`")))?;
        p_e *= if rare { p1 } else { 1.0 - p1 };
    }
    let threshold = ht.template.threshold();
    let analytic = binomial_tail(t, p_e, threshold)?;
    let monte_carlo = if trials == 0 {
        None
    } else {
        let trigger = ht.trigger_net();
        if !n_infected.contains_net(trigger) {
            return Err(AttackError::Invalid(format!(
                "trigger `{trigger}` is not in the netlist"
            )));
        }
        let cone = n_infected.cone(&[trigger])?;
        let stateful = ht.template.kind == TemplateKind::Counter;
        let fires = simulate_sessions(&cone, trigger, t, trials, seed, stateful);
        let (ci_low, ci_high) = wilson(fires, trials);
        Some(MonteCarloTrigger {
            fires,
            trials,
            estimate: fires as f64 / trials as f64,
            ci_low,
            ci_high,
            seed,
        })
    };
    Ok(TriggerEstimate {
        p_e,
        threshold,
        patterns: t,
        analytic,
        monte_carlo,
    })
}

/// `n_u / 2^inputs` as an exact fraction.
pub fn untargeted_ratio(n_u: u128, inputs: u32) -> Result<Ratio<u128>, AttackError> {
    if inputs > 127 || n_u > 1u128 << inputs {
        return Err(AttackError::UntargetedRange { n_u, inputs });
    }
    Ok(Ratio::new(n_u, 1u128 << inputs))
}

/// Probability that a uniform random input exposes an untargeted change
/// visible on `n_u` of the `2^inputs` patterns.
pub fn untargeted_prob(n_u: u128, inputs: u32) -> Result<f64, AttackError> {
    untargeted_ratio(n_u, inputs)?;
    // Scaling by a power of two is exact, so this rounds only once.
    Ok(n_u as f64 * (-(inputs as f64)).exp2())
}
