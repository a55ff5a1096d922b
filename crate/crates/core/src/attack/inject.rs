// SPDX-License-Identifier: Apache-2.0

//! Trojan placement under a power and area budget.

use serde::{Deserialize, Serialize};

use super::{
    instantiate_ht, trigger_prob, untargeted_prob, AttackError, TemplateKind, TriggerEstimate, TrojanInstance,
    TrojanTemplate,
};
use crate::atpg::DefenderProfile;
use crate::costmodel::{area, cost_report, delta, CellLibrary, CostReport, DeltaReport, Workload};
use crate::detector::functional_test;
use crate::logicsim::{
    count_toggles, exhaustive_diff, mismatch_steps, simulate_comb, toggle_counts, PatternBlock, ToggleCounts,
    MAX_EXHAUSTIVE_INPUTS,
};
use crate::netlist::{insert_subcircuit, replace_with_constant, sweep_dead_gates, FreshNames, Gate, GateKind, Netlist};
use crate::probability::{monte_carlo_probs, SignalProbabilityMap};

/// Limits on the location search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocationRules {
    /// Expected rare events during testing, as a fraction of the trigger
    /// threshold, that a tap may cause.
    pub p_e_safety_factor: f64,
    pub max_taps: usize,
    pub max_targets: usize,
}

impl Default for LocationRules {
    fn default() -> Self {
        LocationRules {
            p_e_safety_factor: 0.1,
            max_taps: 8,
            max_targets: 32,
        }
    }
}

impl LocationRules {
    /// Largest rare-event probability a tap set may have.
    pub fn p_e_max(&self, t: &TrojanTemplate, defender_patterns: usize) -> f64 {
        t.threshold() as f64 * self.p_e_safety_factor / defender_patterns.max(1) as f64
    }
}

/// A place for a trojan: tap nets with their rare values, and a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub taps: Vec<String>,
    pub rare: Vec<bool>,
    /// Probability of a rare event per pattern, taps taken as independent.
    pub p_event: f64,
    pub target: String,
}

fn rare_side(p1: f64) -> (bool, f64) {
    if p1 <= 0.5 {
        (true, p1)
    } else {
        (false, 1.0 - p1)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Candidate locations for `t` in `n_prime`, most promising first.
///
/// Tap sets are gate outputs whose joint rare-event probability is positive
/// and at most [`LocationRules::p_e_max`], in ascending order of that
/// probability. Targets are observable gate outputs outside the taps'
/// fan-in, least active first under `toggles`.
pub fn enumerate_locations(
    n_prime: &Netlist,
    probs: &SignalProbabilityMap,
    defender: &DefenderProfile,
    t: &TrojanTemplate,
    rules: &LocationRules,
    toggles: &ToggleCounts,
) -> Result<Vec<Location>, AttackError> {
    t.validate()?;
    let patterns: usize = defender.suites().iter().map(|s| s.patterns.count()).sum();
    let p_e_max = rules.p_e_max(t, patterns);

    let mut singles: Vec<(f64, bool, &str)> = n_prime
        .gates()
        .iter()
        .filter(|g| !g.kind.is_const() && g.kind != GateKind::Dff && !g.keep)
        .filter_map(|g| {
            let (rare, p) = rare_side(probs.p1(&g.output)?);
            (p > 0.0 && p < 0.5).then_some((p, rare, g.output.as_str()))
        })
        .collect();
    singles.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(b.2)));
    singles.truncate(rules.max_taps.max(t.tap_arity) * 2);

    let mut tap_sets: Vec<(f64, Vec<usize>)> = combinations(singles.len(), t.tap_arity)
        .into_iter()
        .map(|c| (c.iter().map(|&i| singles[i].0).product::<f64>(), c))
        .filter(|(p, _)| *p <= p_e_max)
        .collect();
    tap_sets.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            let na = a.1.iter().map(|&i| singles[i].2);
            let nb = b.1.iter().map(|&i| singles[i].2);
            na.cmp(nb)
        })
    });
    tap_sets.truncate(rules.max_taps);

    let observable = n_prime.observable_nets();
    let mut locations = Vec::new();
    for (p_event, set) in tap_sets {
        let taps: Vec<&str> = set.iter().map(|&i| singles[i].2).collect();
        let upstream = n_prime.fanin_cone(&taps);
        let mut targets: Vec<(f64, &str)> = n_prime
            .gates()
            .iter()
            .filter(|g| !g.kind.is_const() && !g.keep)
            .map(|g| g.output.as_str())
            .filter(|o| observable.contains(o) && !upstream.contains(o))
            .map(|o| (toggles.rate(o).unwrap_or(0.0), o))
            .collect();
        targets.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        for (_, target) in targets.into_iter().take(rules.max_targets) {
            locations.push(Location {
                taps: taps.iter().map(|s| s.to_string()).collect(),
                rare: set.iter().map(|&i| singles[i].1).collect(),
                p_event,
                target: target.to_string(),
            });
        }
    }
    if locations.is_empty() {
        return Err(AttackError::NoLocations);
    }
    Ok(locations)
}

/// Places `t` at `loc` in `host`.
pub fn insert_ht(
    host: &Netlist,
    t: &TrojanTemplate,
    loc: &Location,
    index: usize,
) -> Result<(Netlist, TrojanInstance), AttackError> {
    let sub = instantiate_ht(t, &loc.rare)?;
    let ins = insert_subcircuit(host, &sub, &loc.taps, &loc.target)?;
    let inst = TrojanInstance {
        template: *t,
        taps: loc.taps.clone(),
        rare: loc.rare.clone(),
        target: loc.target.clone(),
        location: index,
        subcircuit: sub,
        host_nets: ins.renamed,
    };
    Ok((ins.netlist, inst))
}

/// Why a (template, location) pair was passed over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Rejection {
    FunctionalFail {
        suite: usize,
        step: usize,
        output: String,
    },
    /// The worst component and its fractional excess over the reference
    /// (negative when under-consuming and padding could not close it).
    BudgetExceeded {
        metric: String,
        excess: f64,
    },
    /// No attacker sequence was found that makes the payload visible.
    Untriggerable,
    NoLocations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tried {
    pub template: String,
    pub location: Option<usize>,
    pub taps: Vec<String>,
    pub target: Option<String>,
    #[serde(flatten)]
    pub rejection: Rejection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub template: TrojanTemplate,
    pub location: usize,
    pub taps: Vec<String>,
    pub rare: Vec<bool>,
    pub target: String,
    pub trigger_net: String,
    pub gates: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub epsilon: f64,
    pub enforce_budget: bool,
    pub defender_patterns: usize,
    pub chosen: Option<Chosen>,
    pub tried: Vec<Tried>,
    pub dummies: Vec<String>,
    pub reference: CostReport,
    pub salvaged: CostReport,
    pub infected: Option<CostReport>,
    /// Original minus infected.
    pub delta: Option<DeltaReport>,
    /// Rows of a sequence, applied from reset, whose last step shows the
    /// payload at a primary output.
    pub attacker_sequence: Vec<String>,
    pub p_ft: Option<TriggerEstimate>,
    /// Untargeted exposure of the infected circuit against the original,
    /// when the input space is small enough to enumerate.
    pub p_u: Option<f64>,
}

impl InjectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectOptions {
    /// Componentwise tolerance as a fraction of the original's cost.
    pub epsilon: f64,
    /// Off for an additive control insertion that ignores the budget.
    pub enforce_budget: bool,
    pub rules: LocationRules,
    /// Samples for the tap probability estimate.
    pub probability_samples: u64,
    pub seed: u64,
    /// Random patterns tried when constructing the attacker sequence.
    pub search_patterns: usize,
    /// Monte Carlo sessions for the trigger estimate; 0 keeps it analytic.
    pub trigger_trials: u64,
}

impl Default for InjectOptions {
    fn default() -> Self {
        InjectOptions {
            epsilon: 0.01,
            enforce_budget: true,
            rules: LocationRules::default(),
            probability_samples: 1 << 22,
            seed: 7,
            search_patterns: 1 << 20,
            trigger_trials: 0,
        }
    }
}

/// Outcome of [`pad_dummy`].
#[derive(Clone, Debug)]
pub struct PadOutcome {
    pub netlist: Netlist,
    pub added: Vec<String>,
    /// Reference minus padded.
    pub residual: DeltaReport,
    pub converged: bool,
}

fn within(d: &DeltaReport, eps: f64) -> bool {
    [d.frac_total, d.frac_dyn, d.frac_leak, d.frac_area]
        .iter()
        .all(|f| f.abs() <= eps)
}

/// The component furthest out of tolerance, as (name, subject excess).
fn worst(d: &DeltaReport) -> (String, f64) {
    [
        ("total", d.frac_total),
        ("dynamic", d.frac_dyn),
        ("leakage", d.frac_leak),
        ("area", d.frac_area),
    ]
    .into_iter()
    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    .map(|(m, f)| (m.to_string(), -f))
    .expect("four components")
}

/// Adds keep-marked gates with unread outputs on the primary inputs until
/// `n` matches `reference` within `epsilon` in every component, or no
/// single addition, removal or swap of a cell reduces the summed squares of
/// the fractional residuals.
///
/// The palette is BUFF and NOT on each input plus AND and NOR over the most
/// active inputs for fan-ins 2 to 8; the wide gates add area with little
/// switching.
pub fn pad_dummy(
    n: &Netlist,
    reference: &CostReport,
    lib: &CellLibrary,
    workload: &Workload,
    epsilon: f64,
) -> Result<PadOutcome, AttackError> {
    let current = cost_report(n, lib, workload)?;
    let start = delta(reference, &current)?;
    let p = &workload.patterns;
    let steps = p.count();
    let per_step = 1.0 / (steps.max(2) - 1) as f64;

    let mut by_activity: Vec<(u64, usize)> = (0..n.inputs().len())
        .map(|i| (count_toggles(p.lane(i), steps), i))
        .collect();
    by_activity.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    // (kind, input indices, [total, dyn, leak, area] added)
    let mut palette: Vec<(GateKind, Vec<usize>, [f64; 4])> = Vec::new();
    let mut push = |kind: GateKind, ins: Vec<usize>, toggles: u64| -> Result<(), AttackError> {
        let c = lib.cost(kind, ins.len())?;
        let d = toggles as f64 * per_step * c.e_toggle;
        palette.push((kind, ins, [c.leak + d, d, c.leak, c.area_ge]));
        Ok(())
    };
    for &(t, i) in &by_activity {
        push(GateKind::Buff, vec![i], t)?;
        push(GateKind::Not, vec![i], t)?;
    }
    for k in 2..=8.min(by_activity.len()) {
        let ins: Vec<usize> = by_activity[..k].iter().map(|&(_, i)| i).collect();
        for kind in [GateKind::And, GateKind::Nor] {
            let bits: Vec<u64> = (0..p.words())
                .map(|w| {
                    let words: Vec<u64> = ins.iter().map(|&i| p.word(i, w)).collect();
                    kind.eval_word(&words)
                })
                .collect();
            push(kind, ins.clone(), count_toggles(&bits, steps))?;
        }
    }

    let refs = [reference.p_total, reference.p_dyn, reference.p_leak, reference.area_ge];
    let fracs = |d: &[f64; 4]| -> [f64; 4] {
        [0, 1, 2, 3].map(|x| match (d[x], refs[x]) {
            (0.0, _) => 0.0,
            (v, 0.0) => v.signum() * f64::INFINITY,
            (v, r) => v / r,
        })
    };
    let worst_frac = |d: &[f64; 4]| fracs(d).iter().fold(0.0f64, |m, f| m.max(f.abs()));
    let spread = |d: &[f64; 4]| fracs(d).iter().map(|f| f * f).sum::<f64>();
    // Hill climb over adding one cell, removing one, or swapping one for
    // another.
    let mut deficit = [start.d_total, start.d_dyn, start.d_leak, start.d_area];
    let mut counts = vec![0usize; palette.len()];
    let none = palette.len();
    for _ in 0..4096 {
        if worst_frac(&deficit) <= epsilon {
            break;
        }
        let mut best: Option<(f64, usize, usize, [f64; 4])> = None;
        for remove in (0..=none).filter(|&r| r == none || counts[r] > 0) {
            for add in 0..=none {
                if add == remove {
                    continue;
                }
                let mut next = deficit;
                if add < none {
                    (0..4).for_each(|x| next[x] -= palette[add].2[x]);
                }
                if remove < none {
                    (0..4).for_each(|x| next[x] += palette[remove].2[x]);
                }
                let s = spread(&next);
                if best.as_ref().is_none_or(|b| s < b.0) {
                    best = Some((s, remove, add, next));
                }
            }
        }
        match best {
            Some((s, remove, add, next)) if s < spread(&deficit) => {
                if remove < none {
                    counts[remove] -= 1;
                }
                if add < none {
                    counts[add] += 1;
                }
                deficit = next;
            }
            _ => break,
        }
    }
    let picks: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat_n(j, c))
        .collect();

    if picks.is_empty() {
        return Ok(PadOutcome {
            netlist: n.clone(),
            added: Vec::new(),
            converged: within(&start, epsilon),
            residual: start,
        });
    }
    let mut fresh = FreshNames::for_netlist(n);
    let mut gates = n.gates().to_vec();
    let mut added = Vec::with_capacity(picks.len());
    for j in picks {
        let (kind, ins, _) = &palette[j];
        let out = fresh.next_name();
        let names: Vec<&str> = ins.iter().map(|&i| n.inputs()[i].as_str()).collect();
        gates.push(Gate::new(&out, *kind, &names).kept());
        added.push(out);
    }
    let padded = Netlist::new(n.name(), n.inputs().to_vec(), n.outputs().to_vec(), gates)?;
    let residual = delta(reference, &cost_report(&padded, lib, workload)?)?;
    Ok(PadOutcome {
        netlist: padded,
        added,
        converged: within(&residual, epsilon),
        residual,
    })
}

fn row_where(p: &PatternBlock, hits: &[u64]) -> Option<usize> {
    hits.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(w, bits)| w * 64 + bits.trailing_zeros() as usize)
        .filter(|&r| r < p.count())
}

fn diff_words(a: &PatternBlock, b: &PatternBlock) -> Vec<u64> {
    (0..a.words())
        .map(|w| (0..a.width()).fold(0, |acc, o| acc | (a.word(o, w) ^ b.word(o, w))))
        .collect()
}

/// Builds a sequence that fires the trojan and shows the payload: rare
/// events up to the threshold, then a pattern on which the inverted target
/// reaches a primary output. Checked by simulation against both `n` and
/// `n_prime`.
fn attacker_sequence(
    n: &Netlist,
    n_prime: &Netlist,
    infected: &Netlist,
    ht: &TrojanInstance,
    budget: usize,
    seed: u64,
) -> Result<Option<PatternBlock>, AttackError> {
    const BLOCK: usize = 4096;
    let width = n.inputs().len();
    let event = infected.cone(&[ht.event_net()])?;
    let event_cols: Vec<usize> = event
        .inputs()
        .iter()
        .map(|i| n.inputs().iter().position(|x| x == i).expect("host input"))
        .collect();
    let forced = sweep_dead_gates(&replace_with_constant(infected, ht.trigger_net(), true)?).0;
    let comparator = ht.template.kind == TemplateKind::Comparator;

    let mut event_row = None;
    let mut obs_row = None;
    for b in 0..budget.div_ceil(BLOCK) {
        let p = PatternBlock::seeded(width, BLOCK, seed.wrapping_add(b as u64));
        let lanes = event_cols.iter().map(|&c| p.lane(c).to_vec()).collect();
        let ev = simulate_comb(&event, &PatternBlock::from_lanes(event_cols.len(), BLOCK, lanes))?;
        let ev = ev.lane(0).to_vec();
        if event_row.is_none() {
            event_row = row_where(&p, &ev).map(|r| p.row(r));
        }
        if obs_row.is_none() {
            let f = simulate_comb(&forced, &p)?;
            let a = diff_words(&f, &simulate_comb(n, &p)?);
            let b = diff_words(&f, &simulate_comb(n_prime, &p)?);
            let mut hits: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x & y).collect();
            if comparator {
                hits.iter_mut().zip(&ev).for_each(|(h, e)| *h &= e);
            }
            obs_row = row_where(&p, &hits).map(|r| p.row(r));
        }
        if event_row.is_some() && obs_row.is_some() {
            break;
        }
    }
    let (Some(event_row), Some(obs_row)) = (event_row, obs_row) else {
        return Ok(None);
    };
    let mut rows = Vec::new();
    if !comparator {
        rows.extend(std::iter::repeat_n(event_row, ht.template.threshold() as usize));
    }
    rows.push(obs_row);
    let seq = PatternBlock::from_rows(width, &rows)?;
    let last = seq.count() - 1;
    let shows =
        mismatch_steps(n, infected, &seq)?.contains(&last) && mismatch_steps(n_prime, infected, &seq)?.contains(&last);
    Ok(shows.then_some(seq))
}

/// Places the first template and location, in order, that passes every
/// defender suite, can be fired by a constructed sequence, and keeps the
/// infected circuit within `epsilon` of `n` in every cost component,
/// padding with dummy gates when it falls short.
///
/// Returns the infected netlist, the placed instance, and a report; on
/// exhaustion the report of every rejected pair comes with the error.
pub fn inject(
    n: &Netlist,
    n_prime: &Netlist,
    templates: &[TrojanTemplate],
    defender: &DefenderProfile,
    lib: &CellLibrary,
    workload: &Workload,
    opts: &InjectOptions,
) -> Result<(Netlist, TrojanInstance, InjectionReport), AttackError> {
    let reference = cost_report(n, lib, workload)?;
    let salvaged = cost_report(n_prime, lib, workload)?;
    let probs = monte_carlo_probs(n_prime, opts.probability_samples, opts.seed);
    let toggles = toggle_counts(n_prime, &workload.patterns)?;
    let defender_patterns: usize = defender.suites().iter().map(|s| s.patterns.count()).sum();
    let eps = opts.epsilon;
    let mut report = InjectionReport {
        epsilon: eps,
        enforce_budget: opts.enforce_budget,
        defender_patterns,
        chosen: None,
        tried: Vec::new(),
        dummies: Vec::new(),
        reference: reference.clone(),
        salvaged: salvaged.clone(),
        infected: None,
        delta: None,
        attacker_sequence: Vec::new(),
        p_ft: None,
        p_u: None,
    };
    let headroom = reference.area_ge * (1.0 + eps) - salvaged.area_ge;

    for t in templates {
        let label = t.label();
        let skip = |rejection| Tried {
            template: label.clone(),
            location: None,
            taps: Vec::new(),
            target: None,
            rejection,
        };
        if opts.enforce_budget {
            let smallest = area(instantiate_ht(t, &vec![true; t.tap_arity])?.netlist(), lib)?;
            if smallest > headroom {
                let excess = (salvaged.area_ge + smallest - reference.area_ge) / reference.area_ge;
                report.tried.push(skip(Rejection::BudgetExceeded {
                    metric: "area".into(),
                    excess,
                }));
                continue;
            }
        }
        let locations = match enumerate_locations(n_prime, &probs, defender, t, &opts.rules, &toggles) {
            Ok(l) => l,
            Err(AttackError::NoLocations) => {
                report.tried.push(skip(Rejection::NoLocations));
                continue;
            }
            Err(e) => return Err(e),
        };

        for (j, loc) in locations.iter().enumerate() {
            let mut tried = Tried {
                template: label.clone(),
                location: Some(j),
                taps: loc.taps.clone(),
                target: Some(loc.target.clone()),
                rejection: Rejection::Untriggerable,
            };
            let (mut infected, inst) = insert_ht(n_prime, t, loc, j)?;
            if let Some(m) = functional_test(&infected, n, defender)?.mismatches.into_iter().next() {
                tried.rejection = Rejection::FunctionalFail {
                    suite: m.suite,
                    step: m.step,
                    output: m.output,
                };
                report.tried.push(tried);
                continue;
            }
            let seed = opts.seed.wrapping_add(j as u64);
            let Some(seq) = attacker_sequence(n, n_prime, &infected, &inst, opts.search_patterns, seed)? else {
                report.tried.push(tried);
                continue;
            };

            let mut dummies = Vec::new();
            let mut cost = cost_report(&infected, lib, workload)?;
            let mut d = delta(&reference, &cost)?;
            if opts.enforce_budget && !within(&d, eps) {
                let over = [d.frac_total, d.frac_dyn, d.frac_leak, d.frac_area]
                    .iter()
                    .any(|f| *f < -eps);
                if !over {
                    let pad = pad_dummy(&infected, &reference, lib, workload, eps)?;
                    if pad.converged {
                        infected = pad.netlist;
                        dummies = pad.added;
                        cost = cost_report(&infected, lib, workload)?;
                        d = pad.residual;
                    } else {
                        d = pad.residual;
                    }
                }
                if !within(&d, eps) {
                    let (metric, excess) = worst(&d);
                    tried.rejection = Rejection::BudgetExceeded { metric, excess };
                    report.tried.push(tried);
                    continue;
                }
            }
            // Dummy outputs are unread, but the guarantee is re-checked.
            if !functional_test(&infected, n, defender)?.pass {
                return Err(AttackError::Invalid("padding changed a tested output".into()));
            }

            report.p_ft = Some(trigger_prob(
                &infected,
                &inst,
                &probs,
                defender_patterns as u64,
                opts.trigger_trials,
                opts.seed,
            )?);
            if n.inputs().len() <= MAX_EXHAUSTIVE_INPUTS {
                let n_u = exhaustive_diff(n, &infected)?;
                report.p_u = Some(untargeted_prob(n_u as u128, n.inputs().len() as u32)?);
            }
            report.chosen = Some(Chosen {
                template: *t,
                location: j,
                taps: inst.taps.clone(),
                rare: inst.rare.clone(),
                target: inst.target.clone(),
                trigger_net: inst.trigger_net().to_string(),
                gates: inst.gate_nets(),
            });
            report.dummies = dummies;
            report.infected = Some(cost);
            report.delta = Some(d);
            report.attacker_sequence = seq
                .rows()
                .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
                .collect();
            let name = format!("{}_tz", n.name());
            return Ok((infected.with_name(name), inst, report));
        }
    }
    Err(AttackError::Exhausted(Box::new(report)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atpg::{SuiteKind, TestPatternSet};
    use crate::detector::Margins;
    use crate::netlist::parse_bench;
    use crate::probability::exact_probs;
    use std::collections::HashSet;

    fn profile(patterns: PatternBlock) -> DefenderProfile {
        let suite = TestPatternSet {
            patterns,
            coverage: 0.0,
            seed: 0,
            kind: SuiteKind::StuckAtRandom,
            draws: 0,
            exhausted: false,
            detectable: 0,
            undetected: Vec::new(),
        };
        DefenderProfile::new(vec![suite], Margins::default()).unwrap()
    }

    /// Eight inputs; `r` is 1 only on 11111111, `y` and `z` are ordinary.
    fn host() -> Netlist {
        let mut text: String = (0..8).map(|i| format!("INPUT(x{i})\n")).collect();
        text.push_str("OUTPUT(y)\nOUTPUT(z)\n");
        text.push_str("r = AND(x0, x1, x2, x3, x4, x5, x6, x7)\n");
        text.push_str("u = NAND(x0, x1)\nv = NOR(x2, x3)\ny = XOR(u, v)\nz = OR(x4, x5)\n");
        parse_bench(&text).unwrap()
    }

    #[test]
    fn combinations_in_order() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn locations_follow_rules() {
        let n = host();
        let probs = exact_probs(&n).unwrap();
        let p = profile(PatternBlock::seeded(8, 20, 1));
        let w = Workload::random(8, 200, 1);
        let toggles = toggle_counts(&n, &w.patterns).unwrap();
        let rules = LocationRules::default();
        let t = TrojanTemplate::counter(3);
        // 7 * 0.1 / 20 = 0.035 admits r (1/256) and nothing else.
        assert!((rules.p_e_max(&t, 20) - 0.035).abs() < 1e-15);
        let locs = enumerate_locations(&n, &probs, &p, &t, &rules, &toggles).unwrap();
        assert!(locs.iter().all(|l| l.taps == ["r"] && l.rare == [true]));
        assert_eq!(locs[0].p_event, 1.0 / 256.0);
        let targets: HashSet<&str> = locs.iter().map(|l| l.target.as_str()).collect();
        assert_eq!(targets, HashSet::from(["u", "v", "y", "z"]));
        // r is unobserved, so it is never a target.
        assert!(!targets.contains("r"));

        let flat = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = XOR(a, b)\n").unwrap();
        let probs = exact_probs(&flat).unwrap();
        let toggles = toggle_counts(&flat, &PatternBlock::seeded(2, 50, 1)).unwrap();
        let p = profile(PatternBlock::seeded(2, 4, 1));
        assert_eq!(
            enumerate_locations(&flat, &probs, &p, &t, &rules, &toggles).unwrap_err(),
            AttackError::NoLocations
        );
    }

    #[test]
    fn zero_deficit_pads_nothing() {
        let n = host();
        let lib = CellLibrary::default();
        let w = Workload::random(8, 300, 2);
        let r = cost_report(&n, &lib, &w).unwrap();
        let out = pad_dummy(&n, &r, &lib, &w, 0.0).unwrap();
        assert!(out.added.is_empty());
        assert!(out.converged);
        assert_eq!(out.netlist, n);
    }

    #[test]
    fn one_buffer_closes_its_own_deficit() {
        let n = host();
        let lib = CellLibrary::default();
        let w = Workload::random(8, 300, 2);
        let busiest = (0..8)
            .max_by_key(|&i| (count_toggles(w.patterns.lane(i), 300), std::cmp::Reverse(i)))
            .unwrap();
        let mut gates = n.gates().to_vec();
        gates.push(Gate::new("pad", GateKind::Buff, &[&format!("x{busiest}")]).kept());
        let bigger = Netlist::new("h", n.inputs().to_vec(), n.outputs().to_vec(), gates).unwrap();
        let target = cost_report(&bigger, &lib, &w).unwrap();
        let out = pad_dummy(&n, &target, &lib, &w, 1e-9).unwrap();
        assert_eq!(out.added.len(), 1);
        assert!(out.converged);
        let g = out.netlist.gates().last().unwrap();
        assert_eq!(
            (g.kind, g.inputs[0].clone(), g.keep),
            (GateKind::Buff, format!("x{busiest}"), true)
        );
        assert_eq!(exhaustive_diff(&n, &out.netlist).unwrap(), 0);
    }

    #[test]
    fn padding_reaches_tolerance_and_is_invisible() {
        // The reference carries extra logic the padded host has to match.
        let n = host();
        let lib = CellLibrary::default();
        let w = Workload::random(8, 300, 3);
        let mut gates = n.gates().to_vec();
        gates.push(Gate::new("e1", GateKind::And, &["x0", "x3", "x5", "x6"]).kept());
        gates.push(Gate::new("e2", GateKind::Xor, &["u", "z"]).kept());
        gates.push(Gate::new("e3", GateKind::Dff, &["e2"]).kept());
        let bigger = Netlist::new("h", n.inputs().to_vec(), n.outputs().to_vec(), gates).unwrap();
        let r = cost_report(&bigger, &lib, &w).unwrap();
        let out = pad_dummy(&n, &r, &lib, &w, 0.02).unwrap();
        assert!(out.converged, "{:?}", out.residual);
        assert!(!out.added.is_empty());
        assert_eq!(exhaustive_diff(&n, &out.netlist).unwrap(), 0);
        // Dummies survive a dead sweep.
        let swept = sweep_dead_gates(&out.netlist).0;
        assert!(out.added.iter().all(|d| swept.contains_net(d)));
    }

    #[test]
    fn additive_insertion_on_small_host() {
        let n = host();
        let lib = CellLibrary::default();
        let w = Workload::random(8, 300, 4);
        let defender = profile(PatternBlock::seeded(8, 20, 9));
        let opts = InjectOptions {
            enforce_budget: false,
            probability_samples: 1 << 16,
            ..InjectOptions::default()
        };
        let (infected, inst, report) =
            inject(&n, &n, &[TrojanTemplate::counter(2)], &defender, &lib, &w, &opts).unwrap();
        assert_eq!(inst.taps, ["r"]);
        assert!(functional_test(&infected, &n, &defender).unwrap().pass);
        let seq = PatternBlock::from_strings(8, &report.attacker_sequence).unwrap();
        assert_eq!(seq.count(), 4);
        assert_eq!(seq.row(0), vec![true; 8]);
        assert_eq!(mismatch_steps(&n, &infected, &seq).unwrap().last(), Some(&3));
        // The trojan is dormant from reset on single patterns.
        assert_eq!(report.p_u, Some(0.0));
        let d = report.delta.unwrap();
        assert!(d.d_area < 0.0);
        assert!(report.p_ft.unwrap().analytic < 1e-3);
    }

    #[test]
    fn empty_budget_is_exhausted() {
        let n = host();
        let lib = CellLibrary::default();
        let w = Workload::random(8, 300, 4);
        let defender = profile(PatternBlock::seeded(8, 20, 9));
        let err = inject(
            &n,
            &n,
            &[TrojanTemplate::counter(3)],
            &defender,
            &lib,
            &w,
            &InjectOptions::default(),
        )
        .unwrap_err();
        let AttackError::Exhausted(report) = err else {
            panic!("expected exhaustion");
        };
        assert_eq!(report.tried.len(), 1);
        assert!(matches!(report.tried[0].rejection, Rejection::BudgetExceeded { .. }));
        assert!(report.chosen.is_none());
    }
}
