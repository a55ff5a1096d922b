// SPDX-License-Identifier: Apache-2.0

//! Property tests over seeded random circuits.

mod common;

use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_comb, random_tree, ScalarEval};
use tzlab::atpg::{enumerate_faults, fault_simulate, generate_tests, DefenderProfile, SuiteKind, TestPatternSet};
use tzlab::attack::{pad_dummy, salvage, StepOutcome};
use tzlab::benchmarks;
use tzlab::costmodel::{area, cost_report, dynamic, leakage, CellLibrary, CostReport, Workload, WorkloadId};
use tzlab::detector::{power_screen, Margins};
use tzlab::logicsim::{exhaustive_diff, simulate_comb, simulate_seq, toggle_counts, PatternBlock};
use tzlab::netlist::{insert_subcircuit, replace_with_constant, sweep_dead_gates, topo_order, Subcircuit};
use tzlab::probability::{exact_probs, find_candidates, gate_output_prob, monte_carlo_probs, propagate_uniform};
use tzlab::{parse_bench, write_bench, Gate, GateKind, Netlist};

fn circuit(seed: u64, inputs: usize, gates: usize) -> Netlist {
    random_comb(&mut ChaCha8Rng::seed_from_u64(seed), inputs, gates)
}

/// `n` with only its first output kept, so the rest of the logic may be dead.
fn first_output_only(n: &Netlist) -> Netlist {
    Netlist::new(
        "cut",
        n.inputs().to_vec(),
        vec![n.outputs()[0].clone()],
        n.gates().to_vec(),
    )
    .unwrap()
}

fn suite_of(patterns: PatternBlock) -> TestPatternSet {
    TestPatternSet {
        patterns,
        coverage: 0.0,
        seed: 0,
        kind: SuiteKind::StuckAtRandom,
        draws: 0,
        exhausted: false,
        detectable: 0,
        undetected: Vec::new(),
    }
}

fn census(gates: &[Gate]) -> BTreeMap<(GateKind, Vec<String>, String), usize> {
    let mut m = BTreeMap::new();
    for g in gates {
        *m.entry((g.kind, g.inputs.clone(), g.output.clone())).or_default() += 1;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bench_round_trip(seed in any::<u64>()) {
        let n = circuit(seed, 10, 40);
        let back = parse_bench(&write_bench(&n)).unwrap();
        prop_assert_eq!(back.inputs(), n.inputs());
        prop_assert_eq!(back.outputs(), n.outputs());
        prop_assert_eq!(census(back.gates()), census(n.gates()));
        let nets: HashSet<&str> = n.nets().collect();
        prop_assert_eq!(back.nets().collect::<HashSet<_>>(), nets);
    }

    #[test]
    fn topo_order_respects_drivers(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 8, 40);
        let mut gates = n.gates().to_vec();
        gates.shuffle(&mut rng);
        let shuffled = Netlist::new("s", n.inputs().to_vec(), n.outputs().to_vec(), gates).unwrap();
        let order = topo_order(&shuffled);
        let pos: BTreeMap<&str, usize> = order
            .iter()
            .enumerate()
            .map(|(i, &g)| (shuffled.gates()[g].output.as_str(), i))
            .collect();
        for (i, &g) in order.iter().enumerate() {
            for inp in &shuffled.gates()[g].inputs {
                if let Some(&p) = pos.get(inp.as_str()) {
                    prop_assert!(p < i);
                }
            }
        }
    }

    #[test]
    fn tie_off_keeps_outputs_where_net_matches(seed in any::<u64>(), value in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 10, 40);
        let net = n.gates()[rng.random_range(0..n.gates().len())].output.clone();
        let (tied, _) = sweep_dead_gates(&replace_with_constant(&n, &net, value).unwrap());
        let all = PatternBlock::exhaustive(n.inputs().len()).unwrap();
        let (before, after) = (simulate_comb(&n, &all).unwrap(), simulate_comb(&tied, &all).unwrap());
        let eval = ScalarEval::new(&n);
        for p in 0..all.count() {
            if eval.all_nets(&all.row(p))[&net] == value {
                prop_assert_eq!(before.row(p), after.row(p));
            }
        }
    }

    #[test]
    fn sweep_preserves_outputs(seed in any::<u64>()) {
        let n = first_output_only(&circuit(seed, 10, 40));
        let (swept, removed) = sweep_dead_gates(&n);
        prop_assert_eq!(swept.gates().len() + removed.len(), n.gates().len());
        prop_assert_eq!(exhaustive_diff(&n, &swept).unwrap(), 0);
        // Nothing left is dead.
        let live = swept.fanin_cone(&[swept.outputs()[0].as_str()]);
        prop_assert!(swept.gates().iter().all(|g| live.contains(g.output.as_str())));
    }

    #[test]
    fn identity_payload_is_invisible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 8, 30);
        let sub = Netlist::new(
            "id",
            vec!["t0".into(), "s".into()],
            vec!["s_out".into()],
            vec![Gate::new("t_n", GateKind::Not, &["t0"]), Gate::new("s_out", GateKind::Buff, &["s"])],
        )
        .unwrap();
        let sub = Subcircuit::new(sub, vec!["t0".into()], "s", "s_out").unwrap();
        let target = n.gates()[rng.random_range(0..n.gates().len())].output.clone();
        let tap = n.inputs()[rng.random_range(0..n.inputs().len())].clone();
        let ins = insert_subcircuit(&n, &sub, &[tap], &target).unwrap();
        prop_assert_eq!(ins.netlist.outputs(), n.outputs());
        prop_assert_eq!(exhaustive_diff(&n, &ins.netlist).unwrap(), 0);
    }

    #[test]
    fn bit_parallel_matches_scalar(seed in any::<u64>(), count in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 10, 50);
        let p = PatternBlock::random(n.inputs().len(), count, &mut rng);
        let out = simulate_comb(&n, &p).unwrap();
        let eval = ScalarEval::new(&n);
        for t in 0..count {
            prop_assert_eq!(out.row(t), eval.outputs(&p.row(t), None));
        }
        // Without state, sequential simulation is the same thing step by step.
        prop_assert_eq!(simulate_seq(&n, &p).unwrap().output_block(), out);
    }

    #[test]
    fn toggles_ignore_gate_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 10, 40);
        let mut gates = n.gates().to_vec();
        gates.shuffle(&mut rng);
        let shuffled = Netlist::new("s", n.inputs().to_vec(), n.outputs().to_vec(), gates).unwrap();
        let w = PatternBlock::random(n.inputs().len(), 300, &mut rng);
        let a: BTreeMap<String, u64> = toggle_counts(&n, &w).unwrap().iter().map(|(k, v)| (k.to_string(), v)).collect();
        let b: BTreeMap<String, u64> =
            toggle_counts(&shuffled, &w).unwrap().iter().map(|(k, v)| (k.to_string(), v)).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exhaustive_diff_counts_disagreements(seed in any::<u64>(), value in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_comb(&mut rng, 10, 30);
        let net = a.gates()[rng.random_range(0..a.gates().len())].output.clone();
        let b = replace_with_constant(&a, &net, value).unwrap();
        let all = PatternBlock::exhaustive(a.inputs().len()).unwrap();
        let (ea, eb) = (ScalarEval::new(&a), ScalarEval::new(&b));
        let direct = (0..all.count())
            .filter(|&p| ea.outputs(&all.row(p), None) != eb.outputs(&all.row(p), None))
            .count() as u64;
        prop_assert_eq!(exhaustive_diff(&a, &b).unwrap(), direct);
    }

    #[test]
    fn probabilities_in_range(seed in any::<u64>()) {
        let n = circuit(seed, 10, 40);
        for m in [propagate_uniform(&n), monte_carlo_probs(&n, 4096, seed)] {
            prop_assert!(m.values().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn propagation_exact_on_trees(seed in any::<u64>()) {
        let n = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let (prop, exact) = (propagate_uniform(&n), exact_probs(&n).unwrap());
        for (net, p) in exact.iter() {
            prop_assert!((prop.p1(net).unwrap() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn raising_threshold_never_adds_candidates(seed in any::<u64>(), lo in 0.51f64..0.99, step in 0.0f64..0.2) {
        let n = circuit(seed, 10, 40);
        let m = propagate_uniform(&n);
        let hi = (lo + step).min(0.999);
        let wide: HashSet<String> = find_candidates(&m, &n, lo).unwrap().c.into_iter().map(|c| c.net).collect();
        let narrow = find_candidates(&m, &n, hi).unwrap();
        prop_assert!(narrow.c.iter().all(|c| wide.contains(&c.net)));
    }

    #[test]
    fn negation_duality(ps in prop::collection::vec(0.0f64..=1.0, 2..=8)) {
        for (pos, neg) in [(GateKind::And, GateKind::Nand), (GateKind::Or, GateKind::Nor)] {
            let a = gate_output_prob(pos, &ps).unwrap();
            prop_assert!((gate_output_prob(neg, &ps).unwrap() - (1.0 - a)).abs() <= 1e-15);
        }
        let two = &ps[..2];
        let x = gate_output_prob(GateKind::Xor, two).unwrap();
        prop_assert!((gate_output_prob(GateKind::Xnor, two).unwrap() - (1.0 - x)).abs() <= 1e-15);
    }

    #[test]
    fn detections_match_single_fault_resimulation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 10, 40);
        let p = PatternBlock::random(n.inputs().len(), 100, &mut rng);
        let faults = enumerate_faults(&n);
        let r = fault_simulate(&n, &p, &faults).unwrap();
        let eval = ScalarEval::new(&n);
        for t in 0..p.count() {
            let row = p.row(t);
            let good = eval.outputs(&row, None);
            for (fi, f) in faults.iter().enumerate() {
                prop_assert_eq!(r.detected(fi, t), eval.outputs(&row, Some(f)) != good, "{} at {}", f, t);
            }
        }
    }

    #[test]
    fn appending_patterns_never_lowers_coverage(seed in any::<u64>(), a in 1usize..100, b in 1usize..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 10, 40);
        let faults = enumerate_faults(&n);
        let first = PatternBlock::random(n.inputs().len(), a, &mut rng);
        let more = first.concat(&PatternBlock::random(n.inputs().len(), b, &mut rng));
        let before = fault_simulate(&n, &first, &faults).unwrap().coverage();
        prop_assert!(fault_simulate(&n, &more, &faults).unwrap().coverage() >= before);
    }

    #[test]
    fn every_kept_pattern_adds_a_detection(seed in any::<u64>()) {
        let n = circuit(seed, 10, 40);
        let suite = generate_tests(&n, 1.0, seed, 5000).unwrap();
        let faults = enumerate_faults(&n);
        let r = fault_simulate(&n, &suite.patterns, &faults).unwrap();
        for t in 0..suite.patterns.count() {
            prop_assert!((0..faults.len()).any(|f| r.first_detection(f) == Some(t)), "pattern {} adds nothing", t);
        }
    }

    #[test]
    fn area_and_leakage_add_over_disjoint_union(s1 in any::<u64>(), s2 in any::<u64>()) {
        let lib = CellLibrary::default();
        let (a, b) = (circuit(s1, 8, 30), circuit(s2, 8, 30));
        let rename = |x: &str| format!("b_{x}");
        let mut gates = a.gates().to_vec();
        gates.extend(b.gates().iter().map(|g| {
            let ins: Vec<String> = g.inputs.iter().map(|i| rename(i)).collect();
            let ins: Vec<&str> = ins.iter().map(String::as_str).collect();
            Gate::new(rename(&g.output), g.kind, &ins)
        }));
        let mut inputs = a.inputs().to_vec();
        inputs.extend(b.inputs().iter().map(|i| rename(i)));
        let mut outputs = a.outputs().to_vec();
        outputs.extend(b.outputs().iter().map(|o| rename(o)));
        let u = Netlist::new("u", inputs, outputs, gates).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
        prop_assert!(close(area(&u, &lib).unwrap(), area(&a, &lib).unwrap() + area(&b, &lib).unwrap()));
        prop_assert!(close(leakage(&u, &lib).unwrap(), leakage(&a, &lib).unwrap() + leakage(&b, &lib).unwrap()));
    }

    #[test]
    fn adding_a_gate_costs_area_and_leakage(seed in any::<u64>(), kind in 0usize..4) {
        let lib = CellLibrary::default();
        let n = circuit(seed, 8, 30);
        let kinds = [GateKind::Buff, GateKind::Not, GateKind::Nand, GateKind::Xor];
        let src = n.inputs()[0].as_str();
        let ins: Vec<&str> = vec![src; kinds[kind].arity().start().to_owned()];
        let mut gates = n.gates().to_vec();
        gates.push(Gate::new("extra", kinds[kind], &ins).kept());
        let bigger = Netlist::new("b", n.inputs().to_vec(), n.outputs().to_vec(), gates).unwrap();
        prop_assert!(area(&bigger, &lib).unwrap() > area(&n, &lib).unwrap());
        prop_assert!(leakage(&bigger, &lib).unwrap() > leakage(&n, &lib).unwrap());
    }

    #[test]
    fn dynamic_power_zero_iff_nothing_toggles(seed in any::<u64>(), constant in any::<bool>()) {
        let lib = CellLibrary::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 8, 30);
        let w = if constant {
            let row: Vec<bool> = (0..n.inputs().len()).map(|_| rng.random()).collect();
            PatternBlock::from_rows(n.inputs().len(), &vec![row; 50]).unwrap()
        } else {
            PatternBlock::random(n.inputs().len(), 50, &mut rng)
        };
        let t = toggle_counts(&n, &w).unwrap();
        let gate_toggles: u64 = n
            .gates()
            .iter()
            .filter(|g| !g.kind.is_const())
            .map(|g| t.get(&g.output).unwrap())
            .sum();
        prop_assert_eq!(dynamic(&t, &n, &lib).unwrap() == 0.0, gate_toggles == 0);
    }

    #[test]
    fn wider_margins_never_flag_more(
        golden in prop::array::uniform3(1.0f64..100.0),
        scale in prop::array::uniform3(0.9f64..1.1),
        m in prop::array::uniform4(0.0f64..0.05),
        extra in prop::array::uniform4(0.0f64..0.05),
    ) {
        let w = WorkloadId { id: "w".into(), count: 10 };
        let g = CostReport::new(golden[0], golden[1], golden[2], w.clone());
        let d = CostReport::new(golden[0] * scale[0], golden[1] * scale[1], golden[2] * scale[2], w);
        let narrow = Margins { total: m[0], dynamic: m[1], leakage: m[2], area: m[3] };
        let wide = Margins {
            total: m[0] + extra[0],
            dynamic: m[1] + extra[1],
            leakage: m[2] + extra[2],
            area: m[3] + extra[3],
        };
        let (a, b) = (power_screen(&d, &g, &narrow).unwrap(), power_screen(&d, &g, &wide).unwrap());
        prop_assert!(a.any_flagged() || !b.any_flagged());
        for (x, y) in [(&a.total, &b.total), (&a.dynamic, &b.dynamic), (&a.leakage, &b.leakage), (&a.area, &b.area)] {
            prop_assert!(x.flagged || !y.flagged);
        }
    }

    #[test]
    fn zero_margins_flag_any_added_gate(seed in any::<u64>()) {
        let lib = CellLibrary::default();
        let n = circuit(seed, 8, 30);
        let mut gates = n.gates().to_vec();
        gates.push(Gate::new("extra", GateKind::Buff, &[n.inputs()[0].as_str()]).kept());
        let dut = Netlist::new("d", n.inputs().to_vec(), n.outputs().to_vec(), gates).unwrap();
        let w = Workload::random(n.inputs().len(), 100, seed);
        let s = power_screen(&cost_report(&dut, &lib, &w).unwrap(), &cost_report(&n, &lib, &w).unwrap(), &Margins::uniform(0.0)).unwrap();
        prop_assert!(s.area.flagged);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn padding_never_changes_function(seed in any::<u64>(), deficit in 0.0f64..0.05) {
        let lib = CellLibrary::default();
        let n = circuit(seed, 8, 30);
        let w = Workload::random(n.inputs().len(), 200, seed);
        let own = cost_report(&n, &lib, &w).unwrap();
        let reference = CostReport::new(
            own.area_ge * (1.0 + deficit),
            own.p_leak * (1.0 + deficit),
            own.p_dyn * (1.0 + deficit),
            own.workload.clone(),
        );
        let padded = pad_dummy(&n, &reference, &lib, &w, 0.01).unwrap();
        prop_assert_eq!(exhaustive_diff(&n, &padded.netlist).unwrap(), 0);
        prop_assert!(padded.netlist.gates().len() >= n.gates().len());
    }

    #[test]
    fn salvage_is_safe_and_never_costs_more(seed in any::<u64>(), count in 4usize..64) {
        let lib = CellLibrary::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_comb(&mut rng, 10, 40);
        let p = PatternBlock::random(n.inputs().len(), count, &mut rng);
        let defender = DefenderProfile::new(vec![suite_of(p.clone())], Margins::default()).unwrap();
        let w = Workload::random(n.inputs().len(), 200, seed);
        let (n_prime, r) = salvage(&n, &defender, 0.7, &lib, &w).unwrap();
        // Re-checked by plain simulation rather than the salvage log.
        prop_assert_eq!(simulate_comb(&n_prime, &p).unwrap(), simulate_comb(&n, &p).unwrap());
        prop_assert!(r.modified.area_ge <= r.reference.area_ge);
        prop_assert!(r.modified.p_leak <= r.reference.p_leak);
        prop_assert!(r.modified.p_dyn <= r.reference.p_dyn);
    }

    #[test]
    fn exhaustive_defender_leaves_function_intact(seed in any::<u64>()) {
        let lib = CellLibrary::default();
        let n = circuit(seed, 8, 30);
        let all = PatternBlock::exhaustive(n.inputs().len()).unwrap();
        let defender = DefenderProfile::new(vec![suite_of(all)], Margins::default()).unwrap();
        let w = Workload::random(n.inputs().len(), 100, seed);
        let (n_prime, r) = salvage(&n, &defender, 0.6, &lib, &w).unwrap();
        prop_assert_eq!(exhaustive_diff(&n, &n_prime).unwrap(), 0);
        let accepted_changes = r
            .log
            .iter()
            .filter(|s| matches!(s.outcome, StepOutcome::Accepted { .. }) && s.n_u != Some(0))
            .count();
        prop_assert_eq!(accepted_changes, 0);
    }
}

#[test]
fn sampling_converges_on_c17() {
    let c17 = benchmarks::c17();
    let exact = exact_probs(&c17).unwrap();
    let coarse = monte_carlo_probs(&c17, 1_000, 5);
    let fine = monte_carlo_probs(&c17, 1_000_000, 5);
    let nets: Vec<&str> = exact.iter().map(|(n, _)| n).collect();
    let better = nets
        .iter()
        .filter(|n| {
            let e = exact.p1(n).unwrap();
            (fine.p1(n).unwrap() - e).abs() < (coarse.p1(n).unwrap() - e).abs()
        })
        .count();
    assert!(better * 10 >= nets.len() * 9, "{better} of {}", nets.len());
}

#[test]
fn reverted_step_leaves_netlist_untouched() {
    let n = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\nu = OR(a, b)\nv = OR(c, d)\nr = OR(u, v)\ny = BUFF(r)\n",
    )
    .unwrap();
    let all = PatternBlock::exhaustive(4).unwrap();
    let defender = DefenderProfile::new(vec![suite_of(all)], Margins::default()).unwrap();
    let w = Workload::random(4, 50, 1);
    let (out, r) = salvage(&n, &defender, 0.9, &CellLibrary::default(), &w).unwrap();
    assert!(r.log.iter().any(|s| matches!(s.outcome, StepOutcome::Reverted { .. })));
    assert_eq!(write_bench(&out), write_bench(&n));
}
