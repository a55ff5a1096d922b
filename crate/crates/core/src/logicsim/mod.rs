// SPDX-License-Identifier: Apache-2.0

//! Two-valued logic simulation.
//!
//! Combinational circuits are evaluated 64 patterns per machine word.
//! Circuits with DFFs are stepped pattern-synchronously: each applied pattern
//! is one clock, DFFs start at 0 and all latch together after the
//! combinational settle of a step.

mod patterns;

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::netlist::{GateKind, Netlist};

pub use patterns::PatternBlock;
pub(crate) use patterns::{exhaustive_word, tail_mask, words_for};

/// Largest input count accepted by exhaustive enumeration.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("pattern width {got} does not match {expected} primary inputs")]
    WidthMismatch { expected: usize, got: usize },
    #[error("netlist contains DFFs; use sequential simulation")]
    Sequential,
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("{inputs} primary inputs exceed the enumeration bound of {max}")]
    TooManyInputs { inputs: usize, max: usize },
    #[error("at least 2 patterns are needed, got {got}")]
    TooFewPatterns { got: usize },
    #[error("pattern line {line}: {message}")]
    BadPattern { line: usize, message: String },
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Op {
    pub kind: GateKind,
    pub out: u32,
    pub start: u32,
    pub len: u32,
}

/// A netlist lowered to dense net indices for fast evaluation.
///
/// Net `i < inputs` is primary input `i`; net `inputs + g` is the output of
/// gate `g` in the netlist's topological gate order.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub(crate) n_inputs: usize,
    pub(crate) n_nets: usize,
    pub(crate) ops: Vec<Op>,
    pub(crate) fanin: Vec<u32>,
    /// (DFF output, DFF data input)
    pub(crate) dffs: Vec<(u32, u32)>,
    pub(crate) outputs: Vec<u32>,
}

impl Compiled {
    pub fn new(n: &Netlist) -> Self {
        let index = n.net_index();
        let n_inputs = n.inputs().len();
        let mut ops = Vec::with_capacity(n.gates().len());
        let mut fanin = Vec::new();
        let mut dffs = Vec::new();
        for (g_idx, g) in n.gates().iter().enumerate() {
            let out = (n_inputs + g_idx) as u32;
            if g.kind == GateKind::Dff {
                dffs.push((out, index[g.inputs[0].as_str()] as u32));
                continue;
            }
            let start = fanin.len() as u32;
            fanin.extend(g.inputs.iter().map(|i| index[i.as_str()] as u32));
            ops.push(Op {
                kind: g.kind,
                out,
                start,
                len: g.inputs.len() as u32,
            });
        }
        let outputs = n.outputs().iter().map(|o| index[o.as_str()] as u32).collect();
        Compiled {
            n_inputs,
            n_nets: n.net_count(),
            ops,
            fanin,
            dffs,
            outputs,
        }
    }

    pub fn net_count(&self) -> usize {
        self.n_nets
    }

    pub fn input_count(&self) -> usize {
        self.n_inputs
    }

    pub fn output_nets(&self) -> impl Iterator<Item = usize> + '_ {
        self.outputs.iter().map(|&o| o as usize)
    }

    pub fn dff_count(&self) -> usize {
        self.dffs.len()
    }

    #[inline]
    pub(crate) fn eval_op(&self, op: &Op, vals: &[u64]) -> u64 {
        let ins = &self.fanin[op.start as usize..(op.start + op.len) as usize];
        let v = |k: usize| vals[ins[k] as usize];
        match op.kind {
            GateKind::And => ins.iter().fold(!0, |a, &i| a & vals[i as usize]),
            GateKind::Nand => !ins.iter().fold(!0, |a, &i| a & vals[i as usize]),
            GateKind::Or => ins.iter().fold(0, |a, &i| a | vals[i as usize]),
            GateKind::Nor => !ins.iter().fold(0, |a, &i| a | vals[i as usize]),
            GateKind::Xor => ins.iter().fold(0, |a, &i| a ^ vals[i as usize]),
            GateKind::Xnor => !ins.iter().fold(0, |a, &i| a ^ vals[i as usize]),
            GateKind::Not => !v(0),
            GateKind::Buff | GateKind::Dff => v(0),
            GateKind::Mux2 => (!v(0) & v(1)) | (v(0) & v(2)),
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
        }
    }

    /// Settles every combinational net. Inputs and DFF outputs must already
    /// be set in `vals`.
    #[inline]
    pub fn eval(&self, vals: &mut [u64]) {
        for op in &self.ops {
            vals[op.out as usize] = self.eval_op(op, vals);
        }
    }
}

/// Sixty-four independent sequential sessions stepped in lockstep, one per
/// bit lane.
#[derive(Clone, Debug)]
pub struct LaneSim<'a> {
    prog: &'a Compiled,
    vals: Vec<u64>,
    state: Vec<u64>,
}

impl<'a> LaneSim<'a> {
    pub fn new(prog: &'a Compiled) -> Self {
        LaneSim {
            prog,
            vals: vec![0; prog.n_nets],
            state: vec![0; prog.dffs.len()],
        }
    }

    /// Clears all DFFs to 0.
    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0);
    }

    /// Applies one input word per primary input, settles, then latches.
    /// Returns the settled net values of this step.
    pub fn step(&mut self, inputs: &[u64]) -> &[u64] {
        let p = self.prog;
        self.vals[..p.n_inputs].copy_from_slice(inputs);
        for (k, &(out, _)) in p.dffs.iter().enumerate() {
            self.vals[out as usize] = self.state[k];
        }
        p.eval(&mut self.vals);
        for (k, &(_, data)) in p.dffs.iter().enumerate() {
            self.state[k] = self.vals[data as usize];
        }
        &self.vals
    }

    pub fn values(&self) -> &[u64] {
        &self.vals
    }

    pub fn state(&self) -> &[u64] {
        &self.state
    }
}

/// Per-net values over an applied sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimTrace {
    nets: Vec<String>,
    outputs: Vec<usize>,
    steps: usize,
    /// `values[net][word]`, steps packed 64 per word.
    values: Vec<Vec<u64>>,
    final_state: Vec<bool>,
}

impl SimTrace {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nets(&self) -> &[String] {
        &self.nets
    }

    pub fn net_position(&self, net: &str) -> Option<usize> {
        self.nets.iter().position(|n| n == net)
    }

    /// Packed values of `net`, 64 steps per word.
    pub fn bits(&self, net: &str) -> Option<&[u64]> {
        self.net_position(net).map(|i| self.values[i].as_slice())
    }

    pub fn value(&self, net: &str, step: usize) -> Option<bool> {
        if step >= self.steps {
            return None;
        }
        self.bits(net).map(|b| b[step / 64] >> (step % 64) & 1 == 1)
    }

    /// DFF states after the last step, in DFF gate order.
    pub fn final_state(&self) -> &[bool] {
        &self.final_state
    }

    /// Primary-output values as a block (one lane per PO).
    pub fn output_block(&self) -> PatternBlock {
        let lanes = self.outputs.iter().map(|&i| self.values[i].clone()).collect();
        PatternBlock::from_lanes(self.outputs.len(), self.steps, lanes)
    }

    /// Debug dump: `step,net,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,net,value\n");
        for t in 0..self.steps {
            for (i, net) in self.nets.iter().enumerate() {
                let v = self.values[i][t / 64] >> (t % 64) & 1;
                let _ = writeln!(out, "{t},{net},{v}");
            }
        }
        out
    }
}

fn check_width(n: &Netlist, p: &PatternBlock) -> Result<(), SimError> {
    if p.width() != n.inputs().len() {
        return Err(SimError::WidthMismatch {
            expected: n.inputs().len(),
            got: p.width(),
        });
    }
    Ok(())
}

/// Every net of a combinational netlist over `p`, `[net][word]`.
#[allow(clippy::needless_range_loop)]
fn comb_values(prog: &Compiled, p: &PatternBlock) -> Vec<Vec<u64>> {
    let words = p.words();
    let mut values = vec![vec![0u64; words]; prog.n_nets];
    let mut vals = vec![0u64; prog.n_nets];
    for w in 0..words {
        for (i, v) in vals[..prog.n_inputs].iter_mut().enumerate() {
            *v = p.word(i, w);
        }
        prog.eval(&mut vals);
        let mask = tail_mask(p.count(), w);
        for (net, v) in vals.iter().enumerate() {
            values[net][w] = v & mask;
        }
    }
    values
}

/// Primary-output values of a combinational netlist, one lane per PO.
#[allow(clippy::needless_range_loop)]
pub fn simulate_comb(n: &Netlist, p: &PatternBlock) -> Result<PatternBlock, SimError> {
    check_width(n, p)?;
    if n.has_dff() {
        return Err(SimError::Sequential);
    }
    let prog = Compiled::new(n);
    let words = p.words();
    let mut lanes = vec![vec![0u64; words]; prog.outputs.len()];
    let mut vals = vec![0u64; prog.n_nets];
    for w in 0..words {
        for (i, v) in vals[..prog.n_inputs].iter_mut().enumerate() {
            *v = p.word(i, w);
        }
        prog.eval(&mut vals);
        for (k, &o) in prog.outputs.iter().enumerate() {
            lanes[k][w] = vals[o as usize];
        }
    }
    Ok(PatternBlock::from_lanes(prog.outputs.len(), p.count(), lanes))
}

/// Applies `seq` in order from the all-zero DFF state and records every net.
pub fn simulate_seq(n: &Netlist, seq: &PatternBlock) -> Result<SimTrace, SimError> {
    check_width(n, seq)?;
    let prog = Compiled::new(n);
    let nets: Vec<String> = n.nets().map(str::to_string).collect();
    let (values, final_state) = if prog.dffs.is_empty() {
        (comb_values(&prog, seq), Vec::new())
    } else {
        let words = seq.words();
        let mut values = vec![vec![0u64; words]; prog.n_nets];
        let mut sim = LaneSim::new(&prog);
        let mut inputs = vec![0u64; prog.n_inputs];
        for t in 0..seq.count() {
            for (i, v) in inputs.iter_mut().enumerate() {
                *v = if seq.get(t, i) { 1 } else { 0 };
            }
            let vals = sim.step(&inputs);
            for (net, v) in vals.iter().enumerate() {
                values[net][t / 64] |= (v & 1) << (t % 64);
            }
        }
        let state = sim.state().iter().map(|s| s & 1 == 1).collect();
        (values, state)
    };
    Ok(SimTrace {
        nets,
        outputs: prog.outputs.iter().map(|&o| o as usize).collect(),
        steps: seq.count(),
        values,
        final_state,
    })
}

/// First disagreement between two circuits on an applied sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub step: usize,
    pub output: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equivalence {
    pub pass: bool,
    pub counterexample: Option<Mismatch>,
}

fn check_interface(a: &Netlist, b: &Netlist) -> Result<(), SimError> {
    if a.inputs() != b.inputs() {
        return Err(SimError::InterfaceMismatch("primary inputs differ".into()));
    }
    if a.outputs() != b.outputs() {
        return Err(SimError::InterfaceMismatch("primary outputs differ".into()));
    }
    Ok(())
}

fn output_blocks(a: &Netlist, b: &Netlist, p: &PatternBlock) -> Result<(PatternBlock, PatternBlock), SimError> {
    check_interface(a, b)?;
    let run = |n: &Netlist| -> Result<PatternBlock, SimError> {
        if n.has_dff() {
            Ok(simulate_seq(n, p)?.output_block())
        } else {
            simulate_comb(n, p)
        }
    };
    Ok((run(a)?, run(b)?))
}

/// PO-for-PO comparison on every pattern of `p`, reporting the earliest
/// differing step (and the first differing PO at that step).
pub fn equivalent_on(a: &Netlist, b: &Netlist, p: &PatternBlock) -> Result<Equivalence, SimError> {
    let (ya, yb) = output_blocks(a, b, p)?;
    for w in 0..ya.words() {
        let diff = (0..ya.width()).fold(0u64, |acc, o| acc | (ya.word(o, w) ^ yb.word(o, w)));
        if diff != 0 {
            let bit = diff.trailing_zeros() as usize;
            let po = (0..ya.width())
                .find(|&o| (ya.word(o, w) ^ yb.word(o, w)) >> bit & 1 == 1)
                .expect("some output differs");
            return Ok(Equivalence {
                pass: false,
                counterexample: Some(Mismatch {
                    step: w * 64 + bit,
                    output: a.outputs()[po].clone(),
                }),
            });
        }
    }
    Ok(Equivalence {
        pass: true,
        counterexample: None,
    })
}

/// Every step of `p` on which some PO differs.
pub fn mismatch_steps(a: &Netlist, b: &Netlist, p: &PatternBlock) -> Result<Vec<usize>, SimError> {
    let (ya, yb) = output_blocks(a, b, p)?;
    let mut steps = Vec::new();
    for w in 0..ya.words() {
        let mut diff = (0..ya.width()).fold(0u64, |acc, o| acc | (ya.word(o, w) ^ yb.word(o, w)));
        while diff != 0 {
            steps.push(w * 64 + diff.trailing_zeros() as usize);
            diff &= diff - 1;
        }
    }
    Ok(steps)
}

/// Number of the `2^|PI|` input patterns on which any PO differs. DFFs are
/// held at their initial 0 state.
pub fn exhaustive_diff(a: &Netlist, b: &Netlist) -> Result<u64, SimError> {
    check_interface(a, b)?;
    let width = a.inputs().len();
    if width > MAX_EXHAUSTIVE_INPUTS {
        return Err(SimError::TooManyInputs {
            inputs: width,
            max: MAX_EXHAUSTIVE_INPUTS,
        });
    }
    let pa = Compiled::new(a);
    let pb = Compiled::new(b);
    let count = 1usize << width;
    let words = words_for(count);
    const CHUNK: usize = 1024;
    let total = (0..words.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut va = vec![0u64; pa.n_nets];
            let mut vb = vec![0u64; pb.n_nets];
            let mut hits = 0u64;
            for w in c * CHUNK..((c + 1) * CHUNK).min(words) {
                for i in 0..width {
                    let x = exhaustive_word(i, w);
                    va[i] = x;
                    vb[i] = x;
                }
                pa.eval(&mut va);
                pb.eval(&mut vb);
                let diff = pa
                    .outputs
                    .iter()
                    .zip(&pb.outputs)
                    .fold(0u64, |acc, (&x, &y)| acc | (va[x as usize] ^ vb[y as usize]));
                hits += (diff & tail_mask(count, w)).count_ones() as u64;
            }
            hits
        })
        .sum();
    Ok(total)
}

/// Per-net transition counts over an applied sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToggleCounts {
    pub nets: Vec<String>,
    pub counts: Vec<u64>,
    pub steps: usize,
}

impl ToggleCounts {
    pub fn get(&self, net: &str) -> Option<u64> {
        self.nets.iter().position(|n| n == net).map(|i| self.counts[i])
    }

    /// Toggles per step transition, i.e. `count / (steps - 1)`.
    pub fn rate(&self, net: &str) -> Option<f64> {
        self.get(net).map(|c| c as f64 / (self.steps - 1) as f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.nets.iter().map(String::as_str).zip(self.counts.iter().copied())
    }
}

/// Transitions of one packed bit stream of `steps` values.
pub(crate) fn count_toggles(bits: &[u64], steps: usize) -> u64 {
    let mut total = 0u64;
    let mut carry = 0u64;
    for (w, &v) in bits.iter().enumerate() {
        let prev = (v << 1) | carry;
        carry = v >> 63;
        let mut changed = (v ^ prev) & tail_mask(steps, w);
        if w == 0 {
            changed &= !1;
        }
        total += changed.count_ones() as u64;
    }
    total
}

/// Number of steps `t >= 1` where each net differs from step `t - 1`.
pub fn toggle_counts(n: &Netlist, seq: &PatternBlock) -> Result<ToggleCounts, SimError> {
    if seq.count() < 2 {
        return Err(SimError::TooFewPatterns { got: seq.count() });
    }
    let trace = simulate_seq(n, seq)?;
    let counts = trace
        .values
        .iter()
        .map(|bits| count_toggles(bits, trace.steps))
        .collect();
    Ok(ToggleCounts {
        nets: trace.nets,
        counts,
        steps: trace.steps,
    })
}
