// SPDX-License-Identifier: Apache-2.0

//! Signal probabilities: independence propagation, Monte Carlo and
//! exhaustive enumeration; candidate selection against a threshold.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logicsim::{exhaustive_word, tail_mask, words_for, Compiled, LaneSim, SimError, MAX_EXHAUSTIVE_INPUTS};
use crate::netlist::{Driver, GateKind, Netlist};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("{kind} takes {expected} inputs, got {got}")]
    Arity {
        kind: GateKind,
        expected: String,
        got: usize,
    },
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("expected {expected} input probabilities, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("threshold {0} must lie strictly between 0.5 and 1")]
    Threshold(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Propagated,
    MonteCarlo,
    Exact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Propagated => "propagated",
            Method::MonteCarlo => "monte_carlo",
            Method::Exact => "exact",
        }
    }
}

/// Probability of logic 1 on every net.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalProbabilityMap {
    nets: Vec<String>,
    p1: Vec<f64>,
    stderr: Option<Vec<f64>>,
    method: Method,
}

impl SignalProbabilityMap {
    fn new(n: &Netlist, p1: Vec<f64>, stderr: Option<Vec<f64>>, method: Method) -> Self {
        SignalProbabilityMap {
            nets: n.nets().map(str::to_string).collect(),
            p1,
            stderr,
            method,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.nets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nets.is_empty()
    }

    /// Values in [`Netlist::nets`] order.
    pub fn values(&self) -> &[f64] {
        &self.p1
    }

    pub fn p1(&self, net: &str) -> Option<f64> {
        self.position(net).map(|i| self.p1[i])
    }

    pub fn p0(&self, net: &str) -> Option<f64> {
        self.p1(net).map(|p| 1.0 - p)
    }

    pub fn stderr(&self, net: &str) -> Option<f64> {
        let i = self.position(net)?;
        self.stderr.as_ref().map(|s| s[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.nets.iter().map(String::as_str).zip(self.p1.iter().copied())
    }

    fn position(&self, net: &str) -> Option<usize> {
        self.nets.iter().position(|n| n == net)
    }

    /// CSV `net,p1,method,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("net,p1,method,stderr\n");
        for (i, net) in self.nets.iter().enumerate() {
            let se = self.stderr.as_ref().map(|s| format!("{:e}", s[i])).unwrap_or_default();
            let _ = writeln!(out, "{net},{},{},{se}", self.p1[i], self.method.name());
        }
        out
    }
}

/// Output probability of a gate whose inputs are independent.
pub fn gate_output_prob(kind: GateKind, inputs: &[f64]) -> Result<f64, ProbError> {
    let arity = kind.arity();
    if !arity.contains(&inputs.len()) {
        return Err(ProbError::Arity {
            kind,
            expected: format!("{}..={}", arity.start(), arity.end()),
            got: inputs.len(),
        });
    }
    if let Some(&bad) = inputs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ProbError::OutOfRange(bad));
    }
    Ok(gate_prob_unchecked(kind, inputs))
}

fn gate_prob_unchecked(kind: GateKind, p: &[f64]) -> f64 {
    let and = || p.iter().product::<f64>();
    let or = || 1.0 - p.iter().map(|x| 1.0 - x).product::<f64>();
    let xor = || p.iter().fold(0.0, |acc, &x| acc * (1.0 - x) + x * (1.0 - acc));
    match kind {
        GateKind::And => and(),
        GateKind::Nand => 1.0 - and(),
        GateKind::Or => or(),
        GateKind::Nor => 1.0 - or(),
        GateKind::Xor => xor(),
        GateKind::Xnor => 1.0 - xor(),
        GateKind::Not => 1.0 - p[0],
        GateKind::Buff | GateKind::Dff => p[0],
        GateKind::Mux2 => (1.0 - p[0]) * p[1] + p[0] * p[2],
        GateKind::Const0 => 0.0,
        GateKind::Const1 => 1.0,
    }
}

const DFF_ITERATIONS: usize = 64;
const DFF_TOLERANCE: f64 = 1e-12;

/// Single topological pass of [`gate_output_prob`]. DFF outputs start at 0.5
/// and are iterated to a fixed point.
pub fn propagate(n: &Netlist, pi_probs: &[f64]) -> Result<SignalProbabilityMap, ProbError> {
    if pi_probs.len() != n.inputs().len() {
        return Err(ProbError::InputCount {
            expected: n.inputs().len(),
            got: pi_probs.len(),
        });
    }
    if let Some(&bad) = pi_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ProbError::OutOfRange(bad));
    }
    let n_in = n.inputs().len();
    let index = n.net_index();
    let mut p = vec![0.5; n.net_count()];
    p[..n_in].copy_from_slice(pi_probs);
    let fanin: Vec<Vec<usize>> = n
        .gates()
        .iter()
        .map(|g| g.inputs.iter().map(|i| index[i.as_str()]).collect())
        .collect();
    let mut buf = Vec::with_capacity(8);
    for _ in 0..DFF_ITERATIONS {
        let mut shift = 0.0f64;
        for (gi, g) in n.gates().iter().enumerate() {
            if g.kind == GateKind::Dff {
                continue;
            }
            buf.clear();
            buf.extend(fanin[gi].iter().map(|&i| p[i]));
            p[n_in + gi] = gate_prob_unchecked(g.kind, &buf);
        }
        for (gi, g) in n.gates().iter().enumerate() {
            if g.kind == GateKind::Dff {
                let next = p[fanin[gi][0]];
                shift = shift.max((next - p[n_in + gi]).abs());
                p[n_in + gi] = next;
            }
        }
        if shift <= DFF_TOLERANCE {
            break;
        }
    }
    Ok(SignalProbabilityMap::new(n, p, None, Method::Propagated))
}

/// [`propagate`] with every primary input at 0.5.
pub fn propagate_uniform(n: &Netlist) -> SignalProbabilityMap {
    propagate(n, &vec![0.5; n.inputs().len()]).expect("uniform inputs are valid")
}

/// Exact probabilities by enumerating all `2^|PI|` patterns.
pub fn exact_probs(n: &Netlist) -> Result<SignalProbabilityMap, ProbError> {
    if n.has_dff() {
        return Err(SimError::Sequential.into());
    }
    let width = n.inputs().len();
    if width > MAX_EXHAUSTIVE_INPUTS {
        return Err(SimError::TooManyInputs {
            inputs: width,
            max: MAX_EXHAUSTIVE_INPUTS,
        }
        .into());
    }
    let prog = Compiled::new(n);
    let count = 1usize << width;
    let words = words_for(count);
    const CHUNK: usize = 1024;
    let ones = (0..words.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut vals = vec![0u64; prog.net_count()];
            let mut ones = vec![0u64; prog.net_count()];
            for w in c * CHUNK..((c + 1) * CHUNK).min(words) {
                for (i, v) in vals[..width].iter_mut().enumerate() {
                    *v = exhaustive_word(i, w);
                }
                prog.eval(&mut vals);
                let mask = tail_mask(count, w);
                for (o, v) in ones.iter_mut().zip(&vals) {
                    *o += (v & mask).count_ones() as u64;
                }
            }
            ones
        })
        .reduce(|| vec![0u64; prog.net_count()], add_counts);
    let p1 = ones.iter().map(|&o| o as f64 / count as f64).collect();
    Ok(SignalProbabilityMap::new(n, p1, None, Method::Exact))
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Words of 64 samples handled by one Monte Carlo work item.
const MC_CHUNK_WORDS: usize = 256;

/// Empirical probabilities over `samples` uniform random patterns.
///
/// Work is split into fixed-size chunks, each with its own generator derived
/// from `seed` and the chunk index, so the result does not depend on the
/// number of worker threads. For sequential netlists each bit lane is an
/// independent session that runs through its chunk from the zero state.
pub fn monte_carlo_probs(n: &Netlist, samples: u64, seed: u64) -> SignalProbabilityMap {
    let prog = Compiled::new(n);
    let width = n.inputs().len();
    let samples_usize = samples as usize;
    let words = words_for(samples_usize);
    let ones = (0..words.div_ceil(MC_CHUNK_WORDS))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut sim = LaneSim::new(&prog);
            let mut inputs = vec![0u64; width];
            let mut ones = vec![0u64; prog.net_count()];
            for w in c * MC_CHUNK_WORDS..((c + 1) * MC_CHUNK_WORDS).min(words) {
                inputs.iter_mut().for_each(|x| *x = rng.random());
                let vals = sim.step(&inputs);
                let mask = tail_mask(samples_usize, w);
                for (o, v) in ones.iter_mut().zip(vals) {
                    *o += (v & mask).count_ones() as u64;
                }
            }
            ones
        })
        .reduce(|| vec![0u64; prog.net_count()], add_counts);
    let s = samples.max(1) as f64;
    let p1: Vec<f64> = ones.iter().map(|&o| o as f64 / s).collect();
    let stderr = p1.iter().map(|p| (p * (1.0 - p) / s).sqrt()).collect();
    SignalProbabilityMap::new(n, p1, Some(stderr), Method::MonteCarlo)
}

/// A net whose value is nearly constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub net: String,
    /// The dominant value the net would be tied to.
    pub value: bool,
    /// Probability of the dominant value.
    pub extremity: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    /// Nets with `p0 >= P_th`.
    pub x: Vec<String>,
    /// Nets with `p1 >= P_th`.
    pub y: Vec<String>,
    /// `x` and `y` merged, most extreme first, ties by name.
    pub c: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// Gate-output nets whose dominant value has probability at least `p_th`.
/// Constant cells are skipped since tying them off frees nothing.
pub fn find_candidates(m: &SignalProbabilityMap, n: &Netlist, p_th: f64) -> Result<CandidateSet, ProbError> {
    if !(p_th > 0.5 && p_th < 1.0) {
        return Err(ProbError::Threshold(p_th));
    }
    let mut set = CandidateSet::default();
    for (net, p1) in m.iter() {
        let Some(Driver::Gate(gi)) = n.driver(net) else {
            continue;
        };
        if n.gates()[gi].kind.is_const() {
            continue;
        }
        let p0 = 1.0 - p1;
        if p0 >= p_th {
            set.x.push(net.to_string());
            set.c.push(Candidate {
                net: net.to_string(),
                value: false,
                extremity: p0,
            });
        } else if p1 >= p_th {
            set.y.push(net.to_string());
            set.c.push(Candidate {
                net: net.to_string(),
                value: true,
                extremity: p1,
            });
        }
    }
    set.c
        .sort_by(|a, b| b.extremity.total_cmp(&a.extremity).then_with(|| a.net.cmp(&b.net)));
    Ok(set)
}
