// SPDX-License-Identifier: Apache-2.0

//! Single stuck-at faults, bit-parallel fault simulation and
//! fault-simulation-guided random test generation.

use std::fmt::{self, Write as _};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::Margins;
use crate::logicsim::{tail_mask, Compiled, PatternBlock, SimError};
use crate::netlist::{GateKind, Netlist};

/// Raw random draws tried before giving up on the coverage target.
pub const DEFAULT_BUDGET: usize = 50_000;
pub const DEFAULT_TARGET: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtpgError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("coverage target {0} must lie in [0, 1]")]
    Target(f64),
    #[error("a defender profile needs at least one suite")]
    NoSuites,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultSite {
    /// The net as driven (the stem).
    Stem,
    /// One fan-out branch: input `pin` of the gate driving `reader`.
    Branch { reader: String, pin: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fault {
    pub net: String,
    pub stuck: bool,
    pub site: FaultSite,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.site {
            FaultSite::Stem => write!(f, "{}/{}", self.net, self.stuck as u8),
            FaultSite::Branch { reader, pin } => {
                write!(f, "{}->{}.{}/{}", self.net, reader, pin, self.stuck as u8)
            }
        }
    }
}

impl Fault {
    pub fn stem(net: impl Into<String>, stuck: bool) -> Self {
        Fault {
            net: net.into(),
            stuck,
            site: FaultSite::Stem,
        }
    }

    fn site_label(&self) -> String {
        match &self.site {
            FaultSite::Stem => "stem".into(),
            FaultSite::Branch { reader, pin } => format!("{reader}.{pin}"),
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Joins the classes, keeping the larger index as root.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[lo] = hi;
    }
}

/// Collapsed single stuck-at fault list.
///
/// Both polarities sit on every primary input and gate output; branch faults
/// are added for nets read more than once. For AND/NAND/OR/NOR gates, an
/// input fault at the controlling value is merged into the equivalent output
/// fault. Each class is represented by its most downstream member.
pub fn enumerate_faults(n: &Netlist) -> Vec<Fault> {
    let readers = n.readers();
    let mut faults: Vec<Fault> = Vec::new();
    // (reader gate, pin) -> index of the stuck-at-0 fault at that input site
    let mut pin_site = std::collections::HashMap::new();
    let mut stem_idx = std::collections::HashMap::new();
    for net in n.nets() {
        stem_idx.insert(net, faults.len());
        faults.push(Fault::stem(net, false));
        faults.push(Fault::stem(net, true));
        let rs = readers.get(net).map(Vec::as_slice).unwrap_or(&[]);
        if rs.len() == 1 {
            pin_site.insert(rs[0], stem_idx[net]);
        } else {
            for &(gi, pin) in rs {
                pin_site.insert((gi, pin), faults.len());
                for stuck in [false, true] {
                    faults.push(Fault {
                        net: net.to_string(),
                        stuck,
                        site: FaultSite::Branch {
                            reader: n.gates()[gi].output.clone(),
                            pin,
                        },
                    });
                }
            }
        }
    }
    let mut uf = UnionFind((0..faults.len()).collect());
    for (gi, g) in n.gates().iter().enumerate() {
        let (control, inverting) = match g.kind {
            GateKind::And => (false, false),
            GateKind::Nand => (false, true),
            GateKind::Or => (true, false),
            GateKind::Nor => (true, true),
            _ => continue,
        };
        if g.inputs.len() < 2 {
            continue;
        }
        let out = stem_idx[g.output.as_str()] + (control ^ inverting) as usize;
        for pin in 0..g.inputs.len() {
            uf.union(pin_site[&(gi, pin)] + control as usize, out);
        }
    }
    (0..faults.len())
        .filter(|&i| uf.find(i) == i)
        .map(|i| faults[i].clone())
        .collect()
}

/// Compiled fault: which value to force and where.
#[derive(Clone, Debug)]
struct Injection {
    /// Net forced for a stem fault, or the reader op for a branch fault.
    stem: Option<usize>,
    branch: Option<(usize, usize)>,
    stuck: u64,
    /// Ops to re-evaluate, in topological order.
    cone: Vec<usize>,
}

struct FaultSim<'a> {
    prog: Compiled,
    index: std::collections::HashMap<&'a str, usize>,
    /// Op index producing each net (`usize::MAX` for inputs).
    op_of: Vec<usize>,
    /// Ops reading each net.
    op_readers: Vec<Vec<usize>>,
}

impl<'a> FaultSim<'a> {
    fn new(n: &'a Netlist) -> Self {
        let prog = Compiled::new(n);
        let mut op_of = vec![usize::MAX; prog.n_nets];
        let mut op_readers = vec![Vec::new(); prog.n_nets];
        for (k, op) in prog.ops.iter().enumerate() {
            op_of[op.out as usize] = k;
            for &i in &prog.fanin[op.start as usize..(op.start + op.len) as usize] {
                if op_readers[i as usize].last() != Some(&k) {
                    op_readers[i as usize].push(k);
                }
            }
        }
        FaultSim {
            prog,
            index: n.net_index(),
            op_of,
            op_readers,
        }
    }

    fn cone_from(&self, seeds: &[usize]) -> Vec<usize> {
        let mut mark = vec![false; self.prog.ops.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        for &s in seeds {
            mark[s] = true;
        }
        while let Some(k) = stack.pop() {
            let out = self.prog.ops[k].out as usize;
            for &r in &self.op_readers[out] {
                if !mark[r] {
                    mark[r] = true;
                    stack.push(r);
                }
            }
        }
        (0..mark.len()).filter(|&k| mark[k]).collect()
    }

    fn compile(&self, f: &Fault) -> Injection {
        let index = |net: &str| self.index[net];
        let stuck = if f.stuck { !0 } else { 0 };
        match &f.site {
            FaultSite::Stem => {
                let net = index(&f.net);
                let seeds = self.op_readers[net].clone();
                Injection {
                    stem: Some(net),
                    branch: None,
                    stuck,
                    cone: self.cone_from(&seeds),
                }
            }
            FaultSite::Branch { reader, pin } => {
                let op = self.op_of[index(reader)];
                Injection {
                    stem: None,
                    branch: Some((op, *pin)),
                    stuck,
                    cone: self.cone_from(&[op]),
                }
            }
        }
    }

    /// Good-circuit values, `[word][net]`.
    fn good(&self, p: &PatternBlock) -> Vec<Vec<u64>> {
        (0..p.words())
            .map(|w| {
                let mut vals = vec![0u64; self.prog.n_nets];
                for (i, v) in vals[..self.prog.n_inputs].iter_mut().enumerate() {
                    *v = p.word(i, w);
                }
                self.prog.eval(&mut vals);
                vals
            })
            .collect()
    }

    /// Per-word detection masks of one fault.
    fn detect(&self, inj: &Injection, good: &[Vec<u64>], count: usize, scratch: &mut Vec<u64>) -> Vec<u64> {
        let prog = &self.prog;
        good.iter()
            .enumerate()
            .map(|(w, g)| {
                scratch.clear();
                scratch.extend_from_slice(g);
                if let Some(net) = inj.stem {
                    scratch[net] = inj.stuck;
                }
                for &k in &inj.cone {
                    let op = &prog.ops[k];
                    let v = match inj.branch {
                        Some((bop, pin)) if bop == k => {
                            // Only this pin sees the fault, even if the gate reads the net twice.
                            let range = op.start as usize..(op.start + op.len) as usize;
                            let mut ins: Vec<u64> = prog.fanin[range].iter().map(|&i| scratch[i as usize]).collect();
                            ins[pin] = inj.stuck;
                            op.kind.eval_word(&ins)
                        }
                        _ => prog.eval_op(op, scratch),
                    };
                    scratch[op.out as usize] = v;
                }
                let diff = prog
                    .outputs
                    .iter()
                    .fold(0u64, |acc, &o| acc | (scratch[o as usize] ^ g[o as usize]));
                diff & tail_mask(count, w)
            })
            .collect()
    }
}

/// Which patterns detect which faults.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultSimResult {
    pub faults: Vec<Fault>,
    /// `detections[f]`: packed pattern mask, 64 patterns per word.
    pub detections: Vec<Vec<u64>>,
    pub patterns: usize,
}

impl FaultSimResult {
    pub fn detected(&self, fault: usize, pattern: usize) -> bool {
        self.detections[fault][pattern / 64] >> (pattern % 64) & 1 == 1
    }

    /// First detecting pattern of each fault.
    pub fn first_detection(&self, fault: usize) -> Option<usize> {
        self.detections[fault]
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn detected_count(&self) -> usize {
        (0..self.faults.len())
            .filter(|&f| self.first_detection(f).is_some())
            .count()
    }

    /// Detected fraction of all listed faults (1.0 for an empty list).
    pub fn coverage(&self) -> f64 {
        if self.faults.is_empty() {
            1.0
        } else {
            self.detected_count() as f64 / self.faults.len() as f64
        }
    }

    pub fn undetected(&self) -> Vec<&Fault> {
        (0..self.faults.len())
            .filter(|&f| self.first_detection(f).is_none())
            .map(|f| &self.faults[f])
            .collect()
    }

    /// CSV `net,site,stuck_value,detected_by` (first detecting pattern).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("net,site,stuck_value,detected_by\n");
        for (i, f) in self.faults.iter().enumerate() {
            let by = self.first_detection(i).map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{by}", f.net, f.site_label(), f.stuck as u8);
        }
        out
    }
}

fn require_comb(n: &Netlist) -> Result<(), AtpgError> {
    if n.has_dff() {
        return Err(SimError::Sequential.into());
    }
    Ok(())
}

/// Detection matrix of `faults` over `p`.
pub fn fault_simulate(n: &Netlist, p: &PatternBlock, faults: &[Fault]) -> Result<FaultSimResult, AtpgError> {
    require_comb(n)?;
    if p.width() != n.inputs().len() {
        return Err(SimError::WidthMismatch {
            expected: n.inputs().len(),
            got: p.width(),
        }
        .into());
    }
    let sim = FaultSim::new(n);
    let good = sim.good(p);
    let detections = faults
        .par_iter()
        .map_init(Vec::new, |scratch, f| {
            sim.detect(&sim.compile(f), &good, p.count(), scratch)
        })
        .collect();
    Ok(FaultSimResult {
        faults: faults.to_vec(),
        detections,
        patterns: p.count(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    StuckAtRandom,
    BespokeRandom,
}

/// An ordered test suite and how it was made.
#[derive(Clone, Debug, PartialEq)]
pub struct TestPatternSet {
    pub patterns: PatternBlock,
    pub coverage: f64,
    pub seed: u64,
    pub kind: SuiteKind,
    /// Raw random draws examined.
    pub draws: usize,
    /// Generation stopped at the budget before reaching its target.
    pub exhausted: bool,
    /// Faults counted as detectable; coverage is relative to these.
    pub detectable: usize,
    pub undetected: Vec<Fault>,
}

/// JSON sidecar stored next to a suite's pattern file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteMeta {
    pub seed: u64,
    pub coverage: f64,
    pub kind: SuiteKind,
    pub count: usize,
    pub draws: usize,
    pub exhausted: bool,
    #[serde(default)]
    pub detectable: usize,
}

impl TestPatternSet {
    pub fn meta(&self) -> SuiteMeta {
        SuiteMeta {
            seed: self.seed,
            coverage: self.coverage,
            kind: self.kind,
            count: self.patterns.count(),
            draws: self.draws,
            exhausted: self.exhausted,
            detectable: self.detectable,
        }
    }

    pub fn from_parts(patterns: PatternBlock, meta: &SuiteMeta) -> Self {
        TestPatternSet {
            patterns,
            coverage: meta.coverage,
            seed: meta.seed,
            kind: meta.kind,
            draws: meta.draws,
            exhausted: meta.exhausted,
            detectable: meta.detectable,
            undetected: Vec::new(),
        }
    }
}

/// Random draws per generation batch.
const BATCH: usize = 64;

/// Hosts up to this many inputs have their detectable faults found by
/// exhaustive simulation.
const EXACT_DETECTABILITY_INPUTS: usize = 16;

/// Which faults count as detectable: exactly, on small hosts; otherwise
/// those detected by any of the `budget` draws `seed` produces.
fn detectable_faults(
    n: &Netlist,
    sim: &FaultSim,
    faults: &[Fault],
    injections: &[Injection],
    seed: u64,
    budget: usize,
) -> Result<Vec<bool>, AtpgError> {
    let width = n.inputs().len();
    if width <= EXACT_DETECTABILITY_INPUTS {
        let all = fault_simulate(n, &PatternBlock::exhaustive(width)?, faults)?;
        return Ok((0..faults.len()).map(|f| all.first_detection(f).is_some()).collect());
    }
    let mut seen = vec![false; faults.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = 0usize;
    while draws < budget {
        let size = BATCH.min(budget - draws);
        let batch = PatternBlock::random(width, size, &mut rng);
        draws += size;
        let good = sim.good(&batch);
        let open: Vec<usize> = (0..faults.len()).filter(|&f| !seen[f]).collect();
        if open.is_empty() {
            break;
        }
        let hit: Vec<usize> = open
            .par_iter()
            .map_init(Vec::new, |scratch, &f| {
                (f, sim.detect(&injections[f], &good, size, scratch)[0])
            })
            .filter(|&(_, m)| m != 0)
            .map(|(f, _)| f)
            .collect();
        hit.into_iter().for_each(|f| seen[f] = true);
    }
    Ok(seen)
}

/// Seeded random patterns, keeping each one that detects a fault not
/// detected by the patterns kept before it. Stops once `target` of the
/// detectable faults in the collapsed list is covered or `budget` draws
/// have been made.
pub fn generate_tests(n: &Netlist, target: f64, seed: u64, budget: usize) -> Result<TestPatternSet, AtpgError> {
    require_comb(n)?;
    if !(0.0..=1.0).contains(&target) {
        return Err(AtpgError::Target(target));
    }
    let faults = enumerate_faults(n);
    let width = n.inputs().len();
    let mut kept = PatternBlock::empty(width);
    if target == 0.0 {
        return Ok(TestPatternSet {
            patterns: kept,
            coverage: 0.0,
            seed,
            kind: SuiteKind::StuckAtRandom,
            draws: 0,
            exhausted: false,
            detectable: 0,
            undetected: faults,
        });
    }
    let sim = FaultSim::new(n);
    let injections: Vec<Injection> = faults.iter().map(|f| sim.compile(f)).collect();
    let detectable = detectable_faults(n, &sim, &faults, &injections, seed, budget)?
        .into_iter()
        .filter(|&d| d)
        .count();
    let mut detected = vec![false; faults.len()];
    let mut n_detected = 0usize;
    let needed = (target * detectable as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = 0usize;
    while n_detected < needed && draws < budget {
        let size = BATCH.min(budget - draws);
        let batch = PatternBlock::random(width, size, &mut rng);
        draws += size;
        let good = sim.good(&batch);
        let open: Vec<usize> = (0..faults.len()).filter(|&f| !detected[f]).collect();
        let masks: Vec<u64> = open
            .par_iter()
            .map_init(Vec::new, |scratch, &f| {
                sim.detect(&injections[f], &good, size, scratch)[0]
            })
            .collect();
        for t in 0..size {
            let mut fresh = false;
            for (k, &f) in open.iter().enumerate() {
                if !detected[f] && masks[k] >> t & 1 == 1 {
                    detected[f] = true;
                    n_detected += 1;
                    fresh = true;
                }
            }
            if fresh {
                kept.push(&batch.row(t));
            }
            if n_detected >= needed {
                break;
            }
        }
    }
    let undetected = (0..faults.len())
        .filter(|&f| !detected[f])
        .map(|f| faults[f].clone())
        .collect();
    Ok(TestPatternSet {
        patterns: kept,
        coverage: if detectable == 0 {
            1.0
        } else {
            n_detected as f64 / detectable as f64
        },
        seed,
        kind: SuiteKind::StuckAtRandom,
        draws,
        exhausted: n_detected < needed,
        detectable,
        undetected,
    })
}

/// Pure seeded-random suite, standing in for vectors the attacker never sees.
pub fn bespoke_suite(n: &Netlist, count: usize, seed: u64) -> Result<TestPatternSet, AtpgError> {
    let patterns = PatternBlock::seeded(n.inputs().len(), count, seed);
    let coverage = if n.has_dff() {
        f64::NAN
    } else {
        fault_simulate(n, &patterns, &enumerate_faults(n))?.coverage()
    };
    Ok(TestPatternSet {
        patterns,
        coverage,
        seed,
        kind: SuiteKind::BespokeRandom,
        draws: count,
        exhausted: false,
        detectable: 0,
        undetected: Vec::new(),
    })
}

/// The defender's test suites and screening margins.
#[derive(Clone, Debug, PartialEq)]
pub struct DefenderProfile {
    suites: Vec<TestPatternSet>,
    pub margins: Margins,
}

impl DefenderProfile {
    pub fn new(suites: Vec<TestPatternSet>, margins: Margins) -> Result<Self, AtpgError> {
        if suites.is_empty() {
            return Err(AtpgError::NoSuites);
        }
        Ok(DefenderProfile { suites, margins })
    }

    pub fn suites(&self) -> &[TestPatternSet] {
        &self.suites
    }
}
