// SPDX-License-Identifier: Apache-2.0

//! The `tzlab` command line. Each subcommand is one pipeline stage; the
//! output directory holds every artifact and later stages read the earlier
//! ones from it.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 an input beyond
//! an enumeration bound, 3 attack exhaustion, 4 detection flagged.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::atpg::{
    enumerate_faults, fault_simulate, generate_tests, AtpgError, DefenderProfile, Fault, SuiteMeta, TestPatternSet,
    DEFAULT_BUDGET, DEFAULT_TARGET,
};
use crate::attack::{inject, salvage, AttackConfig, AttackError, InjectOptions, LocationRules};
use crate::benchmarks;
use crate::costmodel::{cost_report, CellLibrary, CostError, Workload};
use crate::detector::{evaluate_attack, DetectError, DetectorConfig, Margins, DEFAULT_BESPOKE_COUNT};
use crate::logicsim::{PatternBlock, SimError};
use crate::netlist::{parse_bench, write_bench, Netlist, NetlistError};
use crate::probability::{exact_probs, find_candidates, monte_carlo_probs, propagate_uniform, ProbError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;
pub const EXIT_FLAGGED: i32 = 4;

/// Stable artifact names under the output directory.
pub mod files {
    pub const CONFIG: &str = "config.json";
    pub const ANALYZE: &str = "analyze.json";
    pub const PROBABILITIES: &str = "probabilities.csv";
    pub const PROBABILITIES_MC: &str = "probabilities_mc.csv";
    pub const ATPG: &str = "atpg.json";
    pub const SUITE: &str = "suite.pat";
    pub const FAULTS: &str = "faults.csv";
    pub const SALVAGE: &str = "salvage.json";
    pub const SALVAGED: &str = "salvaged.bench";
    pub const INJECT: &str = "inject.json";
    pub const INFECTED: &str = "infected.bench";
    pub const SEQUENCE: &str = "attack_sequence.pat";
    pub const CONTROL: &str = "control.json";
    pub const CONTROL_NETLIST: &str = "control.bench";
    pub const CONTROL_SEQUENCE: &str = "control_sequence.pat";
    pub const REPORT: &str = "report.md";
}

/// Everything a run depends on. Written next to the artifacts and embedded
/// in each stage's JSON so any output can be reproduced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Path to a `.bench` file or a built-in benchmark name.
    pub netlist: Option<String>,
    /// Cell library JSON; the built-in library when absent.
    pub library: Option<PathBuf>,
    pub out: PathBuf,
    pub workload_size: usize,
    pub atpg_target: f64,
    pub atpg_budget: usize,
    pub margins: Margins,
    pub bespoke_count: usize,
    /// Samples for Monte Carlo signal probabilities.
    pub probability_samples: u64,
    /// Monte Carlo sessions for the trigger estimate; 0 keeps it analytic.
    pub trigger_trials: u64,
    pub jobs: Option<usize>,
    #[serde(flatten)]
    pub attack: AttackConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            netlist: None,
            library: None,
            out: PathBuf::from("tzlab-out"),
            workload_size: 2000,
            atpg_target: DEFAULT_TARGET,
            atpg_budget: DEFAULT_BUDGET,
            margins: Margins::default(),
            bespoke_count: DEFAULT_BESPOKE_COUNT,
            probability_samples: 1 << 22,
            trigger_trials: 0,
            jobs: None,
            attack: AttackConfig::default(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tzlab", version, about = "Zero-footprint hardware trojan workbench")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Cell library JSON.
    #[arg(long, global = true)]
    pub lib: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed_atpg: Option<u64>,
    #[arg(long, global = true)]
    pub seed_bespoke: Option<u64>,
    #[arg(long, global = true)]
    pub seed_montecarlo: Option<u64>,
    #[arg(long, global = true)]
    pub seed_workload: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Signal probabilities, salvage candidates and cost of a netlist.
    Analyze {
        netlist: Option<String>,
        /// Exact probabilities by enumeration (small hosts only).
        #[arg(long)]
        exact: bool,
        /// Also write Monte Carlo probabilities.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// The defender's stuck-at test suite.
    Atpg {
        netlist: Option<String>,
        #[arg(long)]
        target: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Tie off near-constant logic that the defender's suite cannot see.
    Salvage {
        netlist: Option<String>,
        #[arg(long)]
        p_th: Option<f64>,
    },
    /// Insert a trojan into the salvaged netlist.
    Inject {
        netlist: Option<String>,
        /// Additive control: insert into the original, ignoring the budget.
        #[arg(long)]
        no_salvage: bool,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Screen a netlist against a golden one.
    Detect {
        golden: String,
        /// Defaults to the infected netlist in the output directory.
        dut: Option<String>,
    },
    /// Summarise the artifacts in the output directory.
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn sim_code(e: &SimError) -> i32 {
    match e {
        SimError::TooManyInputs { .. } => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

macro_rules! classify {
    ($($ty:ty => |$e:ident| $code:expr),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from($e: $ty) -> Self {
                let code = $code;
                CliError { code, message: $e.to_string() }
            }
        })*
    };
}

classify! {
    SimError => |e| sim_code(&e),
    ProbError => |e| match &e { ProbError::Sim(s) => sim_code(s), _ => EXIT_USAGE },
    AtpgError => |e| match &e { AtpgError::Sim(s) => sim_code(s), _ => EXIT_USAGE },
    CostError => |e| match &e { CostError::Sim(s) => sim_code(s), _ => EXIT_USAGE },
    DetectError => |e| match &e { DetectError::Sim(s) => sim_code(s), _ => EXIT_USAGE },
    NetlistError => |_e| EXIT_USAGE,
    std::io::Error => |_e| EXIT_USAGE,
    serde_json::Error => |_e| EXIT_USAGE,
    AttackError => |e| match &e {
        AttackError::Exhausted(_) | AttackError::NoLocations => EXIT_EXHAUSTED,
        AttackError::Sim(s) => sim_code(s),
        AttackError::Prob(ProbError::Sim(s)) => sim_code(s),
        _ => EXIT_USAGE,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tzlab: {e}");
            e.code
        }
    }
}

/// Runs a parsed command; `Ok` carries a non-error exit code (0, or 4 for a
/// flagged detection).
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let config = resolve_config(cli)?;
    match config.jobs {
        Some(0) => Err(CliError::usage("--jobs must be at least 1")),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::usage(e.to_string()))?;
            pool.install(|| dispatch(&cli.command, config))
        }
        None => dispatch(&cli.command, config),
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let g = &cli.global;
    let mut c = match &g.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(l) = &g.lib {
        c.library = Some(l.clone());
    }
    if let Some(o) = &g.out {
        c.out = o.clone();
    }
    if let Some(j) = g.jobs {
        c.jobs = Some(j);
    }
    let seeds = &mut c.attack.seeds;
    seeds.atpg = g.seed_atpg.unwrap_or(seeds.atpg);
    seeds.bespoke = g.seed_bespoke.unwrap_or(seeds.bespoke);
    seeds.montecarlo = g.seed_montecarlo.unwrap_or(seeds.montecarlo);
    seeds.workload = g.seed_workload.unwrap_or(seeds.workload);
    match &cli.command {
        Command::Analyze { netlist, .. } | Command::Salvage { netlist, .. } | Command::Inject { netlist, .. } => {
            if netlist.is_some() {
                c.netlist = netlist.clone();
            }
        }
        Command::Atpg {
            netlist,
            target,
            budget,
        } => {
            if netlist.is_some() {
                c.netlist = netlist.clone();
            }
            c.atpg_target = target.unwrap_or(c.atpg_target);
            c.atpg_budget = budget.unwrap_or(c.atpg_budget);
        }
        Command::Detect { golden, .. } => c.netlist = Some(golden.clone()),
        Command::Report => {}
    }
    if let Command::Salvage { p_th: Some(p), .. } = &cli.command {
        c.attack.p_th = *p;
    }
    if let Command::Inject { epsilon: Some(e), .. } = &cli.command {
        c.attack.epsilon = *e;
    }
    if c.workload_size < 2 {
        return Err(CliError::usage("workload_size must be at least 2"));
    }
    Ok(c)
}

fn dispatch(cmd: &Command, config: RunConfig) -> Result<i32, CliError> {
    fs::create_dir_all(&config.out)?;
    if !matches!(cmd, Command::Report) {
        fs::write(config.out.join(files::CONFIG), to_json(&config))?;
    }
    let ctx = Context::new(config)?;
    match cmd {
        Command::Analyze { exact, monte_carlo, .. } => ctx.analyze(*exact, *monte_carlo),
        Command::Atpg { .. } => ctx.atpg(),
        Command::Salvage { .. } => ctx.salvage(),
        Command::Inject { no_salvage, .. } => ctx.inject(*no_salvage),
        Command::Detect { dut, .. } => ctx.detect(dut.as_deref()),
        Command::Report => ctx.report(),
    }
}

/// Shape of every stage's JSON artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub command: String,
    pub status: String,
    pub config: RunConfig,
    pub netlist: NetlistInfo,
    pub result: T,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistInfo {
    pub name: String,
    pub source: String,
    pub inputs: usize,
    pub outputs: usize,
    pub gates: usize,
    pub dffs: usize,
}

impl NetlistInfo {
    fn of(n: &Netlist, source: &str) -> Self {
        NetlistInfo {
            name: n.name().to_string(),
            source: source.to_string(),
            inputs: n.inputs().len(),
            outputs: n.outputs().len(),
            gates: n.gates().len(),
            dffs: n.dff_count(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeResult {
    pub method: String,
    pub cost: crate::costmodel::CostReport,
    pub candidates: crate::probability::CandidateSet,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtpgResult {
    pub suite: SuiteMeta,
    pub faults: usize,
    pub undetected: Vec<Fault>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

/// Reads a `.bench` file, or a built-in benchmark when no such file exists.
pub fn load_netlist(spec: &str) -> Result<Netlist, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("netlist");
        let n = parse_bench(&text).map_err(|e| CliError::usage(format!("{spec}: {e}")))?;
        return Ok(if n.name().is_empty() { n.with_name(stem) } else { n });
    }
    benchmarks::by_name(spec)
        .ok_or_else(|| CliError::usage(format!("`{spec}` is neither a file nor a built-in benchmark")))
}

struct Context {
    config: RunConfig,
    lib: CellLibrary,
}

impl Context {
    fn new(config: RunConfig) -> Result<Self, CliError> {
        let lib = match &config.library {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
                CellLibrary::from_json(&text)?
            }
            None => CellLibrary::default(),
        };
        Ok(Context { config, lib })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.out.join(name)
    }

    fn golden(&self) -> Result<(Netlist, String), CliError> {
        let spec = self
            .config
            .netlist
            .clone()
            .ok_or_else(|| CliError::usage("no netlist given on the command line or in the config"))?;
        Ok((load_netlist(&spec)?, spec))
    }

    fn workload(&self, n: &Netlist) -> Workload {
        Workload::random(
            n.inputs().len(),
            self.config.workload_size,
            self.config.attack.seeds.workload,
        )
    }

    fn write<T: Serialize>(
        &self,
        file: &str,
        command: &str,
        status: &str,
        n: &Netlist,
        source: &str,
        result: &T,
    ) -> Result<(), CliError> {
        let env = Envelope {
            command: command.to_string(),
            status: status.to_string(),
            config: self.config.clone(),
            netlist: NetlistInfo::of(n, source),
            result,
        };
        fs::write(self.path(file), to_json(&env))?;
        Ok(())
    }

    fn read<T: DeserializeOwned>(&self, file: &str, producer: &str) -> Result<Envelope<T>, CliError> {
        let path = self.path(file);
        let text = fs::read_to_string(&path)
            .map_err(|_| CliError::usage(format!("{} is missing; run `tzlab {producer}` first", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    fn read_netlist(&self, file: &str, producer: &str) -> Result<Netlist, CliError> {
        let path = self.path(file);
        let text = fs::read_to_string(&path)
            .map_err(|_| CliError::usage(format!("{} is missing; run `tzlab {producer}` first", path.display())))?;
        parse_bench(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// The stored defender suite, checked against the golden netlist.
    fn stored_suite(&self, n: &Netlist) -> Result<TestPatternSet, CliError> {
        let env: Envelope<AtpgResult> = self.read(files::ATPG, "atpg")?;
        if env.netlist.name != n.name() || env.netlist.inputs != n.inputs().len() {
            return Err(CliError::usage(format!(
                "the stored suite was generated for `{}`, not `{}`",
                env.netlist.name,
                n.name()
            )));
        }
        let text = fs::read_to_string(self.path(files::SUITE))?;
        let patterns = PatternBlock::parse(n.inputs().len(), &text)?;
        Ok(TestPatternSet::from_parts(patterns, &env.result.suite))
    }

    fn defender(&self, suite: TestPatternSet) -> Result<DefenderProfile, CliError> {
        Ok(DefenderProfile::new(vec![suite], self.config.margins)?)
    }

    fn analyze(&self, exact: bool, monte_carlo: bool) -> Result<i32, CliError> {
        let (n, source) = self.golden()?;
        let probs = if exact { exact_probs(&n)? } else { propagate_uniform(&n) };
        let candidates = find_candidates(&probs, &n, self.config.attack.p_th)?;
        let cost = cost_report(&n, &self.lib, &self.workload(&n))?;
        fs::write(self.path(files::PROBABILITIES), probs.to_csv())?;
        if monte_carlo {
            let mc = monte_carlo_probs(&n, self.config.probability_samples, self.config.attack.seeds.montecarlo);
            fs::write(self.path(files::PROBABILITIES_MC), mc.to_csv())?;
        }
        println!(
            "{}: {} gates, |C| = {} at P_th {}, area {:.2} GE, total power {:.3}",
            n.name(),
            n.gates().len(),
            candidates.len(),
            self.config.attack.p_th,
            cost.area_ge,
            cost.p_total
        );
        let result = AnalyzeResult {
            method: probs.method().name().to_string(),
            cost,
            candidates,
        };
        self.write(files::ANALYZE, "analyze", "ok", &n, &source, &result)?;
        Ok(EXIT_OK)
    }

    fn atpg(&self) -> Result<i32, CliError> {
        let (n, source) = self.golden()?;
        let c = &self.config;
        let suite = generate_tests(&n, c.atpg_target, c.attack.seeds.atpg, c.atpg_budget)?;
        let faults = enumerate_faults(&n);
        let sim = fault_simulate(&n, &suite.patterns, &faults)?;
        let header = format!(
            "{} defender suite: {} patterns, coverage {}, seed {}",
            n.name(),
            suite.patterns.count(),
            suite.coverage,
            suite.seed
        );
        fs::write(self.path(files::SUITE), suite.patterns.to_text_with_header(&header))?;
        fs::write(self.path(files::FAULTS), sim.to_csv())?;
        println!("{header}");
        let result = AtpgResult {
            suite: suite.meta(),
            faults: faults.len(),
            undetected: suite.undetected.clone(),
        };
        let status = if suite.exhausted { "budget-exhausted" } else { "ok" };
        self.write(files::ATPG, "atpg", status, &n, &source, &result)?;
        Ok(EXIT_OK)
    }

    fn salvage(&self) -> Result<i32, CliError> {
        let (n, source) = self.golden()?;
        let defender = self.defender(self.stored_suite(&n)?)?;
        let (n_prime, report) = salvage(&n, &defender, self.config.attack.p_th, &self.lib, &self.workload(&n))?;
        fs::write(self.path(files::SALVAGED), write_bench(&n_prime))?;
        println!(
            "salvage: |C| = {}, E_g = {}, freed {:.2} GE and {:.4} total power",
            report.candidates, report.e_g, report.delta.d_area, report.delta.d_total
        );
        self.write(files::SALVAGE, "salvage", "ok", &n, &source, &report)?;
        Ok(EXIT_OK)
    }

    fn inject(&self, no_salvage: bool) -> Result<i32, CliError> {
        let (n, source) = self.golden()?;
        let defender = self.defender(self.stored_suite(&n)?)?;
        let (n_prime, json, bench, sequence) = if no_salvage {
            (
                n.clone(),
                files::CONTROL,
                files::CONTROL_NETLIST,
                files::CONTROL_SEQUENCE,
            )
        } else {
            let n_prime = self.read_netlist(files::SALVAGED, "salvage")?;
            (n_prime, files::INJECT, files::INFECTED, files::SEQUENCE)
        };
        let c = &self.config;
        let opts = InjectOptions {
            epsilon: c.attack.epsilon,
            enforce_budget: !no_salvage,
            rules: LocationRules {
                p_e_safety_factor: c.attack.p_e_safety_factor,
                ..LocationRules::default()
            },
            probability_samples: c.probability_samples,
            seed: c.attack.seeds.montecarlo,
            trigger_trials: c.trigger_trials,
            ..InjectOptions::default()
        };
        match inject(
            &n,
            &n_prime,
            &c.attack.templates,
            &defender,
            &self.lib,
            &self.workload(&n),
            &opts,
        ) {
            Ok((infected, ht, report)) => {
                fs::write(self.path(bench), write_bench(&infected))?;
                let mut seq = String::from("# attacker sequence, applied from reset\n");
                for row in &report.attacker_sequence {
                    seq.push_str(row);
                    seq.push('\n');
                }
                fs::write(self.path(sequence), seq)?;
                println!(
                    "inject: {} on taps {:?} with payload at {}",
                    ht.template.label(),
                    ht.taps,
                    ht.target
                );
                self.write(json, "inject", "ok", &n, &source, &report)?;
                Ok(EXIT_OK)
            }
            Err(AttackError::Exhausted(report)) => {
                self.write(json, "inject", "exhausted", &n, &source, &*report)?;
                Err(AttackError::Exhausted(report).into())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn detect(&self, dut: Option<&str>) -> Result<i32, CliError> {
        let (golden, source) = self.golden()?;
        let (dut, dut_name) = match dut {
            Some(spec) => {
                let stem = Path::new(spec).file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
                (load_netlist(spec)?, stem.to_string())
            }
            None => (self.read_netlist(files::INFECTED, "inject")?, "infected".to_string()),
        };
        // Without a stored suite the defender's own is generated from the config.
        let suite = if self.path(files::ATPG).is_file() {
            self.stored_suite(&golden)?
        } else {
            let c = &self.config;
            generate_tests(&golden, c.atpg_target, c.attack.seeds.atpg, c.atpg_budget)?
        };
        let defender = self.defender(suite)?;
        let config = DetectorConfig {
            bespoke_count: self.config.bespoke_count,
            bespoke_seed: self.config.attack.seeds.bespoke,
            ..DetectorConfig::default()
        };
        let verdict = evaluate_attack(&golden, &dut, &defender, &self.lib, &self.workload(&golden), &config)?;
        let status = if verdict.is_clean() { "clean" } else { "flagged" };
        println!("detect {dut_name}: {} {:?}", status.to_uppercase(), verdict.reasons);
        self.write(&detect_file(&dut_name), "detect", status, &golden, &source, &verdict)?;
        Ok(if verdict.is_clean() { EXIT_OK } else { EXIT_FLAGGED })
    }

    fn report(&self) -> Result<i32, CliError> {
        let mut names: Vec<String> = fs::read_dir(&self.config.out)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|f| f.ends_with(".json") && f != files::CONFIG)
            .collect();
        names.sort_by_key(|f| (stage_rank(f), f.clone()));
        if names.is_empty() {
            return Err(CliError::usage(format!(
                "no stage artifacts in {}",
                self.config.out.display()
            )));
        }
        let mut md = String::from("# tzlab report\n");
        for name in &names {
            let text = fs::read_to_string(self.path(name))?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            summarise(&mut md, name, &v);
        }
        fs::write(self.path(files::REPORT), &md)?;
        print!("{md}");
        Ok(EXIT_OK)
    }
}

/// Verdict file for a DUT.
pub fn detect_file(dut_name: &str) -> String {
    format!("detect-{dut_name}.json")
}

fn stage_rank(file: &str) -> usize {
    [
        files::ANALYZE,
        files::ATPG,
        files::SALVAGE,
        files::INJECT,
        files::CONTROL,
    ]
    .iter()
    .position(|f| *f == file)
    .unwrap_or(5)
}

fn summarise(md: &mut String, file: &str, v: &serde_json::Value) {
    let r = &v["result"];
    let _ = writeln!(
        md,
        "\n## {} ({})\n\nnetlist `{}`, status {}\n",
        v["command"].as_str().unwrap_or("?"),
        file,
        v["netlist"]["name"].as_str().unwrap_or("?"),
        v["status"].as_str().unwrap_or("?")
    );
    let line = |md: &mut String, key: &str, val: &serde_json::Value| {
        if !val.is_null() {
            let _ = writeln!(md, "- {key}: {val}");
        }
    };
    match v["command"].as_str() {
        Some("analyze") => {
            line(
                md,
                "candidates",
                &serde_json::json!(r["candidates"]["c"].as_array().map(Vec::len)),
            );
            line(md, "area (GE)", &r["cost"]["area_ge"]);
            line(md, "total power", &r["cost"]["p_total"]);
        }
        Some("atpg") => {
            line(md, "patterns", &r["suite"]["count"]);
            line(md, "coverage", &r["suite"]["coverage"]);
            line(md, "faults", &r["faults"]);
        }
        Some("salvage") => {
            line(md, "candidates", &r["candidates"]);
            line(md, "expendable gates", &r["e_g"]);
            line(md, "freed area (GE)", &r["delta"]["d_area"]);
            line(md, "freed total power", &r["delta"]["d_total"]);
        }
        Some("inject") => {
            line(md, "chosen", &r["chosen"]);
            line(
                md,
                "rejected pairs",
                &serde_json::json!(r["tried"].as_array().map(Vec::len)),
            );
            line(md, "dummies", &serde_json::json!(r["dummies"].as_array().map(Vec::len)));
            line(md, "residual", &r["delta"]);
            line(md, "P_ft", &r["p_ft"]["analytic"]);
        }
        Some("detect") => {
            line(md, "overall", &r["overall"]);
            line(md, "reasons", &r["reasons"]);
            line(md, "bespoke hits", &r["lucky_catch"]["hits"]);
        }
        _ => {}
    }
}
