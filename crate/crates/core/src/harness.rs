//! Scenario files, Monte Carlo orchestration and reports.
//!
//! A scenario is a TOML document with the sections `topology`, `run`,
//! `circuit`, `failures`, `fidelity` and `timing`; unknown keys are errors.
//! See `docs/config.md` for the field tree.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{builtin, Circuit};
use crate::fabric::{EventRecord, FabricState, OperatingMode, Timing};
use crate::failures::{sample_failures, FailureEvent, FailureModel, FailureTarget, TargetPolicy};
use crate::qsim::{self, analytic_fidelity, sample_success, FidelityModel, Outcome, RunError};
use crate::rng::{substream, trial_seed, FAILURE_STREAM, NOISE_STREAM};
use crate::scheduler::{router_capacity, schedule, Schedule, ScheduleError};
use crate::topology::{QubitId, RouterId, Topology};
use crate::Nanos;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Raw file layout
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    topology: RawTopology,
    #[serde(default)]
    run: RawRun,
    circuit: RawCircuit,
    #[serde(default)]
    failures: RawFailures,
    #[serde(default)]
    fidelity: FidelityModel,
    #[serde(default)]
    timing: Timing,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    n_qubits: usize,
    n_routers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRun {
    mode: OperatingMode,
    seed: u64,
    trials: usize,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            mode: OperatingMode::SingleActive,
            seed: 0,
            trials: 1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    #[serde(skip_serializing_if = "Option::is_none")]
    inline: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    builtin: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawPolicy {
    #[default]
    UniformRouter,
    UniformLink,
    Fixed,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFailures {
    #[serde(default)]
    rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<Nanos>,
    #[serde(default)]
    policy: RawPolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    events: Vec<RawEvent>,
}

/// 1-based labels, matching the circuit format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    at: Nanos,
    router: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    qubit: Option<usize>,
}

// ---------------------------------------------------------------------------
// Validated scenario
// ---------------------------------------------------------------------------

/// Failure section of a scenario. `horizon: None` means "the failure-free
/// makespan of the scenario's schedule".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureSpec {
    pub rate: f64,
    pub horizon: Option<Nanos>,
    pub policy: TargetPolicy,
}

impl Default for FailureSpec {
    fn default() -> Self {
        Self {
            rate: 0.0,
            horizon: None,
            policy: TargetPolicy::UniformRouter,
        }
    }
}

impl FailureSpec {
    pub fn model(&self, default_horizon: Nanos) -> FailureModel {
        FailureModel {
            rate: self.rate,
            horizon: self.horizon.unwrap_or(default_horizon),
            policy: self.policy.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub mode: OperatingMode,
    pub circuit: Circuit,
    pub failures: FailureSpec,
    pub fidelity: FidelityModel,
    pub timing: Timing,
    pub seed: u64,
    pub trials: usize,
    /// Non-fatal findings, such as a signaling time that is not well below
    /// the two-qubit gate time.
    pub warnings: Vec<String>,
}

impl Scenario {
    /// Double-star survivable fabric running a Bell pair on (Q1, Q3).
    pub fn demo() -> Self {
        Self {
            topology: Topology::new(4, 2).expect("valid"),
            mode: OperatingMode::SingleActive,
            circuit: builtin::bell(4, 0, 2).expect("valid"),
            failures: FailureSpec::default(),
            fidelity: FidelityModel::default(),
            timing: Timing::default(),
            seed: 0,
            trials: 1,
            warnings: Vec::new(),
        }
    }

    /// Re-checks the scenario after programmatic edits.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let (errors, warnings) = check_scenario(self);
        self.warnings = warnings;
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(errors))
        }
    }

    /// Serializes the scenario as a config document with an inline circuit.
    pub fn to_config_string(&self) -> String {
        let (policy, events) = match &self.failures.policy {
            TargetPolicy::UniformRouter => (RawPolicy::UniformRouter, Vec::new()),
            TargetPolicy::UniformLink => (RawPolicy::UniformLink, Vec::new()),
            TargetPolicy::Fixed(evs) => (
                RawPolicy::Fixed,
                evs.iter()
                    .map(|e| match e.target {
                        FailureTarget::Router(r) => RawEvent {
                            at: e.at,
                            router: r.0 + 1,
                            qubit: None,
                        },
                        FailureTarget::Link(q, r) => RawEvent {
                            at: e.at,
                            router: r.0 + 1,
                            qubit: Some(q.0 + 1),
                        },
                    })
                    .collect(),
            ),
        };
        let raw = RawConfig {
            topology: RawTopology {
                n_qubits: self.topology.n_qubits(),
                n_routers: self.topology.n_routers(),
            },
            run: RawRun {
                mode: self.mode,
                seed: self.seed,
                trials: self.trials,
            },
            circuit: RawCircuit {
                inline: Some(self.circuit.to_text()),
                ..RawCircuit::default()
            },
            failures: RawFailures {
                rate: self.failures.rate,
                horizon: self.failures.horizon,
                policy,
                events,
            },
            fidelity: self.fidelity,
            timing: self.timing,
        };
        toml::to_string(&raw).expect("scenario serializes")
    }
}

fn check_scenario(s: &Scenario) -> (Vec<String>, Vec<String>) {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    if s.trials < 1 {
        errors.push("run.trials must be at least 1".into());
    }
    if s.circuit.n_qubits() != s.topology.n_qubits() {
        errors.push(format!(
            "circuit is sized for {} qubits, topology has {}",
            s.circuit.n_qubits(),
            s.topology.n_qubits()
        ));
    }
    let capacity = router_capacity(&s.topology, s.mode);
    for g in s.circuit.gates() {
        for q in &g.qubits {
            if !s.topology.has_qubit(*q) {
                errors.push(format!(
                    "gate {}: {q} is outside the {}-qubit topology",
                    g.id,
                    s.topology.n_qubits()
                ));
            }
        }
        if g.kind.router_demand() > capacity {
            errors.push(format!(
                "gate {} ({}) needs {} routers, {} mode on {} routers offers {capacity}",
                g.id,
                g.kind,
                g.kind.router_demand(),
                s.mode,
                s.topology.n_routers()
            ));
        }
    }
    let t = &s.timing;
    for (name, v) in [("t_1q", t.t_1q), ("t_2q", t.t_2q), ("t_signal", t.t_signal)] {
        if !v.is_finite() || v < 0.0 {
            errors.push(format!("timing.{name} must be finite and >= 0, got {v}"));
        }
    }
    if t.t_signal >= t.t_2q {
        warnings.push(format!(
            "timing.t_signal ({}) is not below timing.t_2q ({}); failover is meant to be much faster than a gate",
            t.t_signal, t.t_2q
        ));
    }
    if let Err(e) = s.fidelity.validate() {
        errors.push(format!("fidelity: {e}"));
    }
    if let Some(h) = s.failures.horizon {
        if !h.is_finite() || h < 0.0 {
            errors.push(format!("failures.horizon must be finite and >= 0, got {h}"));
        }
    }
    if let Err(e) = s.failures.model(0.0).validate(&s.topology) {
        errors.push(format!("failures: {e}"));
    }
    if matches!(s.failures.policy, TargetPolicy::Fixed(_)) && s.failures.rate > 0.0 {
        warnings.push("failures.rate is ignored with the fixed policy".into());
    }
    (errors, warnings)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses a scenario. Relative circuit file paths resolve against the
/// current directory.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    parse_config_in(text, Path::new("."))
}

/// Parses a scenario, resolving relative circuit file paths against `base`.
pub fn parse_config_in(text: &str, base: &Path) -> Result<Scenario, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let mut errors = Vec::new();
    let topology = match Topology::new(raw.topology.n_qubits, raw.topology.n_routers) {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("topology: {e}"));
            None
        }
    };
    let n_qubits = raw.topology.n_qubits;

    let sources = [
        raw.circuit.inline.is_some(),
        raw.circuit.file.is_some(),
        raw.circuit.builtin.is_some(),
    ];
    let circuit = match sources.iter().filter(|s| **s).count() {
        1 => load_circuit(&raw.circuit, n_qubits, base)
            .map_err(|e| errors.push(e))
            .ok(),
        n => {
            errors.push(format!(
                "circuit: give exactly one of `inline`, `file`, `builtin` (found {n})"
            ));
            None
        }
    };

    let policy = match raw.failures.policy {
        RawPolicy::UniformRouter | RawPolicy::UniformLink if !raw.failures.events.is_empty() => {
            errors.push("failures.events requires policy = \"fixed\"".into());
            TargetPolicy::UniformRouter
        }
        RawPolicy::UniformRouter => TargetPolicy::UniformRouter,
        RawPolicy::UniformLink => TargetPolicy::UniformLink,
        RawPolicy::Fixed => {
            let mut evs = Vec::new();
            for (i, e) in raw.failures.events.iter().enumerate() {
                if e.router == 0 || e.qubit == Some(0) {
                    errors.push(format!("failures.events[{i}]: labels are 1-based"));
                    continue;
                }
                let r = RouterId(e.router - 1);
                let target = match e.qubit {
                    Some(q) => FailureTarget::Link(QubitId(q - 1), r),
                    None => FailureTarget::Router(r),
                };
                evs.push(FailureEvent { at: e.at, target });
            }
            TargetPolicy::Fixed(evs)
        }
    };

    let (Some(topology), Some(circuit)) = (topology, circuit) else {
        return Err(ConfigError::Validation(errors));
    };
    let mut scenario = Scenario {
        topology,
        mode: raw.run.mode,
        circuit,
        failures: FailureSpec {
            rate: raw.failures.rate,
            horizon: raw.failures.horizon,
            policy,
        },
        fidelity: raw.fidelity,
        timing: raw.timing,
        seed: raw.run.seed,
        trials: raw.run.trials,
        warnings: Vec::new(),
    };
    let (more, warnings) = check_scenario(&scenario);
    errors.extend(more);
    scenario.warnings = warnings;
    if errors.is_empty() {
        Ok(scenario)
    } else {
        Err(ConfigError::Validation(errors))
    }
}

fn load_circuit(raw: &RawCircuit, n_qubits: usize, base: &Path) -> Result<Circuit, String> {
    if let Some(text) = &raw.inline {
        return Circuit::parse(text, n_qubits).map_err(|e| format!("circuit.inline: {e}"));
    }
    if let Some(path) = &raw.file {
        let full = base.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| format!("circuit.file {}: {e}", full.display()))?;
        return Circuit::parse(&text, n_qubits).map_err(|e| format!("circuit.file: {e}"));
    }
    let name = raw.builtin.as_deref().unwrap_or_default();
    builtin_circuit(name, n_qubits).map_err(|e| format!("circuit.builtin: {e}"))
}

/// `bell`, `ghz`, `cczs`, or `ladder:N` (N alternating disjoint CZs).
pub fn builtin_circuit(name: &str, n_qubits: usize) -> Result<Circuit, String> {
    let need = |k: usize| {
        if n_qubits < k {
            Err(format!(
                "`{name}` needs at least {k} qubits, topology has {n_qubits}"
            ))
        } else {
            Ok(())
        }
    };
    let widen = |c: Circuit| Circuit::new(n_qubits, c.gates().to_vec()).map_err(|e| e.to_string());
    match name.split_once(':') {
        None if name == "bell" => {
            need(3)?;
            builtin::bell(n_qubits, 0, 2).map_err(|e| e.to_string())
        }
        None if name == "ghz" => builtin::ghz(n_qubits).map_err(|e| e.to_string()),
        None if name == "cczs" => {
            need(4)?;
            widen(builtin::cczs_demo())
        }
        Some(("ladder", n)) => {
            need(4)?;
            let n: usize = n.parse().map_err(|_| format!("bad ladder length `{n}`"))?;
            widen(builtin::disjoint_ladder(n))
        }
        _ => Err(format!("unknown builtin circuit `{name}`")),
    }
}

/// Parses a fixed failure such as `R1@100` (router R1 at 100 ns) or
/// `Q2R1@50` (the Q2-R1 link at 50 ns). Labels are 1-based.
pub fn parse_failure_spec(spec: &str) -> Result<FailureEvent, String> {
    let bad = || format!("bad failure `{spec}`, expected R<k>@<ns> or Q<i>R<k>@<ns>");
    let (target, at) = spec.trim().split_once('@').ok_or_else(bad)?;
    let at: Nanos = at.trim().parse().map_err(|_| bad())?;
    let target = target.trim().to_ascii_uppercase();
    let label = |s: &str| match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k - 1),
        _ => Err(bad()),
    };
    let target = match target.strip_prefix('Q') {
        Some(rest) => {
            let (q, r) = rest.split_once('R').ok_or_else(bad)?;
            FailureTarget::Link(
                QubitId(label(q.trim_end_matches('-'))?),
                RouterId(label(r)?),
            )
        }
        None => FailureTarget::Router(RouterId(label(target.strip_prefix('R').ok_or_else(bad)?)?)),
    };
    Ok(FailureEvent { at, target })
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub trials: usize,
    pub completion_rate: f64,
    /// Trials that ended with no working router for a pending gate.
    pub incomplete_trials: usize,
    pub mean_makespan: Nanos,
    pub mean_failovers: f64,
    pub mean_aborted_attempts: f64,
    pub depth: usize,
    /// Single-star depth over this fabric's depth; absent when the circuit
    /// cannot run on a single star.
    pub depth_ratio: Option<f64>,
    pub analytic_fidelity: f64,
    pub empirical_success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub index: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub makespan: Nanos,
    pub failovers: usize,
    pub aborted_attempts: usize,
    pub analytic_fidelity: f64,
    pub success: bool,
    pub failures: Vec<FailureEvent>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: Scenario,
    pub schedule: Schedule,
    pub metrics: Metrics,
    pub first_trial: TrialSummary,
    /// Event trace of the first trial.
    pub trace: Vec<EventRecord>,
    /// Final state of the first trial.
    pub first_state: qsim::StateVector,
}

struct TrialRun {
    summary: TrialSummary,
    trace: Vec<EventRecord>,
    state: qsim::StateVector,
}

fn run_trial(
    s: &Scenario,
    plan: &Schedule,
    model: &FailureModel,
    index: usize,
) -> Result<TrialRun, RunError> {
    let seed = trial_seed(s.seed, index as u64);
    let failures = sample_failures(model, &s.topology, &mut substream(seed, FAILURE_STREAM));
    let fabric = FabricState::new(s.topology.clone(), s.mode).with_timing(s.timing);
    let r = qsim::run(plan, fabric, &failures, &s.fidelity)?;
    let success = r.outcome.is_complete()
        && sample_success(r.analytic_fidelity, &mut substream(seed, NOISE_STREAM));
    Ok(TrialRun {
        summary: TrialSummary {
            index,
            seed,
            outcome: r.outcome,
            makespan: r.makespan,
            failovers: r.failovers,
            aborted_attempts: r.aborted_attempts,
            analytic_fidelity: r.analytic_fidelity,
            success,
            failures,
        },
        trace: r.events,
        state: r.state,
    })
}

/// Schedules the circuit, runs every trial and aggregates metrics. Trial
/// `i` draws from seed `trial_seed(seed, i)`, so results do not depend on
/// execution order or parallelism.
pub fn run_scenario(s: &Scenario) -> Result<Report, HarnessError> {
    let plan = schedule(&s.circuit, &s.topology, s.mode, &s.timing)?;
    let star = Topology::new(s.topology.n_qubits(), 1).expect("n_qubits already validated");
    let depth_ratio = match schedule(&s.circuit, &star, OperatingMode::AllActive, &s.timing) {
        Ok(st) if st.depth == 0 && plan.depth == 0 => Some(1.0),
        Ok(st) => Some(st.depth as f64 / plan.depth as f64),
        Err(_) => None,
    };
    let model = s.failures.model(plan.makespan);

    let mut runs: Vec<TrialRun> = (0..s.trials.max(1))
        .into_par_iter()
        .map(|i| {
            let mut t = run_trial(s, &plan, &model, i)?;
            if i > 0 {
                t.trace = Vec::new();
            }
            Ok(t)
        })
        .collect::<Result<_, RunError>>()?;

    let n = runs.len() as f64;
    let complete = runs
        .iter()
        .filter(|t| t.summary.outcome.is_complete())
        .count();
    let sum = |f: &dyn Fn(&TrialSummary) -> f64| runs.iter().map(|t| f(&t.summary)).sum::<f64>();
    let metrics = Metrics {
        trials: runs.len(),
        completion_rate: complete as f64 / n,
        incomplete_trials: runs.len() - complete,
        mean_makespan: sum(&|t| t.makespan) / n,
        mean_failovers: sum(&|t| t.failovers as f64) / n,
        mean_aborted_attempts: sum(&|t| t.aborted_attempts as f64) / n,
        depth: plan.depth,
        depth_ratio,
        analytic_fidelity: analytic_fidelity(&plan, &s.fidelity),
        empirical_success_rate: sum(&|t| if t.success { 1.0 } else { 0.0 }) / n,
    };
    let first = runs.swap_remove(0);
    Ok(Report {
        scenario: s.clone(),
        schedule: plan,
        metrics,
        first_trial: first.summary,
        trace: first.trace,
        first_state: first.state,
    })
}

pub fn monte_carlo(s: &Scenario) -> Result<Metrics, HarnessError> {
    Ok(run_scenario(s)?.metrics)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Records,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub n_qubits: usize,
    pub n_routers: usize,
    pub mode: OperatingMode,
    pub gates: usize,
    pub seed: u64,
    pub trials: usize,
    pub warnings: Vec<String>,
}

/// One line of `records` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Scenario(ScenarioRecord),
    Metrics(Metrics),
    Trial(TrialSummary),
    Event(EventRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Line {
    schema_version: u32,
    #[serde(flatten)]
    record: Record,
}

impl Report {
    pub fn records(&self) -> Vec<Record> {
        let s = &self.scenario;
        let mut out = vec![
            Record::Scenario(ScenarioRecord {
                n_qubits: s.topology.n_qubits(),
                n_routers: s.topology.n_routers(),
                mode: s.mode,
                gates: s.circuit.len(),
                seed: s.seed,
                trials: s.trials,
                warnings: s.warnings.clone(),
            }),
            Record::Metrics(self.metrics.clone()),
            Record::Trial(self.first_trial.clone()),
        ];
        out.extend(self.trace.iter().cloned().map(Record::Event));
        out
    }
}

pub fn render_records(records: &[Record]) -> String {
    let mut out = String::new();
    for record in records {
        let line = Line {
            schema_version: SCHEMA_VERSION,
            record: record.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Parses `records` output back; lines with another schema version are
/// rejected.
pub fn parse_records(text: &str) -> Result<Vec<Record>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let line: Line =
                serde_json::from_str(l).map_err(|e| format!("record {}: {e}", i + 1))?;
            if line.schema_version != SCHEMA_VERSION {
                return Err(format!(
                    "record {}: schema_version {} is not {SCHEMA_VERSION}",
                    i + 1,
                    line.schema_version
                ));
            }
            Ok(line.record)
        })
        .collect()
}

pub fn emit_report(r: &Report, format: Format) -> String {
    match format {
        Format::Records => render_records(&r.records()),
        Format::Table => render_table(r),
    }
}

fn render_table(r: &Report) -> String {
    let s = &r.scenario;
    let m = &r.metrics;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario: {} qubits, {} routers, {}, {} gates, seed {}, {} trials",
        s.topology.n_qubits(),
        s.topology.n_routers(),
        s.mode,
        s.circuit.len(),
        s.seed,
        s.trials
    );
    for w in &s.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let ratio = m
        .depth_ratio
        .map(|v| format!("{v:.6}"))
        .unwrap_or_else(|| "n/a".into());
    let rows: [(&str, String); 10] = [
        ("trials", m.trials.to_string()),
        ("depth", m.depth.to_string()),
        ("depth_ratio", ratio),
        ("completion_rate", format!("{:.6}", m.completion_rate)),
        (
            "incomplete (NoBackupAvailable)",
            m.incomplete_trials.to_string(),
        ),
        ("mean_makespan_ns", format!("{:.3}", m.mean_makespan)),
        ("mean_failovers", format!("{:.6}", m.mean_failovers)),
        (
            "mean_aborted_attempts",
            format!("{:.6}", m.mean_aborted_attempts),
        ),
        ("analytic_fidelity", format!("{:.10}", m.analytic_fidelity)),
        (
            "empirical_success_rate",
            format!("{:.6}", m.empirical_success_rate),
        ),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let _ = writeln!(out, "{:<width$}  value", "metric");
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}
