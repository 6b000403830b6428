use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use starfabric::circuit::Circuit;
use starfabric::fabric::{render_event_log, OperatingMode};
use starfabric::failures::TargetPolicy;
use starfabric::harness::{
    builtin_circuit, emit_report, parse_config_in, parse_failure_spec, run_scenario, Format,
    HarnessError, Report, Scenario, SCHEMA_VERSION,
};
use starfabric::qsim::RunError;
use starfabric::scheduler::schedule;
use starfabric::topology::{enumerate_double_pairs, PairClass, Topology};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INCOMPLETE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

/// Scheduler and failover simulator for star and multi-star qubit fabrics.
#[derive(Debug, Parser)]
#[command(name = "starfabric", version)]
struct Cli {
    /// Master seed; overrides `run.seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count and list qubit pairs and double-pairs.
    Enumerate {
        #[arg(long, default_value_t = 4)]
        qubits: usize,
    },
    /// Print the layer table for a scenario's circuit.
    Schedule(ScenarioArgs),
    /// Run one trial and print its trace and final state.
    Simulate(ScenarioArgs),
    /// Run all trials and print aggregate metrics.
    Montecarlo(ScenarioArgs),
    /// Walk through a mid-gate router failure on a double star.
    FailoverDemo {
        /// Failure time of R1 in ns.
        #[arg(long, default_value_t = 100.0)]
        at: f64,
        /// Run on a single star instead, which cannot recover.
        #[arg(long)]
        single_star: bool,
    },
}

#[derive(Debug, Args, Default)]
struct ScenarioArgs {
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    routers: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<OperatingMode>,
    /// Circuit file (`id kind q[,q,...]` per line).
    #[arg(long, conflicts_with = "builtin")]
    circuit: Option<PathBuf>,
    /// bell, ghz, cczs or ladder:N.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Failure rate per ns for sampled failures.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Fixed failure, e.g. `R1@100` or `Q2R1@50`; repeatable.
    #[arg(long = "fail")]
    fail: Vec<String>,
}

fn parse_mode(s: &str) -> Result<OperatingMode, String> {
    match s {
        "single-active" => Ok(OperatingMode::SingleActive),
        "all-active" => Ok(OperatingMode::AllActive),
        _ => Err(format!(
            "unknown mode `{s}`, expected single-active or all-active"
        )),
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match e {
            HarnessError::Run(RunError::Invariant { .. }) => EXIT_INVARIANT,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match dispatch(&cli) {
        Ok((text, code)) => {
            if let Err(e) = write_out(&cli, &text) {
                eprintln!("error: {}", e.message);
                return ExitCode::from(e.code);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn write_out(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(String, u8), Failure> {
    match &cli.command {
        Command::Enumerate { qubits } => enumerate(*qubits, cli.format).map(|t| (t, EXIT_OK)),
        Command::Schedule(args) => {
            let s = load_scenario(cli, args)?;
            let plan =
                schedule(&s.circuit, &s.topology, s.mode, &s.timing).map_err(Failure::usage)?;
            let text = match cli.format {
                Format::Table => plan.to_table(),
                Format::Records => plan
                    .gates()
                    .map(|g| json_line("scheduled_gate", g) + "\n")
                    .collect(),
            };
            Ok((text, EXIT_OK))
        }
        Command::Simulate(args) => {
            let mut s = load_scenario(cli, args)?;
            s.trials = 1;
            let r = run_scenario(&s)?;
            Ok((simulate_text(&r, cli.format), outcome_code(&r)))
        }
        Command::Montecarlo(args) => {
            let s = load_scenario(cli, args)?;
            let r = run_scenario(&s)?;
            Ok((emit_report(&r, cli.format), outcome_code(&r)))
        }
        Command::FailoverDemo { at, single_star } => failover_demo(cli, *at, *single_star),
    }
}

fn outcome_code(r: &Report) -> u8 {
    if r.metrics.incomplete_trials > 0 {
        EXIT_INCOMPLETE
    } else {
        EXIT_OK
    }
}

fn json_line<T: Serialize>(record: &str, value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("serializable");
    let mut line = serde_json::Map::new();
    line.insert("schema_version".into(), SCHEMA_VERSION.into());
    line.insert("record".into(), record.into());
    if let serde_json::Value::Object(fields) = &mut v {
        line.append(fields);
    }
    serde_json::Value::Object(line).to_string()
}

fn enumerate(n: usize, format: Format) -> Result<String, Failure> {
    if n < 2 {
        return Err(Failure::usage("enumerate needs at least 2 qubits"));
    }
    let census = enumerate_double_pairs(n);
    let mut out = String::new();
    match format {
        Format::Records => {
            #[derive(Serialize)]
            struct Counts {
                n_qubits: usize,
                pairs: usize,
                total: usize,
                disjoint: usize,
                shared: usize,
            }
            let counts = Counts {
                n_qubits: census.n_qubits,
                pairs: census.pairs,
                total: census.total,
                disjoint: census.disjoint,
                shared: census.shared,
            };
            out += &(json_line("census", &counts) + "\n");
            for dp in &census.list {
                out += &(json_line("double_pair", dp) + "\n");
            }
        }
        Format::Table => {
            out += &format!(
                "qubits {}  pairs {}  double-pairs {}  disjoint {}  shared {}\n",
                census.n_qubits, census.pairs, census.total, census.disjoint, census.shared
            );
            for dp in &census.list {
                let class = match dp.class {
                    PairClass::Disjoint => "disjoint".to_string(),
                    PairClass::SharedQubit(q) => format!("shared {q}"),
                };
                out += &format!("{} {} {class}\n", dp.first, dp.second);
            }
        }
    }
    Ok(out)
}

fn load_scenario(cli: &Cli, args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let mut s = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(std::path::Path::new("."));
            parse_config_in(&text, base).map_err(Failure::usage)?
        }
        None => Scenario::demo(),
    };
    if args.qubits.is_some() || args.routers.is_some() {
        let n = args.qubits.unwrap_or(s.topology.n_qubits());
        let r = args.routers.unwrap_or(s.topology.n_routers());
        s.topology = Topology::new(n, r).map_err(Failure::usage)?;
        if n != s.circuit.n_qubits() && args.circuit.is_none() && args.builtin.is_none() {
            s.circuit = Circuit::new(n, s.circuit.gates().to_vec()).map_err(Failure::usage)?;
        }
    }
    let n = s.topology.n_qubits();
    if let Some(path) = &args.circuit {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        s.circuit = Circuit::parse(&text, n).map_err(Failure::usage)?;
    }
    if let Some(name) = &args.builtin {
        s.circuit = builtin_circuit(name, n).map_err(Failure::usage)?;
    }
    if let Some(mode) = args.mode {
        s.mode = mode;
    }
    if let Some(t) = args.trials {
        s.trials = t;
    }
    if let Some(rate) = args.rate {
        s.failures.rate = rate;
    }
    if args.horizon.is_some() {
        s.failures.horizon = args.horizon;
    }
    if !args.fail.is_empty() {
        let mut events = args
            .fail
            .iter()
            .map(String::as_str)
            .map(parse_failure_spec)
            .collect::<Result<Vec<_>, _>>()
            .map_err(Failure::usage)?;
        events.sort_by(|a, b| a.at.total_cmp(&b.at));
        s.failures.policy = TargetPolicy::Fixed(events);
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    s.validate().map_err(Failure::usage)?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    Ok(s)
}

fn simulate_text(r: &Report, format: Format) -> String {
    match format {
        Format::Records => emit_report(r, Format::Records),
        Format::Table => {
            let t = &r.first_trial;
            let outcome = match t.outcome {
                starfabric::qsim::Outcome::Complete => "complete".to_string(),
                starfabric::qsim::Outcome::Incomplete { reason, gate } => {
                    format!("incomplete ({reason:?} at gate {gate})")
                }
            };
            format!(
                "outcome: {outcome}\nmakespan_ns: {}\nfailovers: {}\naborted_attempts: {}\nfidelity: {:.10}\n\nevents:\n{}\nstate:\n{}",
                t.makespan,
                t.failovers,
                t.aborted_attempts,
                t.analytic_fidelity,
                render_event_log(&r.trace),
                r.first_state.dump()
            )
        }
    }
}

fn failover_demo(cli: &Cli, at: f64, single_star: bool) -> Result<(String, u8), Failure> {
    let args = ScenarioArgs {
        routers: Some(if single_star { 1 } else { 2 }),
        qubits: Some(4),
        builtin: Some("bell".into()),
        mode: Some(OperatingMode::SingleActive),
        ..ScenarioArgs::default()
    };
    let demo_cli = Cli {
        seed: cli.seed,
        config: None,
        out: None,
        format: cli.format,
        command: Command::Enumerate { qubits: 4 },
    };
    let clean = run_scenario(&load_scenario(&demo_cli, &args)?)?;
    let failing = run_scenario(&load_scenario(
        &demo_cli,
        &ScenarioArgs {
            fail: vec![format!("R1@{at}")],
            ..args
        },
    )?)?;
    let code = outcome_code(&failing);
    if cli.format == Format::Records {
        return Ok((emit_report(&failing, Format::Records), code));
    }
    let mut out = format!(
        "Bell pair on Q1,Q3 over {} router(s), R1 fails at {at} ns\n\n",
        if single_star { 1 } else { 2 }
    );
    out += "failure-free run:\n";
    out += &simulate_text(&clean, Format::Table);
    out += "\nwith failure:\n";
    out += &simulate_text(&failing, Format::Table);
    if failing.first_trial.outcome.is_complete() {
        out += &format!(
            "\nmax amplitude difference: {:.3e}\nmakespan: {} -> {} ns\n",
            clean.first_state.max_abs_diff(&failing.first_state),
            clean.first_trial.makespan,
            failing.first_trial.makespan
        );
    }
    Ok((out, code))
}
