//! Acceptance gate: runs each criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starfabric::circuit::{builtin, Circuit, Gate, GateKind};
use starfabric::fabric::{OperatingMode, Timing};
use starfabric::failures::{sample_failures, FailureModel, TargetPolicy};
use starfabric::harness::{parse_failure_spec, run_scenario, FailureSpec, Scenario};
use starfabric::qsim::{
    analytic_fidelity, cczs_matrix, cz_matrix, czs_matrix, gate_matrix, sample_success,
    swap_matrix, FidelityModel, GateMatrix, StateVector,
};
use starfabric::rng::{substream, trial_seed, FAILURE_STREAM};
use starfabric::scheduler::{depth_ratio, optimal_depth_bruteforce, schedule};
use starfabric::topology::{enumerate_double_pairs, QubitId, Topology};

const BIN: &str = env!("CARGO_BIN_EXE_starfabric");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn combinatorics() -> Outcome {
    let t0 = Instant::now();
    let c = enumerate_double_pairs(4);
    let elapsed = t0.elapsed().as_secs_f64();
    ensure!(
        (c.pairs, c.total, c.disjoint, c.shared) == (6, 15, 3, 12),
        "n=4 gave {}/{}/{}/{}",
        c.pairs,
        c.total,
        c.disjoint,
        c.shared
    );
    ensure!(elapsed < 1.0, "n=4 took {elapsed}s");
    for n in 2..=8 {
        let c = enumerate_double_pairs(n);
        // Brute force: a double-pair is disjoint iff its union has 4 qubits.
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let (mut total, mut disjoint) = (0, 0);
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                total += 1;
                let mut u = vec![pairs[i].0, pairs[i].1, pairs[j].0, pairs[j].1];
                u.sort_unstable();
                u.dedup();
                disjoint += usize::from(u.len() == 4);
            }
        }
        ensure!(
            c.total == total && c.disjoint == disjoint,
            "n={n} disagrees with brute force"
        );
        ensure!(
            c.total == binom(binom(n, 2), 2),
            "n={n} total off closed form"
        );
        ensure!(
            c.disjoint == 3 * binom(n, 4),
            "n={n} disjoint off closed form"
        );
        ensure!(c.shared == total - disjoint, "n={n} shared count");
    }
    Ok(format!(
        "n=4: 6/15/3/12 in {:.1}ms; n<=8 match brute force and closed forms",
        elapsed * 1e3
    ))
}

fn random_circuit(rng: &mut ChaCha8Rng, n: usize, len: usize, allow_three: bool) -> Circuit {
    let gates = (0..len)
        .map(|id| {
            let roll = rng.random_range(0..10);
            let kind = match roll {
                0..=2 => GateKind::H,
                3 => GateKind::T,
                4..=6 => GateKind::Cz,
                7 => GateKind::Swap,
                _ if allow_three && n >= 3 => GateKind::Cczs,
                _ => GateKind::Cz,
            };
            let mut qs: Vec<usize> = (0..n).collect();
            for i in 0..kind.arity() {
                let j = rng.random_range(i..n);
                qs.swap(i, j);
            }
            Gate::new(id, kind, &qs[..kind.arity()])
        })
        .collect();
    Circuit::new(n, gates).unwrap()
}

fn speedup() -> Outcome {
    let ladder = builtin::disjoint_ladder(100);
    let star = Topology::new(4, 1).unwrap();
    let double = Topology::new(4, 2).unwrap();
    let timing = Timing::default();
    let d1 = schedule(&ladder, &star, OperatingMode::AllActive, &timing)
        .unwrap()
        .depth;
    let d2 = schedule(&ladder, &double, OperatingMode::AllActive, &timing)
        .unwrap()
        .depth;
    let ratio = depth_ratio(&ladder, &star, &double).unwrap();
    ensure!(d1 == 100 && d2 == 50, "ladder depths {d1}/{d2}");
    ensure!(ratio == 2.0, "depth ratio {ratio}");

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut instances, mut optimal, mut worst) = (0, 0, 1.0f64);
    while instances < 500 {
        let n = rng.random_range(3..=6);
        let r = rng.random_range(1..=3);
        let len = rng.random_range(1..=10);
        let c = random_circuit(&mut rng, n, len, r >= 2);
        let t = Topology::new(n, r).unwrap();
        let Ok(s) = schedule(&c, &t, OperatingMode::AllActive, &timing) else {
            continue;
        };
        let opt = optimal_depth_bruteforce(&c, &t, OperatingMode::AllActive).unwrap();
        instances += 1;
        if s.depth == opt {
            optimal += 1;
        } else {
            worst = worst.max(s.depth as f64 / opt as f64);
        }
    }
    ensure!(worst <= 2.0, "greedy/optimal gap {worst}");
    Ok(format!(
        "ladder depth 100 vs 50 (ratio {ratio:.1}); greedy optimal on {optimal}/{instances} random instances, worst gap {worst:.2}x"
    ))
}

fn bell_scenario(routers: usize, fail: Option<&str>) -> Scenario {
    let mut s = Scenario {
        topology: Topology::new(4, routers).unwrap(),
        ..Scenario::demo()
    };
    if let Some(f) = fail {
        s.failures = FailureSpec {
            policy: TargetPolicy::Fixed(vec![parse_failure_spec(f).unwrap()]),
            ..FailureSpec::default()
        };
    }
    s.validate().unwrap();
    s
}

fn failover_continuity() -> Outcome {
    let clean = run_scenario(&bell_scenario(2, None)).unwrap();
    let cz = clean
        .schedule
        .gates()
        .find(|g| g.gate.kind == GateKind::Cz)
        .unwrap();
    let at = 0.5 * (cz.start + cz.end);
    ensure!(
        cz.start < at && at < cz.end,
        "failure time not inside the CZ window"
    );
    let spec = format!("R1@{at}");
    let failed = run_scenario(&bell_scenario(2, Some(&spec))).unwrap();
    let diff = failed.first_state.max_abs_diff(&clean.first_state);
    let (m0, m1) = (clean.first_trial.makespan, failed.first_trial.makespan);
    let t_signal = Timing::default().t_signal;
    ensure!(diff <= 1e-12, "state differs by {diff}");
    ensure!(
        failed.metrics.completion_rate == 1.0,
        "double star did not complete"
    );
    ensure!(m1 >= m0 + t_signal, "makespan {m1} vs clean {m0}");

    let single = run_scenario(&bell_scenario(1, Some(&spec))).unwrap();
    ensure!(
        single.metrics.completion_rate == 0.0,
        "single star completed"
    );
    let code = Command::new(BIN)
        .args(["simulate", "--routers", "1", "--fail", &spec])
        .output()
        .map_err(|e| e.to_string())?
        .status
        .code();
    ensure!(code == Some(2), "single-star CLI exit code {code:?}");
    Ok(format!(
        "R1 fails at {at} ns mid-CZ: state diff {diff:.1e}, makespan {m0} -> {m1} ns; single star incomplete, exit 2"
    ))
}

fn gate_algebra() -> Outcome {
    let (cz, swap) = (cz_matrix(), swap_matrix());
    ensure!(
        cz.matmul(&swap) == swap.matmul(&cz),
        "CZ and SWAP do not commute"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut kinds: Vec<GateKind> = ["H", "X", "Z", "S", "T", "CZ", "SWAP", "CCZS"]
        .iter()
        .map(|k| k.parse().unwrap())
        .collect();
    for _ in 0..100 {
        let [theta, phi, gamma] = [(); 3].map(|_| rng.random_range(-7.0..7.0));
        kinds.push(GateKind::Czs { theta, phi, gamma });
    }
    let worst = kinds
        .iter()
        .map(|k| gate_matrix(k).unitarity_error())
        .fold(0.0, f64::max);
    ensure!(worst <= 1e-12, "unitarity error {worst}");
    ensure!(czs_matrix(0.1, 0.2, 0.3).unitarity_error() <= 1e-12, "CZS");
    let m = cczs_matrix();
    ensure!(
        m.control_block(0) == GateMatrix::identity(4),
        "control-0 block"
    );
    ensure!(m.control_block(1) == cz.matmul(&swap), "control-1 block");

    let n = 8;
    let mut state = StateVector::zero(n).unwrap();
    let mut drift = 0.0f64;
    for _ in 0..10_000 {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let mut qs: Vec<usize> = (0..n).collect();
        for i in 0..kind.arity() {
            let j = rng.random_range(i..n);
            qs.swap(i, j);
        }
        let ids: Vec<QubitId> = qs[..kind.arity()].iter().map(|&q| QubitId(q)).collect();
        state.apply_matrix(&gate_matrix(&kind), &ids).unwrap();
        drift = drift.max((state.norm() - 1.0).abs());
    }
    ensure!(drift <= 1e-12, "norm drift {drift}");
    Ok(format!(
        "CZ*SWAP = SWAP*CZ; max unitarity error {worst:.1e}; CCZS blocks exact; norm drift {drift:.1e} over 10^4 gates"
    ))
}

fn fidelity_model() -> Outcome {
    let c = Circuit::from_ops(4, &[(GateKind::Cz, &[0usize, 1][..]); 5]).unwrap();
    let t = Topology::new(4, 2).unwrap();
    let s = schedule(&c, &t, OperatingMode::SingleActive, &Timing::default()).unwrap();
    let f = analytic_fidelity(&s, &FidelityModel::default());
    ensure!((f - 0.96f64.powi(5)).abs() <= 1e-12, "fidelity {f}");
    ensure!((f - 0.8153726976).abs() <= 1e-12, "fidelity {f}");
    for k in 0..=12 {
        let c = Circuit::new(4, builtin::disjoint_ladder(k).gates().to_vec()).unwrap();
        let s = schedule(&c, &t, OperatingMode::AllActive, &Timing::default()).unwrap();
        let fk = analytic_fidelity(&s, &FidelityModel::default());
        ensure!((fk - 0.96f64.powi(k as i32)).abs() <= 1e-12, "k={k}: {fk}");
    }
    let n = 100_000;
    let mut rng = substream(17, "acceptance-bernoulli");
    let hits = (0..n).filter(|_| sample_success(f, &mut rng)).count();
    let rate = hits as f64 / n as f64;
    let sigma = (f * (1.0 - f) / n as f64).sqrt();
    ensure!((rate - f).abs() <= 3.0 * sigma, "empirical {rate} vs {f}");
    Ok(format!(
        "5 CZ -> {f:.10}; empirical {rate:.5} ({:.2} sigma over 10^5)",
        (rate - f).abs() / sigma
    ))
}

fn ks_exponential(mut xs: Vec<f64>, rate: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-rate * x).exp();
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

fn stochastic_calibration() -> Outcome {
    let topology = Topology::new(4, 2).unwrap();
    let (rate, horizon) = (0.01, 1000.0);
    let model = FailureModel {
        rate,
        horizon,
        policy: TargetPolicy::UniformRouter,
    };
    let horizons = 10_000;
    let (mut events, mut gaps) = (0usize, Vec::new());
    for i in 0..horizons {
        let evs = sample_failures(
            &model,
            &topology,
            &mut substream(trial_seed(6, i), FAILURE_STREAM),
        );
        events += evs.len();
        // The first arrival is Exp(rate) truncated at the horizon; with
        // rate * horizon = 10 the truncation mass is e^-10.
        if let Some(e) = evs.first() {
            gaps.push(e.at);
        }
    }
    let mean = events as f64 / horizons as f64;
    let tol = 3.0 * 10f64.sqrt() / 100.0;
    ensure!((mean - 10.0).abs() <= tol, "mean count {mean}");
    let n = gaps.len() as f64;
    let d = ks_exponential(gaps, rate);
    let critical = 1.628 / n.sqrt();
    ensure!(d < critical, "KS D={d} >= {critical}");
    Ok(format!(
        "mean count {mean:.4} (tol {tol:.4}); KS D={d:.5} < {critical:.5}"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("mc.toml");
    std::fs::write(
        &cfg,
        "[topology]\nn_qubits = 4\nn_routers = 3\n[run]\nseed = 20240\ntrials = 500\n\
         [circuit]\nbuiltin = \"ladder:20\"\n[failures]\nrate = 0.0004\npolicy = \"uniform-link\"\n",
    )
    .map_err(|e| e.to_string())?;
    let invoke = || {
        Command::new(BIN)
            .args([
                "--format",
                "records",
                "--config",
                cfg.to_str().unwrap(),
                "montecarlo",
            ])
            .output()
            .map(|o| o.stdout)
            .map_err(|e| e.to_string())
    };
    let (a, b) = (invoke()?, invoke()?);
    ensure!(!a.is_empty(), "no output");
    ensure!(a == b, "records differ between invocations");
    let text = String::from_utf8_lossy(&a);
    let events = text
        .lines()
        .filter(|l| l.contains(r#""record":"event""#))
        .count();
    ensure!(events > 0, "no event trace in records");
    Ok(format!(
        "{} bytes identical across two runs, {events} event records",
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("combinatorics exactness", combinatorics),
        ("simultaneity speedup", speedup),
        ("failover continuity", failover_continuity),
        ("gate algebra", gate_algebra),
        ("fidelity model", fidelity_model),
        ("stochastic calibration", stochastic_calibration),
        ("determinism", determinism),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {p:?}")));
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.2}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
