//! Layered scheduling of circuits onto the router fabric.
//!
//! Each router carries one pair interaction per layer and a qubit takes part
//! in at most one gate per layer. Single-qubit gates need no router. Gates
//! that share a qubit keep their circuit order; nothing else is reordered.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::fabric::{OperatingMode, Timing};
use crate::topology::{QubitId, RouterId, Topology};
use crate::Nanos;

/// Exhaustive search bound for [`optimal_depth_bruteforce`].
pub const BRUTEFORCE_MAX_GATES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("gate {gate}: {qubit} is outside the {n_qubits}-qubit fabric")]
    OperandOutOfRange {
        gate: usize,
        qubit: QubitId,
        n_qubits: usize,
    },
    #[error("gate {gate} needs {needed} routers, only {available} usable")]
    InsufficientRouters {
        gate: usize,
        needed: usize,
        available: usize,
    },
    #[error("exhaustive search is limited to {limit} gates, got {gates}")]
    TooLarge { gates: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledGate {
    pub gate: Gate,
    /// Empty for 1q gates, one router for 2q gates, one per leg for 3q gates.
    pub routers: Vec<RouterId>,
    pub layer: usize,
    pub start: Nanos,
    pub end: Nanos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub layers: Vec<Vec<ScheduledGate>>,
    /// Layers holding at least one multi-qubit gate.
    pub depth: usize,
    pub makespan: Nanos,
}

impl Schedule {
    pub fn gates(&self) -> impl Iterator<Item = &ScheduledGate> {
        self.layers.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Layer table as comma-separated text with a header row.
    pub fn to_table(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["layer", "gate", "kind", "qubits", "routers", "start", "end"])
            .expect("in-memory write");
        for sg in self.gates() {
            let qubits: Vec<String> = sg.gate.qubits.iter().map(ToString::to_string).collect();
            let routers: Vec<String> = sg.routers.iter().map(ToString::to_string).collect();
            w.write_record([
                sg.layer.to_string(),
                sg.gate.id.to_string(),
                sg.gate.kind.to_string(),
                qubits.join(" "),
                routers.join(" "),
                sg.start.to_string(),
                sg.end.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to vec")).expect("csv output is utf-8")
    }
}

/// Routers a mode lets run at once.
pub fn router_capacity(topology: &Topology, mode: OperatingMode) -> usize {
    match mode {
        OperatingMode::SingleActive => 1,
        OperatingMode::AllActive => topology.n_routers(),
    }
}

pub fn gate_duration(gate: &Gate, timing: &Timing) -> Nanos {
    if gate.kind.is_multi_qubit() {
        timing.t_2q
    } else {
        timing.t_1q
    }
}

/// Whether two gates may share a layer given enough routers.
pub fn compatible(a: &Gate, b: &Gate) -> bool {
    !a.shares_qubit(b)
}

/// Picks routers round-robin: the first free ones at or after a cursor that
/// advances past every assignment.
#[derive(Debug, Clone)]
pub(crate) struct RoundRobin {
    cursor: usize,
}

impl RoundRobin {
    pub(crate) fn new() -> Self {
        Self { cursor: 0 }
    }

    /// Assigns one distinct free router per leg. `usable` lists candidate
    /// routers in index order, `busy` marks taken ones and `fits(leg, r)`
    /// says whether leg `leg` can run through `r`. Candidates are tried in
    /// cyclic order from the cursor.
    pub(crate) fn pick<F>(
        &mut self,
        usable: &[RouterId],
        busy: &[bool],
        legs: usize,
        fits: F,
    ) -> Option<Vec<RouterId>>
    where
        F: Fn(usize, RouterId) -> bool,
    {
        let free: Vec<RouterId> = usable.iter().copied().filter(|r| !busy[r.0]).collect();
        if free.len() < legs {
            return None;
        }
        let start = free.iter().position(|r| r.0 >= self.cursor).unwrap_or(0);
        let order: Vec<RouterId> = (0..free.len())
            .map(|k| free[(start + k) % free.len()])
            .collect();

        fn assign<F: Fn(usize, RouterId) -> bool>(
            order: &[RouterId],
            legs: usize,
            fits: &F,
            picked: &mut Vec<RouterId>,
        ) -> bool {
            let leg = picked.len();
            if leg == legs {
                return true;
            }
            for &r in order {
                if picked.contains(&r) || !fits(leg, r) {
                    continue;
                }
                picked.push(r);
                if assign(order, legs, fits, picked) {
                    return true;
                }
                picked.pop();
            }
            false
        }

        let mut picked = Vec::with_capacity(legs);
        if !assign(&order, legs, &fits, &mut picked) {
            return None;
        }
        if let Some(last) = picked.last() {
            self.cursor = last.0 + 1;
        }
        Some(picked)
    }
}

fn check_fit(c: &Circuit, t: &Topology, capacity: usize) -> Result<(), ScheduleError> {
    for g in c.gates() {
        if let Some(&q) = g.qubits.iter().find(|q| !t.has_qubit(**q)) {
            return Err(ScheduleError::OperandOutOfRange {
                gate: g.id,
                qubit: q,
                n_qubits: t.n_qubits(),
            });
        }
        if g.kind.router_demand() > capacity {
            return Err(ScheduleError::InsufficientRouters {
                gate: g.id,
                needed: g.kind.router_demand(),
                available: capacity,
            });
        }
    }
    Ok(())
}

/// Greedy earliest-layer list scheduling with round-robin router
/// assignment.
pub fn schedule(
    c: &Circuit,
    t: &Topology,
    mode: OperatingMode,
    timing: &Timing,
) -> Result<Schedule, ScheduleError> {
    let capacity = router_capacity(t, mode);
    check_fit(c, t, capacity)?;
    let usable: Vec<RouterId> = t.routers().take(capacity).collect();

    let mut layers: Vec<Vec<ScheduledGate>> = Vec::new();
    let mut router_busy: Vec<Vec<bool>> = Vec::new();
    // One past the last layer touching each qubit.
    let mut ready = vec![0usize; t.n_qubits()];
    let mut rr = RoundRobin::new();

    for g in c.gates() {
        let earliest = g.qubits.iter().map(|q| ready[q.0]).max().unwrap_or(0);
        let demand = g.kind.router_demand();
        let mut layer = earliest;
        let routers = loop {
            if layer == layers.len() {
                layers.push(Vec::new());
                router_busy.push(vec![false; t.n_routers()]);
            }
            if demand == 0 {
                break Vec::new();
            }
            if let Some(rs) = rr.pick(&usable, &router_busy[layer], demand, |_, _| true) {
                break rs;
            }
            layer += 1;
        };
        for r in &routers {
            router_busy[layer][r.0] = true;
        }
        for q in &g.qubits {
            ready[q.0] = layer + 1;
        }
        layers[layer].push(ScheduledGate {
            gate: g.clone(),
            routers,
            layer,
            start: 0.0,
            end: 0.0,
        });
    }

    let mut clock = 0.0;
    let mut depth = 0;
    for layer in &mut layers {
        let span = layer
            .iter()
            .map(|sg| gate_duration(&sg.gate, timing))
            .fold(0.0, f64::max);
        for sg in layer.iter_mut() {
            sg.start = clock;
            sg.end = clock + gate_duration(&sg.gate, timing);
        }
        if layer.iter().any(|sg| sg.gate.kind.is_multi_qubit()) {
            depth += 1;
        }
        clock += span;
    }
    Ok(Schedule {
        layers,
        depth,
        makespan: clock,
    })
}

/// Depth under `t1` over depth under `t2`, both with every router active.
/// Circuits without multi-qubit gates have ratio 1.
pub fn depth_ratio(c: &Circuit, t1: &Topology, t2: &Topology) -> Result<f64, ScheduleError> {
    let timing = Timing::default();
    let d1 = schedule(c, t1, OperatingMode::AllActive, &timing)?.depth;
    let d2 = schedule(c, t2, OperatingMode::AllActive, &timing)?.depth;
    Ok(if d1 == 0 && d2 == 0 {
        1.0
    } else {
        d1 as f64 / d2 as f64
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    MissingGate(usize),
    DuplicateGate(usize),
    UnknownGate(usize),
    GateMismatch(usize),
    LayerMismatch {
        gate: usize,
        layer: usize,
    },
    RouterOverCommitted {
        layer: usize,
        router: RouterId,
    },
    QubitConflict {
        layer: usize,
        qubit: QubitId,
    },
    WrongRouterCount {
        gate: usize,
        expected: usize,
        got: usize,
    },
    InvalidRouter {
        gate: usize,
        router: RouterId,
    },
    DependencyOrder {
        before: usize,
        after: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingGate(g) => write!(f, "gate {g} is not scheduled"),
            Violation::DuplicateGate(g) => write!(f, "gate {g} is scheduled more than once"),
            Violation::UnknownGate(g) => write!(f, "gate {g} is not in the circuit"),
            Violation::GateMismatch(g) => write!(f, "gate {g} differs from the circuit"),
            Violation::LayerMismatch { gate, layer } => {
                write!(f, "gate {gate} sits in layer {layer} but records another")
            }
            Violation::RouterOverCommitted { layer, router } => {
                write!(f, "layer {layer}: {router} used more than once")
            }
            Violation::QubitConflict { layer, qubit } => {
                write!(f, "layer {layer}: {qubit} used by two gates")
            }
            Violation::WrongRouterCount {
                gate,
                expected,
                got,
            } => {
                write!(f, "gate {gate} needs {expected} routers, has {got}")
            }
            Violation::InvalidRouter { gate, router } => {
                write!(f, "gate {gate}: {router} is missing or repeated")
            }
            Violation::DependencyOrder { before, after } => {
                write!(
                    f,
                    "gate {after} runs no later than its predecessor {before}"
                )
            }
        }
    }
}

/// Checks completeness, layer legality, router capacity and dependency
/// order; collects every violation.
pub fn validate_schedule(s: &Schedule, c: &Circuit, t: &Topology) -> Result<(), Vec<Violation>> {
    let mut bad = Vec::new();
    let mut layer_of: Vec<Option<usize>> = vec![None; c.len()];

    for (li, layer) in s.layers.iter().enumerate() {
        let mut routers_used = vec![0usize; t.n_routers()];
        let mut qubits_used = vec![0usize; t.n_qubits()];
        for sg in layer {
            let id = sg.gate.id;
            if sg.layer != li {
                bad.push(Violation::LayerMismatch {
                    gate: id,
                    layer: li,
                });
            }
            match c.gate(id) {
                None => bad.push(Violation::UnknownGate(id)),
                Some(g) if *g != sg.gate => bad.push(Violation::GateMismatch(id)),
                Some(_) => match layer_of[id] {
                    Some(_) => bad.push(Violation::DuplicateGate(id)),
                    None => layer_of[id] = Some(li),
                },
            }
            let expected = sg.gate.kind.router_demand();
            if sg.routers.len() != expected {
                bad.push(Violation::WrongRouterCount {
                    gate: id,
                    expected,
                    got: sg.routers.len(),
                });
            }
            for (k, r) in sg.routers.iter().enumerate() {
                if !t.has_router(*r) || sg.routers[..k].contains(r) {
                    bad.push(Violation::InvalidRouter {
                        gate: id,
                        router: *r,
                    });
                } else {
                    routers_used[r.0] += 1;
                }
            }
            for q in &sg.gate.qubits {
                if t.has_qubit(*q) {
                    qubits_used[q.0] += 1;
                }
            }
        }
        for (r, n) in routers_used.iter().enumerate() {
            if *n > 1 {
                bad.push(Violation::RouterOverCommitted {
                    layer: li,
                    router: RouterId(r),
                });
            }
        }
        for (q, n) in qubits_used.iter().enumerate() {
            if *n > 1 {
                bad.push(Violation::QubitConflict {
                    layer: li,
                    qubit: QubitId(q),
                });
            }
        }
    }

    for g in c.gates() {
        if layer_of[g.id].is_none() {
            bad.push(Violation::MissingGate(g.id));
        }
    }
    let gates = c.gates();
    for (j, later) in gates.iter().enumerate() {
        for earlier in &gates[..j] {
            if !earlier.shares_qubit(later) {
                continue;
            }
            if let (Some(a), Some(b)) = (layer_of[earlier.id], layer_of[later.id]) {
                if a >= b {
                    bad.push(Violation::DependencyOrder {
                        before: earlier.id,
                        after: later.id,
                    });
                }
            }
        }
    }

    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}

/// Minimal depth over every valid layering, by exhaustive search.
///
/// Single-qubit gates never constrain depth (they can always take a layer of
/// their own), so only multi-qubit gates are placed. A gate sharing a qubit
/// with an earlier gate must land in a strictly later layer.
pub fn optimal_depth_bruteforce(
    c: &Circuit,
    t: &Topology,
    mode: OperatingMode,
) -> Result<usize, ScheduleError> {
    if c.len() > BRUTEFORCE_MAX_GATES {
        return Err(ScheduleError::TooLarge {
            gates: c.len(),
            limit: BRUTEFORCE_MAX_GATES,
        });
    }
    let capacity = router_capacity(t, mode);
    check_fit(c, t, capacity)?;

    let multi: Vec<&Gate> = c
        .gates()
        .iter()
        .filter(|g| g.kind.is_multi_qubit())
        .collect();
    let preds: Vec<Vec<usize>> = multi
        .iter()
        .enumerate()
        .map(|(j, g)| (0..j).filter(|&i| multi[i].shares_qubit(g)).collect())
        .collect();
    let demand: Vec<usize> = multi.iter().map(|g| g.kind.router_demand()).collect();

    struct Search<'a> {
        preds: &'a [Vec<usize>],
        demand: &'a [usize],
        capacity: usize,
        layer: Vec<usize>,
        load: Vec<usize>,
        best: usize,
    }

    impl Search<'_> {
        fn go(&mut self, j: usize, used: usize) {
            if used >= self.best {
                return;
            }
            if j == self.preds.len() {
                self.best = used;
                return;
            }
            let lo = self.preds[j]
                .iter()
                .map(|&i| self.layer[i] + 1)
                .max()
                .unwrap_or(0);
            // Predecessors sit below `used`, so lo <= used. Any layer beyond
            // `used` is equivalent to opening layer `used`.
            for l in lo..=used {
                if self.load[l] + self.demand[j] > self.capacity {
                    continue;
                }
                self.load[l] += self.demand[j];
                self.layer[j] = l;
                self.go(j + 1, used.max(l + 1));
                self.load[l] -= self.demand[j];
            }
        }
    }

    let n = multi.len();
    let mut search = Search {
        preds: &preds,
        demand: &demand,
        capacity,
        layer: vec![0; n],
        load: vec![0; n + 1],
        best: n + 1,
    };
    search.go(0, 0);
    Ok(if n == 0 { 0 } else { search.best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{builtin, GateKind};

    fn topo(r: usize) -> Topology {
        Topology::new(4, r).unwrap()
    }

    fn all_active(c: &Circuit, r: usize) -> Schedule {
        schedule(c, &topo(r), OperatingMode::AllActive, &Timing::default()).unwrap()
    }

    fn disjoint_pair() -> Circuit {
        Circuit::from_ops(4, &[(GateKind::Cz, &[0, 3]), (GateKind::Cz, &[1, 2])]).unwrap()
    }

    #[test]
    fn compatibility() {
        let cz = |a, b| Gate::new(0, GateKind::Cz, &[a, b]);
        assert!(compatible(&cz(0, 3), &cz(1, 2)));
        assert!(!compatible(&cz(1, 2), &cz(1, 3)));
        assert!(compatible(&cz(0, 1), &Gate::new(1, GateKind::H, &[2])));
    }

    #[test]
    fn star_serializes_disjoint_pairs() {
        assert_eq!(all_active(&disjoint_pair(), 1).depth, 2);
        let s = all_active(&disjoint_pair(), 2);
        assert_eq!(s.depth, 1);
        assert_eq!(s.layers[0][0].routers, vec![RouterId(0)]);
        assert_eq!(s.layers[0][1].routers, vec![RouterId(1)]);
    }

    #[test]
    fn single_active_double_star_behaves_like_star() {
        let s = schedule(
            &disjoint_pair(),
            &topo(2),
            OperatingMode::SingleActive,
            &Timing::default(),
        )
        .unwrap();
        assert_eq!(s.depth, 2);
        assert!(s.gates().all(|g| g.routers == vec![RouterId(0)]));
    }

    #[test]
    fn cczs_takes_both_routers() {
        let c = Circuit::from_ops(4, &[(GateKind::Cczs, &[1, 2, 3])]).unwrap();
        let s = all_active(&c, 2);
        assert_eq!(s.depth, 1);
        assert_eq!(s.layers[0][0].routers, vec![RouterId(0), RouterId(1)]);
        assert_eq!(
            schedule(&c, &topo(1), OperatingMode::AllActive, &Timing::default()),
            Err(ScheduleError::InsufficientRouters {
                gate: 0,
                needed: 2,
                available: 1
            })
        );
    }

    #[test]
    fn cczs_and_disjoint_cz_share_a_triple_star_layer() {
        let c =
            Circuit::from_ops(6, &[(GateKind::Cczs, &[0, 1, 2]), (GateKind::Cz, &[3, 4])]).unwrap();
        let t = Topology::new(6, 3).unwrap();
        let s = schedule(&c, &t, OperatingMode::AllActive, &Timing::default()).unwrap();
        assert_eq!(s.depth, 1);
        validate_schedule(&s, &c, &t).unwrap();
    }

    #[test]
    fn operand_out_of_range() {
        let c = Circuit::from_ops(6, &[(GateKind::Cz, &[0, 5])]).unwrap();
        assert!(matches!(
            schedule(&c, &topo(2), OperatingMode::AllActive, &Timing::default()),
            Err(ScheduleError::OperandOutOfRange { gate: 0, .. })
        ));
    }

    #[test]
    fn timing_of_layers() {
        let c = builtin::bell(4, 0, 2).unwrap();
        let s = all_active(&c, 2);
        let spans: Vec<(f64, f64)> = s.gates().map(|g| (g.start, g.end)).collect();
        assert_eq!(
            spans,
            [(0.0, 20.0), (0.0, 20.0), (20.0, 220.0), (220.0, 240.0)]
        );
        assert_eq!(s.makespan, 240.0);
        assert_eq!(s.depth, 1);
    }

    #[test]
    fn one_qubit_gates_pack_beside_pairs() {
        let c = Circuit::from_ops(4, &[(GateKind::Cz, &[0, 1]), (GateKind::H, &[2])]).unwrap();
        let s = all_active(&c, 1);
        assert_eq!(s.layers.len(), 1);
        assert_eq!(s.layers[0][0].end, 200.0);
        assert_eq!(s.layers[0][1].end, 20.0);
    }

    #[test]
    fn depth_ratios() {
        let ladder = builtin::disjoint_ladder(10);
        assert_eq!(depth_ratio(&ladder, &topo(1), &topo(2)).unwrap(), 2.0);
        let ones = Circuit::from_ops(4, &[(GateKind::H, &[0]), (GateKind::X, &[1])]).unwrap();
        assert_eq!(depth_ratio(&ones, &topo(1), &topo(2)).unwrap(), 1.0);
        let chain = Circuit::from_ops(
            4,
            &[
                (GateKind::Cz, &[0, 1]),
                (GateKind::Cz, &[1, 2]),
                (GateKind::Cz, &[2, 3]),
            ],
        )
        .unwrap();
        assert_eq!(depth_ratio(&chain, &topo(1), &topo(2)).unwrap(), 1.0);
        assert_eq!(
            optimal_depth_bruteforce(&chain, &topo(2), OperatingMode::AllActive),
            Ok(3)
        );
    }

    #[test]
    fn validation_catches_violations() {
        let c = disjoint_pair();
        let t = topo(2);
        let good = all_active(&c, 2);
        validate_schedule(&good, &c, &t).unwrap();

        let mut crowded = good.clone();
        for sg in &mut crowded.layers[0] {
            sg.routers = vec![RouterId(0)];
        }
        let v = validate_schedule(&crowded, &c, &t).unwrap_err();
        assert!(v.contains(&Violation::RouterOverCommitted {
            layer: 0,
            router: RouterId(0)
        }));

        let mut short = good.clone();
        short.layers[0].pop();
        assert_eq!(
            validate_schedule(&short, &c, &t),
            Err(vec![Violation::MissingGate(1)])
        );

        let chain =
            Circuit::from_ops(4, &[(GateKind::Cz, &[0, 1]), (GateKind::Cz, &[1, 2])]).unwrap();
        let mut swapped = all_active(&chain, 2);
        swapped.layers.swap(0, 1);
        for (i, l) in swapped.layers.iter_mut().enumerate() {
            l[0].layer = i;
        }
        assert_eq!(
            validate_schedule(&swapped, &chain, &t),
            Err(vec![Violation::DependencyOrder {
                before: 0,
                after: 1
            }])
        );
    }

    #[test]
    fn bruteforce_examples() {
        let t2 = topo(2);
        assert_eq!(
            optimal_depth_bruteforce(&disjoint_pair(), &t2, OperatingMode::AllActive),
            Ok(1)
        );
        let three = Circuit::from_ops(
            6,
            &[
                (GateKind::Cz, &[0, 1]),
                (GateKind::Cz, &[2, 3]),
                (GateKind::Cz, &[4, 5]),
            ],
        )
        .unwrap();
        let t62 = Topology::new(6, 2).unwrap();
        assert_eq!(
            optimal_depth_bruteforce(&three, &t62, OperatingMode::AllActive),
            Ok(2)
        );
        let one = Circuit::from_ops(4, &[(GateKind::Cz, &[0, 1])]).unwrap();
        assert_eq!(
            optimal_depth_bruteforce(&one, &t2, OperatingMode::AllActive),
            Ok(1)
        );
        assert!(matches!(
            optimal_depth_bruteforce(&builtin::disjoint_ladder(11), &t2, OperatingMode::AllActive),
            Err(ScheduleError::TooLarge { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let c = builtin::ghz(4).unwrap();
        assert_eq!(all_active(&c, 2), all_active(&c, 2));
    }
}
