//! Executes a schedule on the fabric and the state vector, with failures
//! interleaved.
//!
//! Gates run in waves. A wave starts once the previous one has fully drained
//! and takes, in schedule order, every gate whose qubits are not claimed by
//! an earlier pending gate and that can get routers on the current fabric.
//! Without failures the waves reproduce the schedule layers.
//!
//! Simultaneous events resolve as completion, then failure, then start. A
//! gate hit by a failure applies no unitary and goes back to the pending
//! list in its original position. In single-active operation losing the
//! active router (or one of its links) triggers failover to the next dormant
//! router; the run is incomplete once a pending gate can no longer be routed.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FidelityModel, QsimError, StateVector};
use crate::circuit::Gate;
use crate::fabric::{EventKind, EventRecord, FabricError, FabricState, OperatingMode, Reservation};
use crate::failures::{FailureEvent, FailureTarget};
use crate::scheduler::{gate_duration, RoundRobin, Schedule};
use crate::topology::{QubitId, RouterId};
use crate::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IncompleteReason {
    /// No working router is left for a pending multi-qubit gate.
    NoBackupAvailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Complete,
    Incomplete {
        reason: IncompleteReason,
        /// First pending gate that could not be routed.
        gate: usize,
    },
}

impl Outcome {
    pub fn is_complete(&self) -> bool {
        matches!(self, Outcome::Complete)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: StateVector,
    pub outcome: Outcome,
    /// Simulated time at which the run finished or got stuck.
    pub makespan: Nanos,
    pub failovers: usize,
    /// Gate attempts cut short by a failure.
    pub aborted_attempts: usize,
    /// Product of the fidelities of the multi-qubit gates that completed.
    pub analytic_fidelity: f64,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    State(#[from] QsimError),
    #[error("fabric rejected a planned reservation: {0}")]
    Fabric(#[from] FabricError),
    #[error("fabric invariant violated at t={at}: {violations:?}")]
    Invariant { at: Nanos, violations: Vec<String> },
}

struct InFlight {
    gate: Gate,
    end: Nanos,
    reservations: Vec<Reservation>,
}

struct Engine<'a> {
    fabric: FabricState,
    failures: &'a [FailureEvent],
    next_failure: usize,
    failovers: usize,
}

impl Engine<'_> {
    fn check(&self) -> Result<(), RunError> {
        self.fabric
            .check_invariants()
            .map_err(|violations| RunError::Invariant {
                at: self.fabric.clock(),
                violations,
            })
    }

    fn peek_failure(&self) -> Option<&FailureEvent> {
        self.failures.get(self.next_failure)
    }

    /// Applies the next failure and, in single-active operation, fails over
    /// if the active router went down. Returns aborted gate ids.
    fn fire_failure(&mut self) -> Vec<usize> {
        let ev = self.failures[self.next_failure];
        self.next_failure += 1;
        let single = self.fabric.operating_mode() == OperatingMode::SingleActive;
        let was_active: Vec<RouterId> = self.fabric.active_routers().collect();
        let mut aborted = self.fabric.apply_failure(&ev);
        if single {
            if let FailureTarget::Link(_, r) = ev.target {
                // Losing a link of the active router takes that router out.
                if was_active.contains(&r) {
                    aborted.extend(self.fabric.retire_router(r));
                }
            }
            if !was_active.is_empty() && self.fabric.active_routers().next().is_none() {
                match self.fabric.failover() {
                    Ok(_) => self.failovers += 1,
                    Err(FabricError::NoBackupAvailable) => {}
                    Err(e) => unreachable!("failover preconditions checked: {e}"),
                }
            }
        }
        aborted.sort_unstable();
        aborted.dedup();
        aborted
    }

    /// Routers for each leg of `gate`, or `None` if the fabric cannot host
    /// it right now.
    fn route(&self, gate: &Gate, busy: &[bool], rr: &mut RoundRobin) -> Option<Vec<RouterId>> {
        let legs = gate.router_legs();
        let usable: Vec<RouterId> = self.fabric.active_routers().collect();
        rr.pick(&usable, busy, legs.len(), |leg, r| {
            self.fabric.can_route(&legs[leg], r)
        })
    }

    fn build_wave(&self, pending: &[Gate], rr: &mut RoundRobin) -> Vec<(Gate, Vec<RouterId>)> {
        let mut claimed: HashSet<QubitId> = HashSet::new();
        let mut busy = vec![false; self.fabric.topology().n_routers()];
        let mut wave = Vec::new();
        for g in pending {
            let free = g.qubits.iter().all(|q| !claimed.contains(q));
            claimed.extend(g.qubits.iter().copied());
            if !free {
                continue;
            }
            let routers = if g.kind.is_multi_qubit() {
                match self.route(g, &busy, rr) {
                    Some(rs) => rs,
                    None => continue,
                }
            } else {
                Vec::new()
            };
            for r in &routers {
                busy[r.0] = true;
            }
            wave.push((g.clone(), routers));
        }
        wave
    }
}

/// Runs `schedule` on `fabric` with `failures` (time-sorted) injected.
///
/// Each schedule layer is a barrier. Router assignment is redone on the live
/// fabric, and gates aborted by a failure retry within their own layer, so
/// gates can move to a backup router without reordering the circuit.
pub fn run(
    schedule: &Schedule,
    fabric: FabricState,
    failures: &[FailureEvent],
    fidelity: &FidelityModel,
) -> Result<RunResult, RunError> {
    let mut state = StateVector::zero(fabric.topology().n_qubits())?;
    let timing = *fabric.timing();
    let mut engine = Engine {
        fabric,
        failures,
        next_failure: 0,
        failovers: 0,
    };
    let mut rr = RoundRobin::new();
    let mut aborted_attempts = 0;
    let mut analytic = 1.0;
    let mut layers = schedule.layers.iter();
    let mut pending: Vec<Gate> = Vec::new();

    let outcome = loop {
        // Failures due by now strike before anything starts.
        while engine
            .peek_failure()
            .is_some_and(|f| f.at <= engine.fabric.clock())
        {
            engine.fire_failure();
            engine.check()?;
        }
        if pending.is_empty() {
            match layers.next() {
                Some(layer) => {
                    pending = layer.iter().map(|sg| sg.gate.clone()).collect();
                    continue;
                }
                None => {
                    engine.fabric.record(EventKind::Complete, Vec::new(), None);
                    break Outcome::Complete;
                }
            }
        }

        let wave = engine.build_wave(&pending, &mut rr);
        if wave.is_empty() {
            let stuck = pending
                .iter()
                .find(|g| g.kind.is_multi_qubit())
                .expect("1q gates never block")
                .id;
            engine
                .fabric
                .record(EventKind::Incomplete, Vec::new(), Some(stuck));
            break Outcome::Incomplete {
                reason: IncompleteReason::NoBackupAvailable,
                gate: stuck,
            };
        }

        let start = engine.fabric.clock();
        let mut in_flight = Vec::with_capacity(wave.len());
        for (gate, routers) in wave {
            let duration = gate_duration(&gate, &timing);
            let mut reservations = Vec::with_capacity(routers.len());
            for (leg, r) in gate.router_legs().into_iter().zip(&routers) {
                reservations.push(
                    engine
                        .fabric
                        .reserve_pair(leg[0], leg[1], *r, gate.id, duration)?,
                );
            }
            let ops = gate.qubits.iter().map(ToString::to_string).collect();
            engine
                .fabric
                .record(EventKind::GateStart, ops, Some(gate.id));
            in_flight.push(InFlight {
                end: start + duration,
                gate,
                reservations,
            });
        }
        engine.check()?;

        while !in_flight.is_empty() {
            let next_end = in_flight
                .iter()
                .map(|f| f.end)
                .fold(f64::INFINITY, f64::min);
            match engine.peek_failure() {
                Some(f) if f.at < next_end => {
                    let aborted = engine.fire_failure();
                    let before = in_flight.len();
                    in_flight.retain(|f| !aborted.contains(&f.gate.id));
                    aborted_attempts += before - in_flight.len();
                }
                _ => {
                    engine.fabric.advance_to(next_end);
                    let (done, rest): (Vec<_>, Vec<_>) =
                        in_flight.into_iter().partition(|f| f.end <= next_end);
                    in_flight = rest;
                    for f in done {
                        state.apply_gate(&f.gate)?;
                        for res in &f.reservations {
                            engine.fabric.release(res)?;
                        }
                        analytic *= fidelity.of(&f.gate.kind);
                        engine
                            .fabric
                            .record(EventKind::GateEnd, Vec::new(), Some(f.gate.id));
                        pending.retain(|g| g.id != f.gate.id);
                    }
                }
            }
            engine.check()?;
        }
    };

    let makespan = engine.fabric.clock();
    Ok(RunResult {
        state,
        outcome,
        makespan,
        failovers: engine.failovers,
        aborted_attempts,
        analytic_fidelity: analytic,
        events: engine.fabric.into_events(),
    })
}
