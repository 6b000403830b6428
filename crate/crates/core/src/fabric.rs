//! Dynamic fabric state: switch positions, router modes, pair reservations
//! and the backup-router failover protocol.
//!
//! Conventions:
//! - Idle switches rest OFF. A reservation turns exactly its two switches ON.
//! - A router carries at most one pair interaction at a time.
//! - `Failed` is absorbing for routers and links alike.
//! - Every transition appends one [`EventRecord`] to the state's log.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::failures::{FailureEvent, FailureTarget};
use crate::topology::{QubitId, RouterId, Topology};
use crate::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwitchState {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RouterMode {
    Active,
    Dormant,
    Failed,
}

/// How the routers of a multi-star fabric are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatingMode {
    /// One active router, the others dormant backups.
    SingleActive,
    /// Every router active; pair interactions may run side by side.
    AllActive,
}

impl fmt::Display for OperatingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatingMode::SingleActive => "single-active",
            OperatingMode::AllActive => "all-active",
        })
    }
}

/// Gate and signaling durations in ns. Switch toggling is folded into the
/// gate durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timing {
    pub t_1q: Nanos,
    pub t_2q: Nanos,
    pub t_signal: Nanos,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            t_1q: 20.0,
            t_2q: 200.0,
            t_signal: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    /// Unique within one fabric lifetime.
    pub id: u64,
    pub router: RouterId,
    pub qubits: [QubitId; 2],
    pub gate_id: usize,
    pub start: Nanos,
    pub end: Nanos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Init,
    Switch,
    Reserve,
    Release,
    Failure,
    Abort,
    Retire,
    Failover,
    NoBackup,
    GateStart,
    GateEnd,
    Incomplete,
    Complete,
}

/// One line of the event log. Field order is part of the log format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: Nanos,
    pub kind: EventKind,
    /// 1-based labels such as `Q1`, `R2`, `ON`.
    pub operands: Vec<String>,
    pub gate: Option<usize>,
}

impl EventRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event records always serialize")
    }
}

/// Line-delimited rendering of an event log, one JSON object per line.
pub fn render_event_log(events: &[EventRecord]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&ev.to_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FabricError {
    #[error("no link between {0} and {1}")]
    NoSuchLink(QubitId, RouterId),
    #[error("cannot switch ON toward dormant router {0}")]
    SwitchOnDormantRouter(RouterId),
    #[error("router {0} has failed")]
    SwitchOnFailedRouter(RouterId),
    #[error("link {0}{1} has failed")]
    LinkFailed(QubitId, RouterId),
    #[error("switch {0}{1} would break an in-flight reservation")]
    ReservationViolation(QubitId, RouterId),
    #[error("router {0} already carries a pair interaction")]
    RouterBusy(RouterId),
    #[error("router {0} is not active")]
    RouterNotActive(RouterId),
    #[error("{0} already holds a reservation on {1}")]
    QubitBusyOnRouter(QubitId, RouterId),
    #[error("a pair interaction needs two distinct qubits, got {0} twice")]
    SameQubit(QubitId),
    #[error("reservation {0} is not active")]
    UnknownReservation(u64),
    #[error("failover applies only to single-active operation")]
    FailoverNotApplicable,
    #[error("router {0} is still active; nothing to fail over")]
    ActiveRouterPresent(RouterId),
    #[error("no dormant backup router remains")]
    NoBackupAvailable,
}

#[derive(Debug, Clone)]
pub struct FabricState {
    topology: Topology,
    timing: Timing,
    mode: OperatingMode,
    switches: Vec<SwitchState>,
    dead_links: Vec<bool>,
    routers: Vec<RouterMode>,
    reservations: Vec<Reservation>,
    clock: Nanos,
    next_reservation: u64,
    log: Vec<EventRecord>,
}

impl FabricState {
    /// Fresh fabric with every switch OFF. Single-active operation keeps
    /// router 0 active and the rest dormant; all-active wakes every router.
    pub fn new(topology: Topology, mode: OperatingMode) -> Self {
        let routers = topology
            .routers()
            .map(|r| match (mode, r.0) {
                (OperatingMode::AllActive, _) | (OperatingMode::SingleActive, 0) => {
                    RouterMode::Active
                }
                _ => RouterMode::Dormant,
            })
            .collect();
        let mut s = Self {
            switches: vec![SwitchState::Off; topology.n_links()],
            dead_links: vec![false; topology.n_links()],
            routers,
            topology,
            timing: Timing::default(),
            mode,
            reservations: Vec::new(),
            clock: 0.0,
            next_reservation: 0,
            log: Vec::new(),
        };
        let ops = vec![
            format!("{}q", s.topology.n_qubits()),
            format!("{}r", s.topology.n_routers()),
            mode.to_string(),
        ];
        s.record(EventKind::Init, ops, None);
        s
    }

    pub fn with_timing(mut self, timing: Timing) -> Self {
        self.timing = timing;
        self
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn timing(&self) -> &Timing {
        &self.timing
    }

    pub fn operating_mode(&self) -> OperatingMode {
        self.mode
    }

    pub fn clock(&self) -> Nanos {
        self.clock
    }

    pub fn router_mode(&self, r: RouterId) -> RouterMode {
        self.routers[r.0]
    }

    pub fn active_routers(&self) -> impl Iterator<Item = RouterId> + '_ {
        self.topology
            .routers()
            .filter(|r| self.routers[r.0] == RouterMode::Active)
    }

    pub fn switch(&self, q: QubitId, r: RouterId) -> Option<SwitchState> {
        self.topology.link_index(q, r).map(|i| self.switches[i])
    }

    pub fn link_failed(&self, q: QubitId, r: RouterId) -> bool {
        self.topology
            .link_index(q, r)
            .is_some_and(|i| self.dead_links[i])
    }

    /// Router is active and both links toward it are intact.
    pub fn can_route(&self, qubits: &[QubitId], r: RouterId) -> bool {
        self.topology.has_router(r)
            && self.routers[r.0] == RouterMode::Active
            && qubits
                .iter()
                .all(|&q| self.topology.has_qubit(q) && !self.link_failed(q, r))
    }

    pub fn reservations(&self) -> &[Reservation] {
        &self.reservations
    }

    pub fn is_router_busy(&self, r: RouterId) -> bool {
        self.reservations.iter().any(|res| res.router == r)
    }

    /// A multi-qubit gate is in flight iff it holds reservations and every
    /// reserved switch is ON.
    pub fn is_in_flight(&self, gate_id: usize) -> bool {
        let mut held = self
            .reservations
            .iter()
            .filter(|res| res.gate_id == gate_id)
            .peekable();
        held.peek().is_some()
            && held.all(|res| {
                res.qubits
                    .iter()
                    .all(|&q| self.switch(q, res.router) == Some(SwitchState::On))
            })
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.log
    }

    pub fn into_events(self) -> Vec<EventRecord> {
        self.log
    }

    /// Appends a record stamped with the current clock.
    pub fn record(&mut self, kind: EventKind, operands: Vec<String>, gate: Option<usize>) {
        self.log.push(EventRecord {
            t: self.clock,
            kind,
            operands,
            gate,
        });
    }

    /// Moves the clock forward; never backward.
    pub fn advance_to(&mut self, t: Nanos) {
        if t > self.clock {
            self.clock = t;
        }
    }

    fn link(&self, q: QubitId, r: RouterId) -> Result<usize, FabricError> {
        self.topology
            .link_index(q, r)
            .ok_or(FabricError::NoSuchLink(q, r))
    }

    fn put_switch(&mut self, q: QubitId, r: RouterId, pos: SwitchState) {
        let i = self.topology.link_index(q, r).expect("checked link");
        if self.switches[i] != pos {
            self.switches[i] = pos;
            let label = match pos {
                SwitchState::On => "ON",
                SwitchState::Off => "OFF",
            };
            self.record(
                EventKind::Switch,
                vec![q.to_string(), r.to_string(), label.into()],
                None,
            );
        }
    }

    pub fn set_switch(
        &mut self,
        q: QubitId,
        r: RouterId,
        pos: SwitchState,
    ) -> Result<(), FabricError> {
        let i = self.link(q, r)?;
        match self.routers[r.0] {
            RouterMode::Failed => return Err(FabricError::SwitchOnFailedRouter(r)),
            RouterMode::Dormant if pos == SwitchState::On => {
                return Err(FabricError::SwitchOnDormantRouter(r))
            }
            _ => {}
        }
        if pos == SwitchState::On && self.dead_links[i] {
            return Err(FabricError::LinkFailed(q, r));
        }
        // A busy router keeps exactly its reserved pair ON.
        if let Some(res) = self.reservations.iter().find(|res| res.router == r) {
            let reserved = res.qubits.contains(&q);
            if reserved != (pos == SwitchState::On) {
                return Err(FabricError::ReservationViolation(q, r));
            }
        }
        self.put_switch(q, r, pos);
        Ok(())
    }

    /// Reserves router `r` for the pair `(q1, q2)` over `[clock, clock + duration)`.
    pub fn reserve_pair(
        &mut self,
        q1: QubitId,
        q2: QubitId,
        r: RouterId,
        gate_id: usize,
        duration: Nanos,
    ) -> Result<Reservation, FabricError> {
        let i1 = self.link(q1, r)?;
        let i2 = self.link(q2, r)?;
        if q1 == q2 {
            return Err(FabricError::SameQubit(q1));
        }
        if self.routers[r.0] != RouterMode::Active {
            return Err(FabricError::RouterNotActive(r));
        }
        for q in [q1, q2] {
            if self
                .reservations
                .iter()
                .any(|res| res.router == r && res.qubits.contains(&q))
            {
                return Err(FabricError::QubitBusyOnRouter(q, r));
            }
        }
        if self.is_router_busy(r) {
            return Err(FabricError::RouterBusy(r));
        }
        if self.dead_links[i1] {
            return Err(FabricError::LinkFailed(q1, r));
        }
        if self.dead_links[i2] {
            return Err(FabricError::LinkFailed(q2, r));
        }

        for q in self.topology.qubits() {
            if q != q1 && q != q2 {
                self.put_switch(q, r, SwitchState::Off);
            }
        }
        self.put_switch(q1, r, SwitchState::On);
        self.put_switch(q2, r, SwitchState::On);

        let res = Reservation {
            id: self.next_reservation,
            router: r,
            qubits: [q1, q2],
            gate_id,
            start: self.clock,
            end: self.clock + duration,
        };
        self.next_reservation += 1;
        self.record(
            EventKind::Reserve,
            vec![q1.to_string(), q2.to_string(), r.to_string()],
            Some(gate_id),
        );
        self.reservations.push(res.clone());
        Ok(res)
    }

    /// Ends a reservation and returns its two switches to OFF.
    pub fn release(&mut self, res: &Reservation) -> Result<(), FabricError> {
        let pos = self
            .reservations
            .iter()
            .position(|r| r.id == res.id)
            .ok_or(FabricError::UnknownReservation(res.id))?;
        let res = self.reservations.remove(pos);
        for q in res.qubits {
            self.put_switch(q, res.router, SwitchState::Off);
        }
        self.record(
            EventKind::Release,
            vec![
                res.qubits[0].to_string(),
                res.qubits[1].to_string(),
                res.router.to_string(),
            ],
            Some(res.gate_id),
        );
        Ok(())
    }

    /// Drops every reservation of the aborted gates, sibling reservations
    /// on healthy routers included: gates execute atomically.
    fn abort_gates(&mut self, gate_ids: &[usize]) {
        let (dropped, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.reservations)
            .into_iter()
            .partition(|res| gate_ids.contains(&res.gate_id));
        self.reservations = kept;
        for res in dropped {
            for q in res.qubits {
                if !self.dead_links[self.topology.link_index(q, res.router).expect("link")]
                    && self.routers[res.router.0] != RouterMode::Failed
                {
                    self.put_switch(q, res.router, SwitchState::Off);
                }
            }
        }
        for &g in gate_ids {
            self.record(EventKind::Abort, Vec::new(), Some(g));
        }
    }

    fn kill_router(&mut self, r: RouterId) -> Vec<usize> {
        self.routers[r.0] = RouterMode::Failed;
        for q in self.topology.qubits() {
            let i = self.topology.link_index(q, r).expect("link");
            self.switches[i] = SwitchState::Off;
        }
        let mut aborted: Vec<usize> = self
            .reservations
            .iter()
            .filter(|res| res.router == r)
            .map(|res| res.gate_id)
            .collect();
        aborted.dedup();
        self.abort_gates(&aborted);
        aborted
    }

    /// Applies one failure at `max(clock, ev.at)` and returns the gate ids
    /// whose in-flight reservations were aborted. Repeated failures of an
    /// already failed target are no-ops.
    pub fn apply_failure(&mut self, ev: &FailureEvent) -> Vec<usize> {
        self.advance_to(ev.at);
        match ev.target {
            FailureTarget::Router(r) => {
                if !self.topology.has_router(r) || self.routers[r.0] == RouterMode::Failed {
                    return Vec::new();
                }
                self.record(EventKind::Failure, vec![r.to_string()], None);
                self.kill_router(r)
            }
            FailureTarget::Link(q, r) => {
                let Some(i) = self.topology.link_index(q, r) else {
                    return Vec::new();
                };
                if self.dead_links[i] {
                    return Vec::new();
                }
                self.record(EventKind::Failure, vec![q.to_string(), r.to_string()], None);
                self.dead_links[i] = true;
                self.switches[i] = SwitchState::Off;
                let mut aborted: Vec<usize> = self
                    .reservations
                    .iter()
                    .filter(|res| res.router == r && res.qubits.contains(&q))
                    .map(|res| res.gate_id)
                    .collect();
                aborted.dedup();
                self.abort_gates(&aborted);
                aborted
            }
        }
    }

    /// Takes a router that lost a link out of service, as if the whole
    /// router had failed. Returns aborted gate ids.
    pub fn retire_router(&mut self, r: RouterId) -> Vec<usize> {
        if self.routers[r.0] == RouterMode::Failed {
            return Vec::new();
        }
        self.record(EventKind::Retire, vec![r.to_string()], None);
        self.kill_router(r)
    }

    /// Activates the lowest-indexed dormant router after the active one
    /// failed. Charges `t_signal` to the clock and returns it.
    pub fn failover(&mut self) -> Result<Nanos, FabricError> {
        if self.mode != OperatingMode::SingleActive {
            return Err(FabricError::FailoverNotApplicable);
        }
        if let Some(r) = self.active_routers().next() {
            return Err(FabricError::ActiveRouterPresent(r));
        }
        let Some(backup) = self
            .topology
            .routers()
            .find(|r| self.routers[r.0] == RouterMode::Dormant)
        else {
            self.record(EventKind::NoBackup, Vec::new(), None);
            return Err(FabricError::NoBackupAvailable);
        };
        let delay = self.timing.t_signal;
        self.clock += delay;
        self.routers[backup.0] = RouterMode::Active;
        self.record(EventKind::Failover, vec![backup.to_string()], None);
        Ok(delay)
    }

    /// Checks the state-level invariants; returns every violation found.
    pub fn check_invariants(&self) -> Result<(), Vec<String>> {
        let mut bad = Vec::new();
        for link in self.topology.links() {
            let i = self
                .topology
                .link_index(link.qubit, link.router)
                .expect("link");
            let on = self.switches[i] == SwitchState::On;
            if on && self.routers[link.router.0] != RouterMode::Active {
                bad.push(format!("switch {link} ON toward non-active router"));
            }
            if on && self.dead_links[i] {
                bad.push(format!("failed link {link} is ON"));
            }
        }
        for (i, res) in self.reservations.iter().enumerate() {
            if self.reservations[..i]
                .iter()
                .any(|o| o.router == res.router)
            {
                bad.push(format!("router {} carries two reservations", res.router));
            }
            if self.routers[res.router.0] != RouterMode::Active {
                bad.push(format!(
                    "reservation {} on non-active router {}",
                    res.id, res.router
                ));
            }
            for q in res.qubits {
                if self.switch(q, res.router) != Some(SwitchState::On) {
                    bad.push(format!("reserved switch {q}{} is OFF", res.router));
                }
            }
        }
        if self.mode == OperatingMode::SingleActive && self.active_routers().count() > 1 {
            bad.push("more than one active router in single-active mode".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }
}
