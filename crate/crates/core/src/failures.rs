//! Failure events: a homogeneous Poisson arrival process with uniform
//! targets, or a fixed script for fault-injection runs.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Link, QubitId, RouterId, Topology};
use crate::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureTarget {
    /// The whole router is lost.
    Router(RouterId),
    /// A single qubit-router link (its switch) is lost.
    Link(QubitId, RouterId),
}

impl FailureTarget {
    pub fn router(&self) -> RouterId {
        match *self {
            FailureTarget::Router(r) | FailureTarget::Link(_, r) => r,
        }
    }
}

impl fmt::Display for FailureTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FailureTarget::Router(r) => write!(f, "{r}"),
            FailureTarget::Link(q, r) => write!(
                f,
                "{}",
                Link {
                    qubit: q,
                    router: r
                }
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub at: Nanos,
    pub target: FailureTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetPolicy {
    UniformRouter,
    UniformLink,
    Fixed(Vec<FailureEvent>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureModel {
    /// Events per ns.
    pub rate: f64,
    /// Events are drawn on `[0, horizon)`.
    pub horizon: Nanos,
    pub policy: TargetPolicy,
}

impl Default for FailureModel {
    fn default() -> Self {
        Self {
            rate: 0.0,
            horizon: 0.0,
            policy: TargetPolicy::UniformRouter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FailureError {
    #[error("failure rate must be finite and >= 0, got {0}")]
    BadRate(f64),
    #[error("failure horizon must be finite and >= 0, got {0}")]
    BadHorizon(f64),
    #[error("fixed failure at {at} ns has a negative or non-finite time")]
    BadTime { at: Nanos },
    #[error("fixed failures are not time-sorted at index {0}")]
    Unsorted(usize),
    #[error("fixed failure targets {0}, which is not part of the fabric")]
    UnknownTarget(FailureTarget),
}

impl FailureModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn fixed(events: Vec<FailureEvent>) -> Self {
        Self {
            rate: 0.0,
            horizon: 0.0,
            policy: TargetPolicy::Fixed(events),
        }
    }

    pub fn validate(&self, topology: &Topology) -> Result<(), FailureError> {
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(FailureError::BadRate(self.rate));
        }
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(FailureError::BadHorizon(self.horizon));
        }
        if let TargetPolicy::Fixed(events) = &self.policy {
            for (i, ev) in events.iter().enumerate() {
                if !ev.at.is_finite() || ev.at < 0.0 {
                    return Err(FailureError::BadTime { at: ev.at });
                }
                if i > 0 && events[i - 1].at > ev.at {
                    return Err(FailureError::Unsorted(i));
                }
                let exists = match ev.target {
                    FailureTarget::Router(r) => topology.has_router(r),
                    FailureTarget::Link(q, r) => topology.has_link(q, r),
                };
                if !exists {
                    return Err(FailureError::UnknownTarget(ev.target));
                }
            }
        }
        Ok(())
    }
}

/// Draws the failure events of one run.
///
/// `Fixed` scripts are returned verbatim without touching `rng`.
pub fn sample_failures<R: Rng + ?Sized>(
    model: &FailureModel,
    topology: &Topology,
    rng: &mut R,
) -> Vec<FailureEvent> {
    if let TargetPolicy::Fixed(events) = &model.policy {
        return events.clone();
    }
    if model.rate <= 0.0 || model.horizon <= 0.0 {
        return Vec::new();
    }
    let gap = Exp::new(model.rate).expect("rate validated positive");
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t >= model.horizon {
            break;
        }
        let target = match model.policy {
            TargetPolicy::UniformRouter => {
                FailureTarget::Router(RouterId(rng.random_range(0..topology.n_routers())))
            }
            TargetPolicy::UniformLink => {
                let i = rng.random_range(0..topology.n_links());
                FailureTarget::Link(
                    QubitId(i / topology.n_routers()),
                    RouterId(i % topology.n_routers()),
                )
            }
            TargetPolicy::Fixed(_) => unreachable!(),
        };
        events.push(FailureEvent { at: t, target });
    }
    events
}

/// Half-open execution window `[start, end)` of one gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateWindow {
    pub gate_id: usize,
    pub start: Nanos,
    pub end: Nanos,
}

impl GateWindow {
    /// Whether a failure at `at` prevents this gate from completing. A
    /// failure at `start` wins the tie and the gate never starts; a failure
    /// at `end` arrives after completion.
    pub fn is_hit_at(&self, at: Nanos) -> bool {
        self.start <= at && at < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimelineEvent {
    GateEnd { gate_id: usize, at: Nanos },
    Failure(FailureEvent),
    GateStart { gate_id: usize, at: Nanos },
}

impl TimelineEvent {
    pub fn at(&self) -> Nanos {
        match *self {
            TimelineEvent::GateEnd { at, .. } | TimelineEvent::GateStart { at, .. } => at,
            TimelineEvent::Failure(ev) => ev.at,
        }
    }

    /// Rank among simultaneous events: completions, then failures, then starts.
    pub fn tie_rank(&self) -> u8 {
        match self {
            TimelineEvent::GateEnd { .. } => 0,
            TimelineEvent::Failure(_) => 1,
            TimelineEvent::GateStart { .. } => 2,
        }
    }

    pub fn order(&self, other: &Self) -> Ordering {
        self.at()
            .total_cmp(&other.at())
            .then(self.tie_rank().cmp(&other.tie_rank()))
    }
}

/// Interleaves failures with gate start/end events in global time order.
/// Equal-time events of the same kind keep their input order.
pub fn merge_into_timeline(
    failures: &[FailureEvent],
    windows: &[GateWindow],
) -> Vec<TimelineEvent> {
    let mut out: Vec<TimelineEvent> = Vec::with_capacity(failures.len() + 2 * windows.len());
    for w in windows {
        out.push(TimelineEvent::GateStart {
            gate_id: w.gate_id,
            at: w.start,
        });
        out.push(TimelineEvent::GateEnd {
            gate_id: w.gate_id,
            at: w.end,
        });
    }
    out.extend(failures.iter().copied().map(TimelineEvent::Failure));
    out.sort_by(|a, b| a.order(b));
    out
}
