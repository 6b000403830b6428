//! Simulator and scheduler for modular qubit fabrics in which qubits couple
//! through central routers: the single star, the double star with a backup
//! router, and multi-star generalizations.
//!
//! - [`topology`]: static fabric and pair / double-pair combinatorics.
//! - [`fabric`]: switch and router state machine with the failover protocol.
//! - [`failures`]: Poisson and scripted failure events.
//! - [`circuit`] and [`scheduler`]: gates, circuits and layered scheduling.
//! - [`qsim`]: state-vector backend, fidelity model and the run engine.
//! - [`harness`]: scenario files, Monte Carlo trials and reports.

pub mod circuit;
pub mod fabric;
pub mod failures;
pub mod harness;
pub mod qsim;
pub mod rng;
pub mod scheduler;
pub mod topology;

/// Simulated time in nanoseconds.
pub type Nanos = f64;
