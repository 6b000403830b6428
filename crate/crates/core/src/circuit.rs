//! Gates, circuits and the line-oriented circuit file format.
//!
//! One gate per line: `id kind q[,q,q]`, qubits 1-based (`3` or `Q3`).
//! `#` starts a comment. The parametrized three-qubit gate is written
//! `CZS(theta,phi,gamma)`. Example:
//!
//! ```text
//! 0 H 1
//! 1 CZ 1,3
//! 2 H 3
//! 3 CCZS 2,3,4   # control Q2, targets Q3 and Q4
//! ```

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::QubitId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Z,
    S,
    T,
    Cz,
    Swap,
    /// Controlled (CZ·SWAP): operands are control, target1, target2.
    Cczs,
    /// Controlled rotation-form CZS block with angles (theta, phi, gamma).
    Czs {
        theta: f64,
        phi: f64,
        gamma: f64,
    },
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::Z | GateKind::S | GateKind::T => 1,
            GateKind::Cz | GateKind::Swap => 2,
            GateKind::Cczs | GateKind::Czs { .. } => 3,
        }
    }

    /// Routers consumed while the gate runs. Three-qubit gates couple the
    /// control to each target through its own router.
    pub fn router_demand(&self) -> usize {
        self.arity() - 1
    }

    pub fn is_multi_qubit(&self) -> bool {
        self.arity() > 1
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::H => f.write_str("H"),
            GateKind::X => f.write_str("X"),
            GateKind::Z => f.write_str("Z"),
            GateKind::S => f.write_str("S"),
            GateKind::T => f.write_str("T"),
            GateKind::Cz => f.write_str("CZ"),
            GateKind::Swap => f.write_str("SWAP"),
            GateKind::Cczs => f.write_str("CCZS"),
            GateKind::Czs { theta, phi, gamma } => write!(f, "CZS({theta},{phi},{gamma})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown gate kind `{0}`")]
pub struct UnknownGateKind(pub String);

impl FromStr for GateKind {
    type Err = UnknownGateKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        let kind = match upper.as_str() {
            "H" => GateKind::H,
            "X" => GateKind::X,
            "Z" => GateKind::Z,
            "S" => GateKind::S,
            "T" => GateKind::T,
            "CZ" => GateKind::Cz,
            "SWAP" => GateKind::Swap,
            "CCZS" => GateKind::Cczs,
            _ => {
                let args = upper
                    .strip_prefix("CZS(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| UnknownGateKind(s.to_string()))?;
                let angles: Vec<f64> = args
                    .split(',')
                    .map(|a| a.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| UnknownGateKind(s.to_string()))?;
                match angles[..] {
                    [theta, phi, gamma] if angles.iter().all(|a| a.is_finite()) => {
                        GateKind::Czs { theta, phi, gamma }
                    }
                    _ => return Err(UnknownGateKind(s.to_string())),
                }
            }
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: usize,
    pub kind: GateKind,
    pub qubits: Vec<QubitId>,
}

impl Gate {
    pub fn new(id: usize, kind: GateKind, qubits: &[usize]) -> Self {
        Self {
            id,
            kind,
            qubits: qubits.iter().copied().map(QubitId).collect(),
        }
    }

    pub fn shares_qubit(&self, other: &Gate) -> bool {
        self.qubits.iter().any(|q| other.qubits.contains(q))
    }

    /// Qubit pairs coupled through routers, one per router leg:
    /// `(a, b)` for two-qubit gates, `(control, t1)` and `(control, t2)`
    /// for three-qubit gates.
    pub fn router_legs(&self) -> Vec<[QubitId; 2]> {
        match self.qubits[..] {
            [a, b] => vec![[a, b]],
            [c, t1, t2] => vec![[c, t1], [c, t2]],
            _ => Vec::new(),
        }
    }

    fn check(&self, n_qubits: usize) -> Result<(), CircuitError> {
        if self.qubits.len() != self.kind.arity() {
            return Err(CircuitError::Arity {
                gate: self.id,
                kind: self.kind.to_string(),
                expected: self.kind.arity(),
                got: self.qubits.len(),
            });
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if q.0 >= n_qubits {
                return Err(CircuitError::OperandOutOfRange {
                    gate: self.id,
                    qubit: *q,
                    n_qubits,
                });
            }
            if self.qubits[..i].contains(q) {
                return Err(CircuitError::DuplicateOperand {
                    gate: self.id,
                    qubit: *q,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind)?;
        for (i, q) in self.qubits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gate {gate}: {kind} takes {expected} qubits, got {got}")]
    Arity {
        gate: usize,
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("gate {gate}: {qubit} is outside a {n_qubits}-qubit register")]
    OperandOutOfRange {
        gate: usize,
        qubit: QubitId,
        n_qubits: usize,
    },
    #[error("gate {gate}: {qubit} appears twice")]
    DuplicateOperand { gate: usize, qubit: QubitId },
    #[error("gate id {0} is used twice")]
    DuplicateId(usize),
    #[error("gate ids must be exactly 0..{0}")]
    SparseIds(usize),
}

/// Ordered gate list over `n_qubits` qubits. Ids are unique and cover
/// `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut seen = HashSet::with_capacity(gates.len());
        for g in &gates {
            g.check(n_qubits)?;
            if !seen.insert(g.id) {
                return Err(CircuitError::DuplicateId(g.id));
            }
        }
        if gates.iter().any(|g| g.id >= gates.len()) {
            return Err(CircuitError::SparseIds(gates.len()));
        }
        Ok(Self { n_qubits, gates })
    }

    /// Builds a circuit from kinds and 0-based operands, numbering gates
    /// in order.
    pub fn from_ops(n_qubits: usize, ops: &[(GateKind, &[usize])]) -> Result<Self, CircuitError> {
        let gates = ops
            .iter()
            .enumerate()
            .map(|(id, (kind, qs))| Gate::new(id, *kind, qs))
            .collect();
        Self::new(n_qubits, gates)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: usize) -> Option<&Gate> {
        self.gates.iter().find(|g| g.id == id)
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn multi_qubit_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind.is_multi_qubit())
            .count()
    }

    pub fn parse(text: &str, n_qubits: usize) -> Result<Self, CircuitError> {
        let mut gates = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CircuitError::Parse { line: line_no, msg };
            let mut fields = line.split_whitespace();
            let (Some(id), Some(kind), Some(qubits), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(err(format!("expected `id kind q[,q,q]`, got `{line}`")));
            };
            let id: usize = id.parse().map_err(|_| err(format!("bad gate id `{id}`")))?;
            let kind: GateKind = kind
                .parse()
                .map_err(|e: UnknownGateKind| err(e.to_string()))?;
            let qubits = qubits
                .split(',')
                .map(|q| parse_qubit_label(q).ok_or_else(|| err(format!("bad qubit label `{q}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            gates.push(Gate { id, kind, qubits });
        }
        Self::new(n_qubits, gates)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            let qs: Vec<String> = g.qubits.iter().map(|q| (q.0 + 1).to_string()).collect();
            out.push_str(&format!("{} {} {}\n", g.id, g.kind, qs.join(",")));
        }
        out
    }
}

/// `3`, `Q3` or `q3` → `QubitId(2)`.
pub fn parse_qubit_label(s: &str) -> Option<QubitId> {
    let s = s.trim();
    let digits = s.strip_prefix(['Q', 'q']).unwrap_or(s);
    match digits.parse::<usize>() {
        Ok(n) if n >= 1 => Some(QubitId(n - 1)),
        _ => None,
    }
}

/// Representative workloads.
pub mod builtin {
    use super::*;

    /// H(a), H(b), CZ(a,b), H(b): (|00⟩ + |11⟩)/√2 on `(a, b)`.
    pub fn bell(n_qubits: usize, a: usize, b: usize) -> Result<Circuit, CircuitError> {
        Circuit::from_ops(
            n_qubits,
            &[
                (GateKind::H, &[a]),
                (GateKind::H, &[b]),
                (GateKind::Cz, &[a, b]),
                (GateKind::H, &[b]),
            ],
        )
    }

    /// GHZ state over every qubit via a CZ chain conjugated by Hadamards.
    pub fn ghz(n_qubits: usize) -> Result<Circuit, CircuitError> {
        let mut gates = vec![Gate::new(0, GateKind::H, &[0])];
        for q in 1..n_qubits {
            for (kind, qs) in [
                (GateKind::H, vec![q]),
                (GateKind::Cz, vec![q - 1, q]),
                (GateKind::H, vec![q]),
            ] {
                gates.push(Gate::new(gates.len(), kind, &qs));
            }
        }
        Circuit::new(n_qubits, gates)
    }

    /// `n_gates` CZs alternating between (Q1,Q4) and (Q2,Q3).
    pub fn disjoint_ladder(n_gates: usize) -> Circuit {
        let gates = (0..n_gates)
            .map(|i| {
                let qs: &[usize] = if i % 2 == 0 { &[0, 3] } else { &[1, 2] };
                Gate::new(i, GateKind::Cz, qs)
            })
            .collect();
        Circuit::new(4, gates).expect("ladder fits 4 qubits")
    }

    /// Superposition on Q2..Q4 followed by CCZS(Q2; Q3, Q4).
    pub fn cczs_demo() -> Circuit {
        Circuit::from_ops(
            4,
            &[
                (GateKind::H, &[1]),
                (GateKind::H, &[2]),
                (GateKind::X, &[3]),
                (GateKind::Cczs, &[1, 2, 3]),
            ],
        )
        .expect("demo fits 4 qubits")
    }
}
