//! Exact state-vector backend.
//!
//! Qubit 0 is the least-significant bit of an amplitude index. Gate
//! matrices act on their operands in operand order with the first operand
//! as the most-significant bit of the local index, so a CCZS matrix reads
//! `|control target1 target2⟩`.

mod run;

pub use run::{run, IncompleteReason, Outcome, RunError, RunResult};

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Gate, GateKind};
use crate::scheduler::Schedule;
use crate::topology::QubitId;

pub const MAX_QUBITS: usize = 20;
/// Amplitudes below this magnitude are dropped from text dumps.
pub const DUMP_EPS: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsimError {
    #[error("state vectors are capped at {MAX_QUBITS} qubits, asked for {0}")]
    TooManyQubits(usize),
    #[error("{0} is outside a {1}-qubit register")]
    OperandOutOfRange(QubitId, usize),
    #[error("{0} appears twice among the operands")]
    DuplicateOperand(QubitId),
    #[error("{kind} acts on {expected} qubits, got {got}")]
    Arity {
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("expected {expected} amplitudes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("fidelity for {0} must lie in (0, 1], got {1}")]
    BadFidelity(&'static str, f64),
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl GateMatrix {
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn from_real(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self {
            dim,
            data: rows
                .iter()
                .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
                .collect(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self {
            dim,
            data: vec![ZERO; dim * dim],
        };
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::identity(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * m.dim + i] = e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn matmul(&self, rhs: &GateMatrix) -> GateMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        GateMatrix { dim: n, data: out }
    }

    pub fn adjoint(&self) -> GateMatrix {
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.data[i * n + j].conj();
            }
        }
        GateMatrix { dim: n, data: out }
    }

    /// Largest elementwise deviation of U†U from I.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().matmul(self);
        let id = GateMatrix::identity(self.dim);
        p.max_abs_diff(&id)
    }

    pub fn max_abs_diff(&self, other: &GateMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `dim/2 × dim/2` block with the leading operand fixed to `c`.
    pub fn control_block(&self, c: usize) -> GateMatrix {
        let half = self.dim / 2;
        let mut out = GateMatrix::identity(half);
        for i in 0..half {
            for j in 0..half {
                out.set(i, j, self.get(c * half + i, c * half + j));
            }
        }
        out
    }

    /// Identity on the leading-operand-0 half, `block` on the 1 half.
    pub fn controlled(block: &GateMatrix) -> GateMatrix {
        let half = block.dim;
        let mut out = GateMatrix::identity(2 * half);
        for i in 0..half {
            for j in 0..half {
                out.set(half + i, half + j, block.get(i, j));
            }
        }
        out
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cz_matrix() -> GateMatrix {
    GateMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 0.0, 0.0, -1.0],
    ])
}

pub fn swap_matrix() -> GateMatrix {
    GateMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

/// Controlled (CZ·SWAP): identity when the control is 0, CZ and SWAP on
/// the targets when it is 1. CZ and SWAP commute, so the product order is
/// immaterial.
pub fn cczs_matrix() -> GateMatrix {
    GateMatrix::controlled(&cz_matrix().matmul(&swap_matrix()))
}

/// Controlled rotation-form CZS with control-1 block
///
/// ```text
/// [ 1  0                 0                 0        ]
/// [ 0  cos(θ/2)         -e^{iφ} sin(θ/2)   0        ]
/// [ 0  e^{-iφ} sin(θ/2)  cos(θ/2)          0        ]
/// [ 0  0                 0                -e^{iγ}   ]
/// ```
///
/// At θ = π this equals the CCZS block only up to local phases.
pub fn czs_matrix(theta: f64, phi: f64, gamma: f64) -> GateMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    let block = GateMatrix::from_rows(&[
        &[ONE, ZERO, ZERO, ZERO],
        &[ZERO, c(co, 0.0), -Complex64::from_polar(s, phi), ZERO],
        &[ZERO, Complex64::from_polar(s, -phi), c(co, 0.0), ZERO],
        &[ZERO, ZERO, ZERO, -Complex64::from_polar(1.0, gamma)],
    ]);
    GateMatrix::controlled(&block)
}

pub fn gate_matrix(kind: &GateKind) -> GateMatrix {
    let h = FRAC_1_SQRT_2;
    match *kind {
        GateKind::H => GateMatrix::from_real(&[&[h, h], &[h, -h]]),
        GateKind::X => GateMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]),
        GateKind::Z => GateMatrix::diag(&[ONE, c(-1.0, 0.0)]),
        GateKind::S => GateMatrix::diag(&[ONE, c(0.0, 1.0)]),
        GateKind::T => GateMatrix::diag(&[ONE, Complex64::from_polar(1.0, FRAC_PI_4)]),
        GateKind::Cz => cz_matrix(),
        GateKind::Swap => swap_matrix(),
        GateKind::Cczs => cczs_matrix(),
        GateKind::Czs { theta, phi, gamma } => czs_matrix(theta, phi, gamma),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self, QsimError> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, QsimError> {
        if n_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits(n_qubits));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, QsimError> {
        if n_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits(n_qubits));
        }
        if amps.len() != 1 << n_qubits {
            return Err(QsimError::Length {
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_operands(&self, qubits: &[QubitId]) -> Result<(), QsimError> {
        for (i, q) in qubits.iter().enumerate() {
            if q.0 >= self.n_qubits {
                return Err(QsimError::OperandOutOfRange(*q, self.n_qubits));
            }
            if qubits[..i].contains(q) {
                return Err(QsimError::DuplicateOperand(*q));
            }
        }
        Ok(())
    }

    /// Applies `m` to `qubits` (first operand = most-significant local bit).
    pub fn apply_matrix(&mut self, m: &GateMatrix, qubits: &[QubitId]) -> Result<(), QsimError> {
        self.check_operands(qubits)?;
        let k = qubits.len();
        if m.dim() != 1 << k {
            return Err(QsimError::Arity {
                kind: format!("{0}x{0} matrix", m.dim()),
                expected: m.dim().trailing_zeros() as usize,
                got: k,
            });
        }
        let mask: usize = qubits.iter().map(|q| 1 << q.0).sum();
        // Global offset of each local basis index.
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|local| {
                (0..k)
                    .filter(|&b| local >> (k - 1 - b) & 1 == 1)
                    .map(|b| 1 << qubits[b].0)
                    .sum()
            })
            .collect();
        let mut gathered = vec![ZERO; 1 << k];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (slot, off) in gathered.iter_mut().zip(&offsets) {
                *slot = self.amps[base | off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (col, v) in gathered.iter().enumerate() {
                    acc += m.get(row, col) * v;
                }
                self.amps[base | off] = acc;
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), QsimError> {
        if gate.qubits.len() != gate.kind.arity() {
            return Err(QsimError::Arity {
                kind: gate.kind.to_string(),
                expected: gate.kind.arity(),
                got: gate.qubits.len(),
            });
        }
        self.apply_matrix(&gate_matrix(&gate.kind), &gate.qubits)
    }

    /// One line per amplitude above [`DUMP_EPS`]: `bitstring re im`, where
    /// the bitstring lists Q1..Qn left to right.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() < DUMP_EPS {
                continue;
            }
            let bits: String = (0..self.n_qubits)
                .map(|q| if i >> q & 1 == 1 { '1' } else { '0' })
                .collect();
            out.push_str(&format!("{bits} {:.15e} {:.15e}\n", a.re, a.im));
        }
        out
    }
}

/// Per-gate-kind success fidelities for the multiplicative noise model.
/// Single-qubit gates are treated as perfect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelityModel {
    pub cz: f64,
    pub swap: f64,
    /// Applies to both CCZS and the parametrized CZS.
    pub cczs: f64,
}

pub const DEFAULT_CZ_FIDELITY: f64 = 0.96;

impl Default for FidelityModel {
    fn default() -> Self {
        Self {
            cz: DEFAULT_CZ_FIDELITY,
            swap: DEFAULT_CZ_FIDELITY,
            cczs: DEFAULT_CZ_FIDELITY,
        }
    }
}

impl FidelityModel {
    pub fn validate(&self) -> Result<(), QsimError> {
        for (name, v) in [("cz", self.cz), ("swap", self.swap), ("cczs", self.cczs)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(QsimError::BadFidelity(name, v));
            }
        }
        Ok(())
    }

    pub fn of(&self, kind: &GateKind) -> f64 {
        match kind {
            GateKind::Cz => self.cz,
            GateKind::Swap => self.swap,
            GateKind::Cczs | GateKind::Czs { .. } => self.cczs,
            _ => 1.0,
        }
    }
}

/// Product of per-gate fidelities over the schedule's multi-qubit gates.
/// Gates sharing a layer multiply exactly like sequential ones.
pub fn analytic_fidelity(s: &Schedule, m: &FidelityModel) -> f64 {
    s.gates()
        .filter(|sg| sg.gate.kind.is_multi_qubit())
        .map(|sg| m.of(&sg.gate.kind))
        .product()
}

/// One circuit-success draw with probability `fidelity`.
pub fn sample_success<R: Rng + ?Sized>(fidelity: f64, rng: &mut R) -> bool {
    Bernoulli::new(fidelity.clamp(0.0, 1.0))
        .expect("clamped probability")
        .sample(rng)
}
