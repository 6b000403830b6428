//! Static fabric description: qubits, routers and the complete set of
//! qubit-router links of a star / double-star / multi-star processor.
//!
//! Also hosts the pair and double-pair combinatorics used to reason about
//! which two-qubit interactions can run side by side.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 0-based qubit index. Rendered 1-based (`Q1`, `Q2`, ...) for humans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QubitId(pub usize);

/// 0-based router index. Rendered 1-based (`R1`, `R2`, ...) for humans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RouterId(pub usize);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0 + 1)
    }
}

impl fmt::Display for RouterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0 + 1)
    }
}

/// A qubit-router link. Each link carries exactly one ON-OFF switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub qubit: QubitId,
    pub router: RouterId,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.qubit, self.router)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("a fabric needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("a fabric needs at least 1 router, got {0}")]
    NoRouter(usize),
    #[error("a qubit pair needs two distinct qubits, got {0} twice")]
    DegeneratePair(QubitId),
    #[error("double-pair members must differ, got {0} twice")]
    IdenticalPairs(QubitPair),
}

/// Complete multi-star fabric: every qubit has a link to every router.
///
/// One router is the star of the original design, two routers the
/// double-star, three the triple-star and so on. Partial stars are not
/// representable; a lost link is failure state and lives in the fabric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    n_qubits: usize,
    n_routers: usize,
}

impl Topology {
    pub fn new(n_qubits: usize, n_routers: usize) -> Result<Self, TopologyError> {
        if n_qubits < 2 {
            return Err(TopologyError::TooFewQubits(n_qubits));
        }
        if n_routers < 1 {
            return Err(TopologyError::NoRouter(n_routers));
        }
        Ok(Self {
            n_qubits,
            n_routers,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_routers(&self) -> usize {
        self.n_routers
    }

    pub fn qubits(&self) -> impl Iterator<Item = QubitId> {
        (0..self.n_qubits).map(QubitId)
    }

    pub fn routers(&self) -> impl Iterator<Item = RouterId> {
        (0..self.n_routers).map(RouterId)
    }

    /// All links, qubit-major.
    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.qubits()
            .flat_map(move |qubit| self.routers().map(move |router| Link { qubit, router }))
    }

    pub fn n_links(&self) -> usize {
        self.n_qubits * self.n_routers
    }

    pub fn has_qubit(&self, q: QubitId) -> bool {
        q.0 < self.n_qubits
    }

    pub fn has_router(&self, r: RouterId) -> bool {
        r.0 < self.n_routers
    }

    pub fn has_link(&self, q: QubitId, r: RouterId) -> bool {
        self.has_qubit(q) && self.has_router(r)
    }

    /// Dense index of a link, matching the order of [`Topology::links`].
    pub fn link_index(&self, q: QubitId, r: RouterId) -> Option<usize> {
        self.has_link(q, r).then(|| q.0 * self.n_routers + r.0)
    }

    /// Every unordered qubit pair, lexicographically.
    pub fn qubit_pairs(&self) -> Vec<QubitPair> {
        qubit_pairs(self.n_qubits)
    }
}

/// `build_topology` under its operational name.
pub fn build_topology(n_qubits: usize, n_routers: usize) -> Result<Topology, TopologyError> {
    Topology::new(n_qubits, n_routers)
}

/// Unordered pair of distinct qubits, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QubitPair {
    lo: QubitId,
    hi: QubitId,
}

impl QubitPair {
    pub fn new(a: QubitId, b: QubitId) -> Result<Self, TopologyError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Self { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Ok(Self { lo: b, hi: a }),
            std::cmp::Ordering::Equal => Err(TopologyError::DegeneratePair(a)),
        }
    }

    pub fn lo(&self) -> QubitId {
        self.lo
    }

    pub fn hi(&self) -> QubitId {
        self.hi
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.lo == q || self.hi == q
    }
}

impl fmt::Display for QubitPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.lo, self.hi)
    }
}

/// How two distinct qubit pairs relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairClass {
    /// Four distinct qubits: two independent interactions.
    Disjoint,
    /// Exactly one common qubit, the candidate control of a three-qubit gate.
    SharedQubit(QubitId),
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairClass::Disjoint => f.write_str("disjoint"),
            PairClass::SharedQubit(q) => write!(f, "shared({q})"),
        }
    }
}

/// All C(n,2) unordered pairs over `n` qubits in lexicographic order.
pub fn qubit_pairs(n_qubits: usize) -> Vec<QubitPair> {
    let mut pairs = Vec::with_capacity(n_qubits * n_qubits.saturating_sub(1) / 2);
    for a in 0..n_qubits {
        for b in a + 1..n_qubits {
            pairs.push(QubitPair {
                lo: QubitId(a),
                hi: QubitId(b),
            });
        }
    }
    pairs
}

pub fn classify_double_pair(p1: QubitPair, p2: QubitPair) -> Result<PairClass, TopologyError> {
    if p1 == p2 {
        return Err(TopologyError::IdenticalPairs(p1));
    }
    // Distinct unordered pairs share at most one qubit.
    let shared = [p1.lo, p1.hi].into_iter().find(|q| p2.contains(*q));
    Ok(match shared {
        Some(q) => PairClass::SharedQubit(q),
        None => PairClass::Disjoint,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoublePair {
    pub first: QubitPair,
    pub second: QubitPair,
    pub class: PairClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoublePairCensus {
    pub n_qubits: usize,
    pub pairs: usize,
    pub total: usize,
    pub disjoint: usize,
    pub shared: usize,
    pub list: Vec<DoublePair>,
}

/// Every unordered pair of distinct qubit pairs, classified.
///
/// The list is ordered by the lexicographic index of its first pair, then
/// its second.
pub fn enumerate_double_pairs(n_qubits: usize) -> DoublePairCensus {
    let pairs = qubit_pairs(n_qubits);
    let mut list = Vec::with_capacity(pairs.len() * pairs.len().saturating_sub(1) / 2);
    let (mut disjoint, mut shared) = (0, 0);
    for (i, &first) in pairs.iter().enumerate() {
        for &second in &pairs[i + 1..] {
            let class = classify_double_pair(first, second).expect("pairs are distinct");
            match class {
                PairClass::Disjoint => disjoint += 1,
                PairClass::SharedQubit(_) => shared += 1,
            }
            list.push(DoublePair {
                first,
                second,
                class,
            });
        }
    }
    DoublePairCensus {
        n_qubits,
        pairs: pairs.len(),
        total: list.len(),
        disjoint,
        shared,
        list,
    }
}
