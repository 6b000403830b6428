use std::collections::BTreeSet;

use proptest::prelude::*;
use starfabric::topology::{
    classify_double_pair, enumerate_double_pairs, qubit_pairs, PairClass, QubitId, QubitPair,
    Topology,
};

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Classifies by counting the distinct qubits of the union.
fn brute_force(n: usize) -> (usize, usize, usize) {
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a < b {
                pairs.push([a, b]);
            }
        }
    }
    let (mut total, mut disjoint, mut shared) = (0, 0, 0);
    for i in 0..pairs.len() {
        for j in 0..pairs.len() {
            if i >= j {
                continue;
            }
            total += 1;
            let union: BTreeSet<usize> = pairs[i].iter().chain(&pairs[j]).copied().collect();
            match union.len() {
                4 => disjoint += 1,
                3 => shared += 1,
                k => panic!("distinct pairs cannot span {k} qubits"),
            }
        }
    }
    (total, disjoint, shared)
}

#[test]
fn four_qubits() {
    let c = enumerate_double_pairs(4);
    assert_eq!((c.pairs, c.total, c.disjoint, c.shared), (6, 15, 3, 12));
    assert_eq!(c.list.len(), 15);
}

#[test]
fn counts_match_brute_force_and_closed_forms() {
    for n in 2..=8 {
        let c = enumerate_double_pairs(n);
        assert_eq!((c.total, c.disjoint, c.shared), brute_force(n), "n={n}");
        assert_eq!(c.pairs, binom(n, 2));
        assert_eq!(c.total, binom(binom(n, 2), 2));
        assert_eq!(c.disjoint, 3 * binom(n, 4));
        assert_eq!(c.shared, c.total - c.disjoint);
    }
}

#[test]
fn list_is_ordered_and_unique() {
    let c = enumerate_double_pairs(6);
    let seen: BTreeSet<(QubitPair, QubitPair)> =
        c.list.iter().map(|d| (d.first, d.second)).collect();
    assert_eq!(seen.len(), c.total);
    for d in &c.list {
        assert!(d.first < d.second);
    }
}

#[test]
fn topology_pairs_agree() {
    let t = Topology::new(5, 3).unwrap();
    assert_eq!(t.qubit_pairs(), qubit_pairs(5));
    assert_eq!(t.n_links(), 15);
}

fn pair(n: usize) -> impl Strategy<Value = QubitPair> {
    (0..n, 0..n)
        .prop_filter("distinct", |(a, b)| a != b)
        .prop_map(|(a, b)| QubitPair::new(QubitId(a), QubitId(b)).unwrap())
}

proptest! {
    #[test]
    fn classify_is_symmetric((a, b) in (3usize..=8).prop_flat_map(|n| (pair(n), pair(n)))) {
        if a == b {
            prop_assert!(classify_double_pair(a, b).is_err());
        } else {
            let ab = classify_double_pair(a, b).unwrap();
            prop_assert_eq!(ab, classify_double_pair(b, a).unwrap());
            match ab {
                PairClass::SharedQubit(q) => prop_assert!(a.contains(q) && b.contains(q)),
                PairClass::Disjoint => prop_assert!(!a.contains(b.lo()) && !a.contains(b.hi())),
            }
        }
    }

    #[test]
    fn pair_order_does_not_matter(a in 0usize..8, b in 0usize..8) {
        prop_assume!(a != b);
        prop_assert_eq!(
            QubitPair::new(QubitId(a), QubitId(b)).unwrap(),
            QubitPair::new(QubitId(b), QubitId(a)).unwrap()
        );
    }
}
