#![allow(dead_code)]

use proptest::prelude::*;
use starfabric::circuit::{Circuit, Gate, GateKind};

pub fn one_qubit_kind() -> impl Strategy<Value = GateKind> {
    prop_oneof![
        Just(GateKind::H),
        Just(GateKind::X),
        Just(GateKind::Z),
        Just(GateKind::S),
        Just(GateKind::T),
    ]
}

pub fn any_kind(max_arity: usize) -> BoxedStrategy<GateKind> {
    let one = one_qubit_kind().boxed();
    let two = prop_oneof![Just(GateKind::Cz), Just(GateKind::Swap)].boxed();
    let three =
        prop_oneof![
            Just(GateKind::Cczs),
            (-3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2)
                .prop_map(|(theta, phi, gamma)| GateKind::Czs { theta, phi, gamma }),
        ]
        .boxed();
    match max_arity {
        1 => one,
        2 => prop_oneof![one, two].boxed(),
        _ => prop_oneof![2 => one, 2 => two, 1 => three].boxed(),
    }
}

/// `k` distinct qubits out of `n`, in random order.
pub fn operands(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(move |v| v[..k].to_vec())
}

pub fn gate_in(n: usize, max_arity: usize) -> impl Strategy<Value = (GateKind, Vec<usize>)> {
    any_kind(max_arity.min(n))
        .prop_flat_map(move |kind| operands(n, kind.arity()).prop_map(move |qs| (kind, qs)))
}

pub fn circuit_on(
    n: usize,
    max_arity: usize,
    len: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(gate_in(n, max_arity), len).prop_map(move |ops| {
        let gates = ops
            .into_iter()
            .enumerate()
            .map(|(i, (k, qs))| Gate::new(i, k, &qs))
            .collect();
        Circuit::new(n, gates).expect("generated circuit is valid")
    })
}

/// Circuit over 2..=max_n qubits.
pub fn circuit(
    max_n: usize,
    max_arity: usize,
    len: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Circuit> {
    (2..=max_n).prop_flat_map(move |n| circuit_on(n, max_arity, len.clone()))
}
