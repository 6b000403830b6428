mod common;

use proptest::prelude::*;
use starfabric::circuit::builtin;
use starfabric::fabric::{OperatingMode, Timing};
use starfabric::scheduler::{
    depth_ratio, optimal_depth_bruteforce, schedule, validate_schedule, Violation,
};
use starfabric::topology::Topology;

fn mode() -> impl Strategy<Value = OperatingMode> {
    prop_oneof![
        Just(OperatingMode::SingleActive),
        Just(OperatingMode::AllActive)
    ]
}

#[test]
fn ladder_depths() {
    let c = builtin::disjoint_ladder(100);
    let star = Topology::new(4, 1).unwrap();
    let double = Topology::new(4, 2).unwrap();
    let t = Timing::default();
    assert_eq!(
        schedule(&c, &star, OperatingMode::AllActive, &t)
            .unwrap()
            .depth,
        100
    );
    assert_eq!(
        schedule(&c, &double, OperatingMode::AllActive, &t)
            .unwrap()
            .depth,
        50
    );
    assert_eq!(
        schedule(&c, &double, OperatingMode::SingleActive, &t)
            .unwrap()
            .depth,
        100
    );
    assert_eq!(depth_ratio(&c, &star, &double).unwrap(), 2.0);
}

#[test]
fn validator_catches_tampering() {
    let c = builtin::disjoint_ladder(4);
    let t = Topology::new(4, 2).unwrap();
    let mut s = schedule(&c, &t, OperatingMode::AllActive, &Timing::default()).unwrap();
    assert_eq!(validate_schedule(&s, &c, &t), Ok(()));
    let g = s.layers[0][1].clone();
    s.layers[0][1].routers = s.layers[0][0].routers.clone();
    assert!(validate_schedule(&s, &c, &t)
        .unwrap_err()
        .iter()
        .any(|v| matches!(v, Violation::RouterOverCommitted { .. })));
    s.layers[0][1] = g;
    s.layers[0].pop();
    assert!(validate_schedule(&s, &c, &t)
        .unwrap_err()
        .iter()
        .any(|v| matches!(v, Violation::MissingGate(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn schedules_validate(
        c in common::circuit(8, 3, 0..=24),
        routers in 1usize..=3,
        mode in mode(),
    ) {
        let t = Topology::new(c.n_qubits(), routers).unwrap();
        match schedule(&c, &t, mode, &Timing::default()) {
            Ok(s) => {
                prop_assert_eq!(validate_schedule(&s, &c, &t), Ok(()));
                prop_assert!(s.depth <= c.multi_qubit_count());
                prop_assert_eq!(s.len(), c.len());
            }
            Err(_) => {
                let cap = match mode {
                    OperatingMode::SingleActive => 1,
                    OperatingMode::AllActive => routers,
                };
                prop_assert!(c.gates().iter().any(|g| g.kind.router_demand() > cap));
            }
        }
    }

    #[test]
    fn greedy_within_twice_optimal(
        c in common::circuit(6, 3, 1..=10),
        routers in 1usize..=3,
        mode in mode(),
    ) {
        let t = Topology::new(c.n_qubits(), routers).unwrap();
        if let Ok(s) = schedule(&c, &t, mode, &Timing::default()) {
            let opt = optimal_depth_bruteforce(&c, &t, mode).unwrap();
            prop_assert!(opt <= s.depth, "optimum {} above greedy {}", opt, s.depth);
            prop_assert!(s.depth <= 2 * opt, "greedy {} vs optimum {}", s.depth, opt);
        }
    }

    #[test]
    fn more_routers_never_deepen(c in common::circuit(8, 2, 0..=24)) {
        let t = Timing::default();
        let depths: Vec<usize> = (1..=3)
            .map(|r| {
                let top = Topology::new(c.n_qubits(), r).unwrap();
                schedule(&c, &top, OperatingMode::AllActive, &t).unwrap().depth
            })
            .collect();
        prop_assert!(depths[1] <= depths[0] && depths[2] <= depths[1], "{:?}", depths);
    }
}
