#![allow(dead_code)]

pub mod props;

use cptfit_core::generate::{random_network, GenConfig};
use cptfit_core::{Constraint, NetworkSpec, VarId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Diamond A -> {B, C} -> D with P(A=1) = 0.4 and P(D=0 | B=1, C=1) = 0.9.
pub fn diamond() -> NetworkSpec {
    NetworkSpec::builder()
        .node("A", 2, &[], vec![0.6, 0.4])
        .node("B", 2, &["A"], vec![0.6, 0.4, 0.3, 0.7])
        .node("C", 2, &["A"], vec![0.7, 0.3, 0.4, 0.6])
        .node(
            "D",
            2,
            &["B", "C"],
            vec![0.8, 0.2, 0.5, 0.5, 0.4, 0.6, 0.9, 0.1],
        )
        .build()
        .unwrap()
}

/// Target over (A, D), state 0 first.
pub fn diamond_ad(net: &NetworkSpec) -> Constraint {
    Constraint::new(
        net,
        vec![VarId(0), VarId(3)],
        vec![0.4686, 0.1314, 0.2132, 0.1868],
    )
    .unwrap()
}

/// Targets on B and C, state 0 first.
pub fn diamond_bc(net: &NetworkSpec) -> Vec<Constraint> {
    vec![
        Constraint::new(net, vec![VarId(1)], vec![0.39, 0.61]).unwrap(),
        Constraint::new(net, vec![VarId(2)], vec![0.17, 0.83]).unwrap(),
    ]
}

pub fn chain() -> NetworkSpec {
    NetworkSpec::builder()
        .node("A", 2, &[], vec![0.5, 0.5])
        .node("B", 2, &["A"], vec![0.8, 0.2, 0.2, 0.8])
        .build()
        .unwrap()
}

pub fn random_net(nodes: usize, cardinality: usize, seed: u64) -> NetworkSpec {
    let config = GenConfig {
        nodes,
        cardinality,
        ..GenConfig::default()
    };
    random_network(&config, &mut ChaCha8Rng::seed_from_u64(seed))
}
