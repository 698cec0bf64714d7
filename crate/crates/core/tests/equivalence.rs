//! LF and Bell membership agree wherever one side has at most two settings
//! or the sequential spec has at most one maverick.

use lfpoly_core::marginal::{bell_membership, lf_membership};
use lfpoly_core::random::{random_local_behavior, random_nd_behavior};
use lfpoly_core::scenario::{
    build_lf_compatibility_graph, build_sequential_scenario, LfSpec, Party, SequentialLfSpec,
};
use lfpoly_core::sequential::{lf_membership_sequential, lf_membership_sequential_direct};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 500;

fn sweep(spec: &LfSpec, seed: u64) -> (usize, usize) {
    let s = build_lf_compatibility_graph(spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut local = 0;
    for k in 0..SAMPLES {
        let b = random_nd_behavior(&mut rng, &s).unwrap();
        let bell = bell_membership(&s, &b).unwrap().feasible;
        let lf = lf_membership(spec, &b).unwrap().feasible;
        assert_eq!(bell, lf, "spec {spec:?} sample {k}");
        local += bell as usize;
    }
    (local, SAMPLES - local)
}

#[test]
fn bipartite_with_a_two_setting_side() {
    for (na, nb) in [(2, 2), (3, 2), (2, 3), (4, 2), (2, 4)] {
        let (yes, no) = sweep(&LfSpec::binary(na, nb), 100 + (na * 10 + nb) as u64);
        // both outcomes must actually occur for the comparison to mean anything
        assert!(yes > 0 && no > 0, "({na},{nb}): {yes} local, {no} nonlocal");
    }
}

fn sequential_sweep(spec: &SequentialLfSpec, seed: u64) {
    let s = build_sequential_scenario(spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut yes, mut no) = (0, 0);
    for k in 0..SAMPLES {
        let b = random_nd_behavior(&mut rng, &s).unwrap();
        let direct = lf_membership_sequential_direct(spec, &b).unwrap().feasible;
        let reduced = lf_membership_sequential(spec, &b).unwrap().feasible;
        assert_eq!(direct, reduced, "sample {k}");
        if direct {
            yes += 1;
        } else {
            no += 1;
        }
    }
    assert!(yes > 0 && no > 0);
}

#[test]
fn minimal_scenario() {
    sequential_sweep(&SequentialLfSpec::minimal(), 7);
}

#[test]
fn sequential_binary_two_parties() {
    let spec = SequentialLfSpec {
        parties: vec![Party::regular(vec![2, 2, 2]), Party::regular(vec![2, 2])],
    };
    sequential_sweep(&spec, 8);
}

#[test]
fn bell_implies_lf_up_to_four_settings() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for na in 1..=4 {
        for nb in 1..=4 {
            let spec = LfSpec::binary(na, nb);
            let s = build_lf_compatibility_graph(&spec).unwrap();
            for _ in 0..10 {
                let b = random_local_behavior(&mut rng, &s);
                assert!(lf_membership(&spec, &b).unwrap().feasible, "({na},{nb})");
            }
        }
    }
}
