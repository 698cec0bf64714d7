use lfpoly_core::marginal::{bell_membership, chsh_functional, deterministic_behavior, lf_membership, max_over_bell};
use lfpoly_core::random::random_local_behavior;
use lfpoly_core::rational;
use lfpoly_core::scenario::{tuples, LfSpec};
use lfpoly_quantum::fixtures::{born_behavior, chsh_fixture, chsh_value, rationalize_behavior};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn tsirelson_behavior_is_separated() {
    let (s, real) = chsh_fixture();
    let b = born_behavior(&real.state, &s, &real.pvms).unwrap();
    assert!((chsh_value(&s, &b) - 2.0 * 2f64.sqrt()).abs() <= 1e-9);
    let q = rationalize_behavior(&s, &b, 1_000_000, 1e-10).unwrap();
    q.validate(&s).unwrap();

    let bell = bell_membership(&s, &q).unwrap();
    assert!(!bell.feasible);
    let sep = bell.separator.expect("separating inequality");
    assert!(!sep.holds(&q.coords()));
    // the separator is valid on every deterministic behavior and on random local ones
    for a in tuples(&[2, 2, 2, 2]) {
        assert!(sep.holds(&deterministic_behavior(&s, &a).coords()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        assert!(sep.holds(&random_local_behavior(&mut rng, &s).coords()));
    }

    let spec = LfSpec::binary(2, 2);
    assert!(!lf_membership(&spec, &q).unwrap().feasible);
    let c = chsh_functional(&spec, (0, 1), (0, 1));
    assert_eq!(max_over_bell(&s, &c).unwrap(), rational::int(2));
    let quantum = rational::dot(&c, &q.coords());
    assert!(quantum > rational::int(2));
}
