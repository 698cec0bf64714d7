//! Random rational behaviors and joint distributions for randomized tests.

use crate::marginal::{self, nd_polytope, MarginalError};
use crate::rational::{self, Rational};
use crate::scenario::{Behavior, Scenario};
use num_traits::Zero;
use rand::Rng;

/// Random distribution on `n` points with integer weights in 0..=max_weight.
pub fn random_distribution<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_weight: u32,
) -> Vec<Rational> {
    loop {
        let w: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=max_weight)).collect();
        let total: u64 = w.iter().map(|&x| x as u64).sum();
        if total == 0 {
            continue;
        }
        return w
            .iter()
            .map(|&x| rational::frac(x as i64, total as i64))
            .collect();
    }
}

/// Random distribution over all global assignments of a scenario.
pub fn random_global<R: Rng + ?Sized>(rng: &mut R, s: &Scenario) -> Vec<Rational> {
    let n = s.n_global().expect("global space fits in memory");
    let mut d = random_distribution(rng, n, 6);
    // sparsify some of the time so that faces get hit too
    if rng.gen_bool(0.3) {
        for x in d.iter_mut() {
            if rng.gen_bool(0.5) {
                *x = Rational::zero();
            }
        }
        let t: Rational = d.iter().sum();
        if t.is_zero() {
            return random_global(rng, s);
        }
        d.iter_mut().for_each(|x| *x /= &t);
    }
    d
}

/// A Bell-local behavior: marginals of a random global distribution.
pub fn random_local_behavior<R: Rng + ?Sized>(rng: &mut R, s: &Scenario) -> Behavior {
    marginal::marginalize_global(s, &random_global(rng, s))
}

/// A vertex of the no-disturbance polytope maximizing a random integer objective.
pub fn random_nd_vertex<R: Rng + ?Sized>(
    rng: &mut R,
    s: &Scenario,
) -> Result<Behavior, MarginalError> {
    let c: Vec<Rational> = (0..s.n_coords())
        .map(|_| rational::int(rng.gen_range(-5..=5)))
        .collect();
    let (_, point) = marginal::maximize_over(&nd_polytope(s), &c)?;
    Ok(Behavior::from_coords(s, &point)?)
}

/// Random no-disturbance behavior: a mixture of a random no-disturbance vertex
/// with a random local behavior, with a random weight in {0, 1/8, ..., 1}.
pub fn random_nd_behavior<R: Rng + ?Sized>(
    rng: &mut R,
    s: &Scenario,
) -> Result<Behavior, MarginalError> {
    let v = random_nd_vertex(rng, s)?;
    let l = random_local_behavior(rng, s);
    let lam = rational::frac(rng.gen_range(0..=8), 8);
    let coords: Vec<Rational> = v
        .coords()
        .iter()
        .zip(l.coords())
        .map(|(a, b)| &lam * a + (rational::one() - &lam) * b)
        .collect();
    Ok(Behavior::from_coords(s, &coords)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_lf_compatibility_graph, check_no_disturbance, LfSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = build_lf_compatibility_graph(&LfSpec::binary(2, 2)).unwrap();
        for _ in 0..20 {
            let b = random_nd_behavior(&mut rng, &s).unwrap();
            b.validate(&s).unwrap();
            assert!(check_no_disturbance(&s, &b).unwrap().ok);
        }
    }
}
