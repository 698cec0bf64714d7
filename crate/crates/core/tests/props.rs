//! Randomized invariants: LP soundness, gluing, transportation dimensions,
//! relabelling and side-swap invariance.

use lfpoly_core::linalg::rank;
use lfpoly_core::lp::{maximize, solve_feasibility, Certificate, LinearProgram, OptOutcome};
use lfpoly_core::marginal::{glue, lf_membership, JointDistribution};
use lfpoly_core::polytope::{affine_dimension, Equality, HPolytope, Inequality};
use lfpoly_core::random::{random_global, random_local_behavior, random_nd_behavior};
use lfpoly_core::rational::{frac, int, Rational};
use lfpoly_core::scenario::{
    build_lf_compatibility_graph, check_no_disturbance, decode, encode, tuples, Behavior, LfSpec,
    Scenario,
};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---- independent evaluator, shares no code with the solver ----

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter()
        .zip(x)
        .fold(Rational::zero(), |acc, (p, q)| acc + p * q)
}

fn satisfies(lp: &LinearProgram, x: &[Rational]) -> bool {
    x.len() == lp.n_vars
        && lp.nonneg.iter().all(|&j| !x[j].is_negative())
        && lp.equalities.iter().all(|r| dot(&r.coeffs, x) == r.rhs)
        && lp.inequalities.iter().all(|r| dot(&r.coeffs, x) <= r.rhs)
}

fn farkas_ok(lp: &LinearProgram, y: &[Rational]) -> bool {
    let ne = lp.equalities.len();
    if y.len() != ne + lp.inequalities.len() || y[ne..].iter().any(|v| v.is_negative()) {
        return false;
    }
    let rows: Vec<_> = lp.equalities.iter().chain(&lp.inequalities).collect();
    let rhs = rows
        .iter()
        .zip(y)
        .fold(Rational::zero(), |acc, (r, m)| acc + m * &r.rhs);
    (0..lp.n_vars).all(|j| {
        let c = rows
            .iter()
            .zip(y)
            .fold(Rational::zero(), |acc, (r, m)| acc + m * &r.coeffs[j]);
        if lp.nonneg.contains(&j) {
            !c.is_negative()
        } else {
            c.is_zero()
        }
    }) && rhs.is_negative()
}

fn small_lp() -> impl Strategy<Value = (LinearProgram, Vec<Rational>)> {
    (1usize..=4, 0usize..=3, 0usize..=4)
        .prop_flat_map(|(n, ne, ni)| {
            let row = move || (proptest::collection::vec(-3i64..=3, n), -4i64..=4);
            (
                Just(n),
                proptest::collection::vec(row(), ne),
                proptest::collection::vec(row(), ni),
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(-3i64..=3, n),
            )
        })
        .prop_map(|(n, eqs, les, nn, obj)| {
            let mut lp = LinearProgram::new(n);
            lp.nonneg = (0..n).filter(|&j| nn[j]).collect();
            for (c, r) in eqs {
                lp.add_eq(c.into_iter().map(int).collect(), int(r));
            }
            for (c, r) in les {
                lp.add_le(c.into_iter().map(int).collect(), int(r));
            }
            (lp, obj.into_iter().map(int).collect())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn lp_certificates_are_sound((lp, obj) in small_lp()) {
        let cert = solve_feasibility(&lp).unwrap();
        match &cert {
            Certificate::Feasible { point } => prop_assert!(satisfies(&lp, point)),
            Certificate::Infeasible { farkas } => prop_assert!(farkas_ok(&lp, farkas)),
            Certificate::Unbounded { .. } => prop_assert!(false, "feasibility returned a ray"),
        }
        match maximize(&lp, obj.clone()) {
            Ok(OptOutcome::Optimal(o)) => {
                let was_feasible = matches!(cert, Certificate::Feasible { .. });
                prop_assert!(was_feasible);
                prop_assert!(satisfies(&lp, &o.argmax));
                prop_assert_eq!(&o.value, &dot(&obj, &o.argmax));
                // no integer grid point does better
                for g in tuples(&vec![7; lp.n_vars]) {
                    let x: Vec<Rational> = g.iter().map(|&v| int(v as i64 - 3)).collect();
                    if satisfies(&lp, &x) {
                        prop_assert!(dot(&obj, &x) <= o.value);
                    }
                }
            }
            Ok(OptOutcome::Unbounded { point, ray }) => {
                prop_assert!(satisfies(&lp, &point));
                prop_assert!(dot(&obj, &ray).is_positive());
                let far: Vec<Rational> = point.iter().zip(&ray).map(|(p, r)| p + int(1000) * r).collect();
                prop_assert!(satisfies(&lp, &far));
            }
            Err(lfpoly_core::lp::LpError::Infeasible { farkas }) => {
                let was_infeasible = matches!(cert, Certificate::Infeasible { .. });
                prop_assert!(was_infeasible);
                prop_assert!(farkas_ok(&lp, &farkas));
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn transportation_dimension(m in 1usize..=4, n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // margins with equal totals, some entries possibly zero
        let total: i64 = rng.gen_range(m.max(n) as i64..=12);
        let split = |k: usize, rng: &mut ChaCha8Rng| -> Vec<i64> {
            let mut v = vec![0i64; k];
            for _ in 0..total {
                v[rng.gen_range(0..k)] += 1;
            }
            v
        };
        let (r, c) = (split(m, &mut rng), split(n, &mut rng));
        let dim = m * n;
        let mut h = HPolytope::new(dim);
        for (i, ri) in r.iter().enumerate() {
            let mut a = vec![Rational::zero(); dim];
            (0..n).for_each(|j| a[i * n + j] = Rational::one());
            h.equalities.push(Equality::new(a, int(*ri)));
        }
        for (j, cj) in c.iter().enumerate() {
            let mut a = vec![Rational::zero(); dim];
            (0..m).for_each(|i| a[i * n + j] = Rational::one());
            h.equalities.push(Equality::new(a, int(*cj)));
        }
        for k in 0..dim {
            let mut a = vec![Rational::zero(); dim];
            a[k] = int(-1);
            h.inequalities.push(Inequality::new(a, int(0)));
        }
        // implicit equalities: cells forced to zero by an empty row or column
        let mut eqs: Vec<Vec<Rational>> = h.equalities.iter().map(|e| e.coeffs.clone()).collect();
        for i in 0..m {
            for j in 0..n {
                if r[i] == 0 || c[j] == 0 {
                    let mut a = vec![Rational::zero(); dim];
                    a[i * n + j] = Rational::one();
                    eqs.push(a);
                }
            }
        }
        let expected = dim as i64 - rank(&eqs) as i64;
        prop_assert_eq!(affine_dimension(&h).unwrap(), expected);
        let nz_r = r.iter().filter(|&&x| x > 0).count() as i64;
        let nz_c = c.iter().filter(|&&x| x > 0).count() as i64;
        prop_assert_eq!(expected, (nz_r - 1) * (nz_c - 1));
    }
}

// ---- gluing ----

fn global_joint(s: &Scenario, g: &[Rational]) -> JointDistribution {
    let vars = s.measurements().iter().map(|m| m.id.clone()).collect();
    let cards = s.measurements().iter().map(|m| m.card).collect();
    JointDistribution::new(vars, cards, g.to_vec()).unwrap()
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn glue_recovers_pairwise_marginals() {
    let s = build_lf_compatibility_graph(&LfSpec::binary(3, 2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let g = global_joint(&s, &random_global(&mut rng, &s));
        let p22 = g.marginal(&names(&["A1", "A2", "B1", "B2"])).unwrap();
        let p32 = g.marginal(&names(&["A1", "A3", "B1", "B2"])).unwrap();
        let q = glue(&p22, &p32).unwrap();
        assert!(q.is_distribution());
        assert_eq!(q.marginal(&p22.vars).unwrap(), p22);
        assert_eq!(q.marginal(&p32.vars).unwrap(), p32);
        for a in ["A1", "A2", "A3"] {
            for b in ["B1", "B2"] {
                let v = names(&[a, b]);
                assert_eq!(q.marginal(&v).unwrap(), g.marginal(&v).unwrap());
            }
        }
    }
}

#[test]
fn glue_rejects_mismatched_overlap() {
    let p = JointDistribution::new(
        names(&["a", "b"]),
        vec![2, 2],
        vec![int(1), int(0), int(0), int(0)],
    )
    .unwrap();
    let q = JointDistribution::new(
        names(&["b", "c"]),
        vec![2, 2],
        vec![int(0), int(0), int(1), int(0)],
    )
    .unwrap();
    assert!(glue(&p, &q).is_err());
}

// ---- relabelling and swap ----

/// Applies an outcome permutation per measurement to every context table.
fn relabel(s: &Scenario, b: &Behavior, perms: &[Vec<usize>]) -> Behavior {
    let mut out = Behavior::zeros(s);
    for (c, members) in s.contexts().iter().enumerate() {
        let cards = s.cards(c);
        for (i, p) in b.tables[c].iter().enumerate() {
            let t = decode(i, &cards);
            let u: Vec<usize> = t.iter().zip(members).map(|(&o, &m)| perms[m][o]).collect();
            out.tables[c][encode(&u, &cards)] = p.clone();
        }
    }
    out
}

fn random_perms<R: Rng>(rng: &mut R, s: &Scenario) -> Vec<Vec<usize>> {
    s.measurements()
        .iter()
        .map(|m| {
            let mut p: Vec<usize> = (0..m.card).collect();
            p.shuffle(rng);
            p
        })
        .collect()
}

fn swap_sides(spec: &LfSpec, b: &Behavior) -> Behavior {
    let sw = spec.swapped();
    let (s, t) = (
        build_lf_compatibility_graph(spec).unwrap(),
        build_lf_compatibility_graph(&sw).unwrap(),
    );
    let mut out = Behavior::zeros(&t);
    for i in 0..spec.n_a {
        for j in 0..spec.n_b {
            let c = spec.context(i, j);
            for (k, p) in b.tables[c].iter().enumerate() {
                let o = decode(k, &s.cards(c));
                out.set(&t, sw.context(j, i), &[o[1], o[0]], p.clone());
            }
        }
    }
    out
}

#[test]
fn no_disturbance_invariant_under_relabelling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = LfSpec {
        n_a: 2,
        n_b: 3,
        card_a: vec![2, 3],
        card_b: vec![2, 2, 3],
    };
    let s = build_lf_compatibility_graph(&spec).unwrap();
    for k in 0..60 {
        let mut b = random_nd_behavior(&mut rng, &s).unwrap();
        if k % 2 == 1 {
            // move mass inside one context to break no-disturbance
            let t = &mut b.tables[0];
            let m = t[0].clone();
            t[0] = Rational::zero();
            t[1] += m;
        }
        let before = check_no_disturbance(&s, &b).unwrap().ok;
        let r = relabel(&s, &b, &random_perms(&mut rng, &s));
        assert_eq!(check_no_disturbance(&s, &r).unwrap().ok, before);
    }
}

/// PR box on settings 1,2 of each side, the rest deterministic, mixed 3/4 : 1/4
/// with a random local behavior. CHSH on settings 1,2 is at least 5/2.
fn noisy_pr_box<R: Rng>(rng: &mut R, spec: &LfSpec, s: &Scenario) -> Behavior {
    let mut pr = Behavior::zeros(s);
    for i in 0..spec.n_a {
        for j in 0..spec.n_b {
            let c = spec.context(i, j);
            for a in 0..2 {
                for b in 0..2 {
                    let p = match (i < 2, j < 2) {
                        (true, true) if (a ^ b) == (i & j) => frac(1, 2),
                        (true, true) => frac(0, 1),
                        (true, false) if b == 0 => frac(1, 2),
                        (false, true) if a == 0 => frac(1, 2),
                        (false, false) if a == 0 && b == 0 => frac(1, 1),
                        _ => frac(0, 1),
                    };
                    pr.set(s, c, &[a, b], p);
                }
            }
        }
    }
    let l = random_local_behavior(rng, s);
    let coords: Vec<Rational> = pr
        .coords()
        .iter()
        .zip(l.coords())
        .map(|(x, y)| frac(3, 4) * x + frac(1, 4) * y)
        .collect();
    Behavior::from_coords(s, &coords).unwrap()
}

#[test]
fn lf_membership_invariant_under_relabelling_and_swap() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for spec in [
        LfSpec::binary(2, 2),
        LfSpec::binary(3, 2),
        LfSpec::binary(3, 3),
    ] {
        let s = build_lf_compatibility_graph(&spec).unwrap();
        let mut seen = [false; 2];
        let n = if spec.n_a * spec.n_b > 6 { 16 } else { 60 };
        for k in 0..n {
            let b = if k % 2 == 0 {
                noisy_pr_box(&mut rng, &spec, &s)
            } else {
                random_nd_behavior(&mut rng, &s).unwrap()
            };
            let f = lf_membership(&spec, &b).unwrap().feasible;
            seen[f as usize] = true;
            let r = relabel(&s, &b, &random_perms(&mut rng, &s));
            assert_eq!(lf_membership(&spec, &r).unwrap().feasible, f);
            let w = swap_sides(&spec, &b);
            assert_eq!(lf_membership(&spec.swapped(), &w).unwrap().feasible, f);
        }
        assert!(
            seen[0] && seen[1],
            "both outcomes should occur for {spec:?}: {seen:?}"
        );
    }
}
