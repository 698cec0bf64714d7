//! Double description round trips and the CHSH facet structure.

use lfpoly_core::dd::{dd_h_to_v, dd_v_to_h};
use lfpoly_core::linalg::rank;
use lfpoly_core::marginal::{chsh_functional, deterministic_behavior, nd_polytope};
use lfpoly_core::polytope::{
    affine_dimension, equivalent_modulo, Equality, HPolytope, Inequality, VPolytope,
};
use lfpoly_core::rational::{int, Rational};
use lfpoly_core::scenario::{build_lf_compatibility_graph, tuples, LfSpec};
use num_traits::Zero;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn zero_one_points() -> impl Strategy<Value = (usize, Vec<Vec<Rational>>)> {
    (1usize..=8)
        .prop_flat_map(|d| {
            let cap = (1usize << d).min(14);
            (
                Just(d),
                proptest::collection::btree_set(0u32..(1 << d), 1..=cap),
            )
        })
        .prop_map(|(d, set)| {
            let pts = set
                .into_iter()
                .map(|m| (0..d).map(|k| int(((m >> k) & 1) as i64)).collect())
                .collect();
            (d, pts)
        })
}

fn affinely_independent_count(points: &[&Vec<Rational>]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let rows: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(points[0].iter()).map(|(a, b)| a - b).collect())
        .collect();
    rank(&rows) + 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn zero_one_round_trip((d, pts) in zero_one_points()) {
        let v = VPolytope::new(d, pts.clone());
        let h = dd_v_to_h(&v).unwrap();
        for p in &pts {
            prop_assert!(h.contains(p));
        }
        let back = dd_h_to_v(&h).unwrap();
        prop_assert!(back.rays.is_empty());
        let want: BTreeSet<Vec<Rational>> = pts.iter().cloned().collect();
        let got: BTreeSet<Vec<Rational>> = back.vertices.iter().cloned().collect();
        prop_assert_eq!(got, want);

        // every facet is tight at dim-many affinely independent input points
        let dim = affine_dimension(&h).unwrap() as usize;
        for f in &h.inequalities {
            let tight: Vec<&Vec<Rational>> = pts.iter().filter(|p| f.eval(p) == f.bound).collect();
            prop_assert!(affinely_independent_count(&tight) >= dim, "facet tight at too few points");
        }
    }
}

fn chsh_variants(spec: &LfSpec) -> Vec<Inequality> {
    let s = build_lf_compatibility_graph(spec).unwrap();
    let mut out = Vec::new();
    // relabelling the settings moves the minus sign; negation covers the flipped outcome labels
    for (xs, ys) in [
        ((0, 1), (0, 1)),
        ((1, 0), (0, 1)),
        ((0, 1), (1, 0)),
        ((1, 0), (1, 0)),
    ] {
        let c = chsh_functional(spec, xs, ys);
        out.push(Inequality::new(c.clone(), int(2)));
        out.push(Inequality::new(c.iter().map(|x| -x).collect(), int(2)));
    }
    assert_eq!(out.len(), 8);
    assert_eq!(out.iter().collect::<BTreeSet<_>>().len(), 8);
    let _ = s;
    out
}

#[test]
fn chsh_facets_of_deterministic_hull() {
    let spec = LfSpec::binary(2, 2);
    let s = build_lf_compatibility_graph(&spec).unwrap();
    let verts: Vec<Vec<Rational>> = tuples(&[2, 2, 2, 2])
        .map(|g| deterministic_behavior(&s, &g).coords())
        .collect();
    let h = dd_v_to_h(&VPolytope::new(16, verts)).unwrap();
    assert_eq!(affine_dimension(&h).unwrap(), 8);
    for chsh in chsh_variants(&spec) {
        assert!(
            h.inequalities
                .iter()
                .any(|f| equivalent_modulo(f, &chsh, &h.equalities)),
            "missing CHSH variant"
        );
    }
    // 16 positivity facets plus 8 CHSH facets
    assert_eq!(h.inequalities.len(), 24);
}

#[test]
fn bell_h_rep_enumerates_deterministic_behaviors() {
    let spec = LfSpec::binary(2, 2);
    let s = build_lf_compatibility_graph(&spec).unwrap();
    let n = s.n_coords();
    let mut h = HPolytope::new(n);
    // positivity, normalization, no-disturbance, CHSH family
    for k in 0..n {
        let mut c = vec![Rational::zero(); n];
        c[k] = int(-1);
        h.inequalities.push(Inequality::new(c, int(0)));
    }
    let nd = nd_polytope(&s);
    for r in &nd.rows {
        if r.aux.is_empty() {
            let mut c = vec![Rational::zero(); n];
            for (k, a) in &r.beh {
                c[*k] += a;
            }
            h.equalities.push(Equality::new(c, r.rhs.clone()));
        }
    }
    h.inequalities.extend(chsh_variants(&spec));
    let v = dd_h_to_v(&h).unwrap();
    let got: BTreeSet<Vec<Rational>> = v.vertices.into_iter().collect();
    let want: BTreeSet<Vec<Rational>> = tuples(&[2, 2, 2, 2])
        .map(|g| deterministic_behavior(&s, &g).coords())
        .collect();
    assert_eq!(got, want);
}
