//! Closed-form quantum realizations: KCBS, Peres–Mermin and CHSH.

use crate::ops::{self, kron, pauli_x, pauli_y, pauli_z, r, Mat, Pvm, C64, OP_TOL};
use crate::state::StateVector;
use crate::QuantumError;
use lfpoly_core::formats::ScenarioDoc;
use lfpoly_core::rational::{self, Rational};
use lfpoly_core::scenario::{self, Behavior, FloatBehavior, LfSpec, Measurement, Scenario};
use nalgebra::DVector;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

/// A state together with one PVM per measurement id.
#[derive(Debug, Clone)]
pub struct Realization {
    pub state: StateVector,
    pub pvms: BTreeMap<String, Pvm>,
}

impl Realization {
    /// Checks dimensions and outcome counts against `s`, and commutation inside every context.
    pub fn check(&self, s: &Scenario) -> Result<(), QuantumError> {
        let d = self.state.len();
        for m in s.measurements() {
            let p = self.pvms.get(&m.id).ok_or_else(|| QuantumError::Invalid(format!("no PVM for {}", m.id)))?;
            if p.dim() != d {
                return Err(QuantumError::Dimension(format!("PVM {} acts on dimension {}, state has {d}", m.id, p.dim())));
            }
            if p.n_outcomes() != m.card {
                return Err(QuantumError::Dimension(format!("PVM {} has {} outcomes, expected {}", m.id, p.n_outcomes(), m.card)));
            }
        }
        for ctx in s.contexts() {
            for (i, &a) in ctx.iter().enumerate() {
                for &b in &ctx[i + 1..] {
                    let (ia, ib) = (&s.measurements()[a].id, &s.measurements()[b].id);
                    if !self.pvms[ia].commutes_with(&self.pvms[ib], OP_TOL) {
                        return Err(QuantumError::NonCommuting(ia.clone(), ib.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Upper bound on the state dimension accepted from realization files.
pub const MAX_REALIZATION_DIM: usize = 4096;

/// JSON form of a scenario together with its realization.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RealizationDoc {
    pub scenario: ScenarioDoc,
    pub dims: Vec<usize>,
    pub state: Vec<[f64; 2]>,
    pub pvms: BTreeMap<String, Pvm>,
}

/// Parses and checks a realization file: normalized state, one PVM per measurement,
/// commuting contexts.
pub fn realization_from_json(text: &str) -> Result<(Scenario, Realization), QuantumError> {
    let doc: RealizationDoc = serde_json::from_str(text)?;
    let s = doc.scenario.to_scenario().map_err(|e| QuantumError::Invalid(e.to_string()))?;
    let n = doc.dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d).filter(|&n| n <= MAX_REALIZATION_DIM));
    if n.is_none() {
        return Err(QuantumError::Dimension(format!("state dimension above {MAX_REALIZATION_DIM}")));
    }
    let state = StateVector::new(doc.dims, doc.state.iter().map(|&[a, b]| C64::new(a, b)).collect())?;
    state.check_norm()?;
    let real = Realization { state, pvms: doc.pvms };
    real.check(&s)?;
    Ok((s, real))
}

pub fn realization_to_json(s: &Scenario, real: &Realization) -> String {
    let doc = RealizationDoc {
        scenario: ScenarioDoc::from_scenario(s),
        dims: real.state.dims.clone(),
        state: real.state.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        pvms: real.pvms.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

fn cv(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| r(x)).collect()
}

pub fn kcbs_vectors() -> [Vec<C64>; 5] {
    [
        cv(&[1.0, -1.0, 1.0]),
        cv(&[1.0, 1.0, 0.0]),
        cv(&[0.0, 0.0, 1.0]),
        cv(&[1.0, 0.0, 0.0]),
        cv(&[0.0, 1.0, 1.0]),
    ]
}

/// Five binary measurements A1..A5 on the cycle, with the last context ordered (A5, A1).
pub fn five_cycle_scenario() -> Scenario {
    let ms = (1..=5).map(|i| Measurement { id: format!("A{i}"), card: 2 }).collect();
    Scenario::from_indices(ms, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4], vec![4, 0]]).expect("valid")
}

pub struct Kcbs {
    pub state: StateVector,
    pub pvms: Vec<Pvm>,
    pub scenario: Scenario,
}

impl Kcbs {
    pub fn realization(&self) -> Realization {
        Realization {
            state: self.state.clone(),
            pvms: self.pvms.iter().enumerate().map(|(i, p)| (format!("A{}", i + 1), p.clone())).collect(),
        }
    }
}

/// Qutrit state (1,1,1)/√3 with A_i = {1 − |v_i⟩⟨v_i|, |v_i⟩⟨v_i|}.
pub fn kcbs_fixture() -> Kcbs {
    Kcbs {
        state: StateVector::normalized(&cv(&[1.0, 1.0, 1.0])),
        pvms: kcbs_vectors().iter().map(|v| Pvm::from_vector(v)).collect(),
        scenario: five_cycle_scenario(),
    }
}

pub const PM_LABELS: [&str; 9] = ["A", "a", "alpha", "B", "b", "beta", "C", "c", "gamma"];

pub struct PeresMermin {
    /// observables[row][col], rows {A,a,α}, {B,b,β}, {C,c,γ}.
    pub observables: [[Mat; 3]; 3],
    pub scenario: Scenario,
}

impl PeresMermin {
    pub fn observable(&self, label: &str) -> &Mat {
        let k = PM_LABELS.iter().position(|&l| l == label).expect("known label");
        &self.observables[k / 3][k % 3]
    }

    /// Context products in scenario context order, with their expected sign.
    pub fn context_products(&self) -> Vec<(Mat, f64)> {
        let signs = [1.0, 1.0, 1.0, 1.0, 1.0, -1.0];
        self.scenario
            .contexts()
            .iter()
            .zip(signs)
            .map(|(ctx, sign)| {
                let prod = ctx.iter().fold(ops::identity(4), |acc, &m| acc * self.observable(&self.scenario.measurements()[m].id));
                (prod, sign)
            })
            .collect()
    }

    pub fn realization(&self, state: StateVector) -> Realization {
        Realization {
            state,
            pvms: PM_LABELS.iter().map(|l| (l.to_string(), Pvm::from_observable(self.observable(l)).expect("involution"))).collect(),
        }
    }
}

/// Two-qubit Peres–Mermin square; outcome 1 is the +1 eigenvalue.
pub fn peres_mermin_fixture() -> PeresMermin {
    let (i, x, y, z) = (ops::identity(2), pauli_x(), pauli_y(), pauli_z());
    let observables = [
        [kron(&z, &i), kron(&i, &z), kron(&z, &z)],
        [kron(&i, &x), kron(&x, &i), kron(&x, &x)],
        [kron(&z, &x), kron(&x, &z), kron(&y, &y)],
    ];
    let ms = PM_LABELS.iter().map(|l| Measurement { id: l.to_string(), card: 2 }).collect();
    let ctx = vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8], vec![0, 3, 6], vec![1, 4, 7], vec![2, 5, 8]];
    PeresMermin { observables, scenario: Scenario::from_indices(ms, ctx).expect("valid") }
}

/// |Φ+⟩ with A1 = Z, A2 = X, B1 = (Z+X)/√2, B2 = (Z−X)/√2 on the (2,2) LF graph.
pub fn chsh_fixture() -> (Scenario, Realization) {
    let s = scenario::build_lf_compatibility_graph(&LfSpec::binary(2, 2)).expect("valid");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (i, x, z) = (ops::identity(2), pauli_x(), pauli_z());
    let b1 = (&z + &x) * r(h);
    let b2 = (&z - &x) * r(h);
    let obs = [("A1", kron(&z, &i)), ("A2", kron(&x, &i)), ("B1", kron(&i, &b1)), ("B2", kron(&i, &b2))];
    let pvms = obs.iter().map(|(l, o)| (l.to_string(), Pvm::from_observable(o).expect("involution"))).collect();
    let state = StateVector::new(vec![2, 2], cv(&[h, 0.0, 0.0, h])).expect("valid");
    (s, Realization { state, pvms })
}

/// Born-rule behavior: P(o|C) = ‖P_{o_n} ⋯ P_{o_1} ψ‖² for the members of each context.
pub fn born_behavior(state: &StateVector, s: &Scenario, assign: &BTreeMap<String, Pvm>) -> Result<FloatBehavior, QuantumError> {
    let real = Realization { state: state.clone(), pvms: assign.clone() };
    real.check(s)?;
    let psi = DVector::from_vec(state.amplitudes.clone());
    let mut tables = Vec::new();
    for c in 0..s.contexts().len() {
        let ids = s.context_ids(c);
        let pvms: Vec<&Pvm> = ids.iter().map(|id| &assign[id]).collect();
        let table = scenario::tuples(&s.cards(c))
            .map(|t| {
                let v = t.iter().zip(&pvms).fold(psi.clone(), |v, (&o, p)| &p.projectors[o] * v);
                v.norm_squared()
            })
            .collect();
        tables.push(table);
    }
    Ok(FloatBehavior { tables })
}

/// CHSH value E11 + E12 + E21 − E22 of a float behavior on the (2,2) LF graph.
pub fn chsh_value(s: &Scenario, b: &FloatBehavior) -> f64 {
    let spec = LfSpec::binary(2, 2);
    let corr = |x: usize, y: usize| {
        let c = spec.context(x, y);
        b.get(s, c, &[0, 0]) + b.get(s, c, &[1, 1]) - b.get(s, c, &[0, 1]) - b.get(s, c, &[1, 0])
    };
    corr(0, 0) + corr(0, 1) + corr(1, 0) - corr(1, 1)
}

/// Rounds every entry to a nearby rational with bounded denominator. Per-context
/// residuals are absorbed by the largest entry so that each table sums to 1.
pub fn rationalize_behavior(s: &Scenario, b: &FloatBehavior, max_den: u64, tol: f64) -> Result<Behavior, QuantumError> {
    if b.tables.len() != s.contexts().len() {
        return Err(QuantumError::Dimension(format!("{} tables for {} contexts", b.tables.len(), s.contexts().len())));
    }
    let mut tables = Vec::with_capacity(b.tables.len());
    for (c, t) in b.tables.iter().enumerate() {
        let cards = s.cards(c);
        if t.len() != s.outcome_count(c) {
            return Err(QuantumError::Dimension(format!("context {c} table has {} entries", t.len())));
        }
        let mut out = Vec::with_capacity(t.len());
        for (i, &x) in t.iter().enumerate() {
            let bad = || QuantumError::Rationalize { context: c, outcome: scenario::decode(i, &cards), value: x };
            let q = rational::approximate(x, max_den).ok_or_else(bad)?;
            if (rational::to_f64(&q) - x).abs() > tol || q.is_negative() {
                return Err(bad());
            }
            out.push(q);
        }
        let sum: Rational = out.iter().sum();
        let residual = rational::one() - sum;
        if !residual.is_zero() {
            let big = (0..out.len()).max_by(|&a, &b| out[a].cmp(&out[b]).then(b.cmp(&a))).expect("nonempty");
            if rational::to_f64(&residual).abs() > tol * out.len() as f64 {
                return Err(QuantumError::Invalid(format!("context {c} sums to {} after rounding", rational::fmt(&(rational::one() - &residual)))));
            }
            out[big] += residual;
        }
        tables.push(out);
    }
    Ok(Behavior { tables })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lfpoly_core::scenario::check_no_disturbance;

    #[test]
    fn kcbs_orthogonality() {
        let v = kcbs_vectors();
        let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm();
        for i in 0..5 {
            assert!(dot(&v[i], &v[(i + 1) % 5]) < 1e-15);
        }
        let k = kcbs_fixture();
        let b = born_behavior(&k.state, &k.scenario, &k.realization().pvms).unwrap();
        assert!((b.get(&k.scenario, 4, &[0, 1]) - 1.0 / 9.0).abs() < 1e-12);
        for (c, o) in [(0, [1, 1]), (1, [0, 0]), (2, [1, 1]), (3, [0, 0])] {
            assert!(b.get(&k.scenario, c, &o).abs() < 1e-12);
        }
    }

    #[test]
    fn kcbs_rationalizes_with_small_denominators() {
        let k = kcbs_fixture();
        let b = born_behavior(&k.state, &k.scenario, &k.realization().pvms).unwrap();
        let q = rationalize_behavior(&k.scenario, &b, 1_000_000, 1e-10).unwrap();
        q.validate(&k.scenario).unwrap();
        assert!(q.coords().iter().all(|x| *x.denom() <= 18.into()));
        assert!(check_no_disturbance(&k.scenario, &q).unwrap().ok);
    }

    #[test]
    fn rationalize_contract() {
        let s = scenario::build_lf_compatibility_graph(&LfSpec::binary(1, 1)).unwrap();
        let ok = FloatBehavior { tables: vec![vec![0.1111111111, 0.2222222222, 0.3333333333, 0.3333333334]] };
        let q = rationalize_behavior(&s, &ok, 100, 1e-9).unwrap();
        assert_eq!(q.tables[0][0], rational::frac(1, 9));
        let bad = FloatBehavior { tables: vec![vec![0.123456789, 0.2, 0.3, 0.376543211]] };
        let e = rationalize_behavior(&s, &bad, 10, 1e-9).unwrap_err();
        assert!(matches!(e, QuantumError::Rationalize { context: 0, ref outcome, .. } if outcome == &vec![0, 0]));
    }

    #[test]
    fn peres_mermin_algebra() {
        let pm = peres_mermin_fixture();
        for row in &pm.observables {
            for o in row {
                assert!(ops::approx_eq(&(o * o), &ops::identity(4), 1e-12));
            }
        }
        for (prod, sign) in pm.context_products() {
            assert!(ops::approx_eq(&prod, &(ops::identity(4) * r(sign)), 1e-12));
        }
        let real = pm.realization(StateVector::basis(vec![4], &[0]));
        real.check(&pm.scenario).unwrap();
    }

    #[test]
    fn chsh_is_tsirelson() {
        let (s, real) = chsh_fixture();
        let b = born_behavior(&real.state, &s, &real.pvms).unwrap();
        assert!((chsh_value(&s, &b) - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn non_commuting_context_rejected() {
        let k = kcbs_fixture();
        let mut pvms = k.realization().pvms;
        pvms.insert("A2".into(), k.pvms[2].clone());
        let e = born_behavior(&k.state, &k.scenario, &pvms).unwrap_err();
        assert!(matches!(e, QuantumError::NonCommuting(..)));
    }

    #[test]
    fn product_state_gives_product_distribution() {
        let s = scenario::build_lf_compatibility_graph(&LfSpec::binary(1, 1)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::new(vec![2], cv(&[h, h])).unwrap();
        let zero = StateVector::basis(vec![2], &[0]);
        let st = plus.tensor(&zero);
        let mut pvms = BTreeMap::new();
        pvms.insert("A1".to_string(), Pvm { projectors: Pvm::computational(2).projectors.iter().map(|p| kron(p, &ops::identity(2))).collect() });
        pvms.insert("B1".to_string(), Pvm { projectors: Pvm::computational(2).projectors.iter().map(|p| kron(&ops::identity(2), p)).collect() });
        let b = born_behavior(&st, &s, &pvms).unwrap();
        for (x, want) in b.tables[0].iter().zip([0.5, 0.0, 0.5, 0.0]) {
            assert!((x - want).abs() < 1e-15);
        }
    }

    #[test]
    fn realization_json_round_trip() {
        let (s, real) = chsh_fixture();
        let text = realization_to_json(&s, &real);
        let (s2, real2) = realization_from_json(&text).unwrap();
        assert_eq!(s, s2);
        assert_eq!(real.state, real2.state);
        assert_eq!(real.pvms, real2.pvms);

        let mut doc: RealizationDoc = serde_json::from_str(&text).unwrap();
        doc.state[0] = [2.0, 0.0];
        assert!(matches!(realization_from_json(&serde_json::to_string(&doc).unwrap()), Err(QuantumError::NormDrift(_))));
        doc.dims = vec![1 << 20, 1 << 20];
        assert!(matches!(realization_from_json(&serde_json::to_string(&doc).unwrap()), Err(QuantumError::Dimension(_))));
    }
}
