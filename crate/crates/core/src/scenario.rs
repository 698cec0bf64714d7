//! Measurement scenarios, behaviors and LF experiment specifications.

use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("duplicate measurement id {0}")]
    DuplicateId(String),
    #[error("unknown measurement id {0}")]
    UnknownId(String),
    #[error("context {0} is empty")]
    EmptyContext(usize),
    #[error("context {0} repeats a measurement")]
    RepeatedMember(usize),
    #[error("context {0} is contained in context {1}")]
    NotMaximal(usize, usize),
    #[error("measurement {0} belongs to no context")]
    Uncovered(String),
    #[error("measurement {0} has invalid cardinality {1}")]
    BadCardinality(String, usize),
    #[error("invalid specification: {0}")]
    BadSpec(String),
    #[error("behavior does not match scenario: {0}")]
    Mismatch(String),
    #[error("invalid behavior: {0}")]
    BadBehavior(String),
    #[error("cannot induce a subscenario on an empty set")]
    EmptyKeep,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Measurement {
    pub id: String,
    pub card: usize,
}

/// Measurements plus maximal contexts. Contexts store indices into `measurements`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    measurements: Vec<Measurement>,
    contexts: Vec<Vec<usize>>,
}

impl Scenario {
    /// Builds a scenario from explicit contexts given by measurement id.
    pub fn new(
        measurements: Vec<Measurement>,
        contexts: Vec<Vec<String>>,
    ) -> Result<Self, ScenarioError> {
        let mut index = HashMap::new();
        for (k, m) in measurements.iter().enumerate() {
            if m.card == 0 {
                return Err(ScenarioError::BadCardinality(m.id.clone(), m.card));
            }
            if index.insert(m.id.clone(), k).is_some() {
                return Err(ScenarioError::DuplicateId(m.id.clone()));
            }
        }
        let mut ctx = Vec::with_capacity(contexts.len());
        for (c, members) in contexts.iter().enumerate() {
            if members.is_empty() {
                return Err(ScenarioError::EmptyContext(c));
            }
            let mut idx = Vec::with_capacity(members.len());
            for id in members {
                let k = *index
                    .get(id)
                    .ok_or_else(|| ScenarioError::UnknownId(id.clone()))?;
                if idx.contains(&k) {
                    return Err(ScenarioError::RepeatedMember(c));
                }
                idx.push(k);
            }
            ctx.push(idx);
        }
        Self::from_indices(measurements, ctx)
    }

    pub fn from_indices(
        measurements: Vec<Measurement>,
        contexts: Vec<Vec<usize>>,
    ) -> Result<Self, ScenarioError> {
        let n = measurements.len();
        let sets: Vec<BTreeSet<usize>> = contexts
            .iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        for (c, s) in sets.iter().enumerate() {
            if s.is_empty() {
                return Err(ScenarioError::EmptyContext(c));
            }
            if s.len() != contexts[c].len() {
                return Err(ScenarioError::RepeatedMember(c));
            }
            if let Some(&k) = s.iter().find(|&&k| k >= n) {
                return Err(ScenarioError::UnknownId(format!("#{k}")));
            }
        }
        for i in 0..sets.len() {
            for j in 0..sets.len() {
                if i != j && sets[i].is_subset(&sets[j]) && (sets[i] != sets[j] || i > j) {
                    return Err(ScenarioError::NotMaximal(i, j));
                }
            }
        }
        let mut covered = vec![false; n];
        for s in &sets {
            for &k in s {
                covered[k] = true;
            }
        }
        if let Some(k) = covered.iter().position(|c| !c) {
            return Err(ScenarioError::Uncovered(measurements[k].id.clone()));
        }
        let mut seen = HashMap::new();
        for m in &measurements {
            if seen.insert(m.id.clone(), ()).is_some() {
                return Err(ScenarioError::DuplicateId(m.id.clone()));
            }
            if m.card == 0 {
                return Err(ScenarioError::BadCardinality(m.id.clone(), 0));
            }
        }
        Ok(Scenario {
            measurements,
            contexts,
        })
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    pub fn context_ids(&self, c: usize) -> Vec<String> {
        self.contexts[c]
            .iter()
            .map(|&k| self.measurements[k].id.clone())
            .collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.measurements.iter().position(|m| m.id == id)
    }

    pub fn context_index(&self, members: &[usize]) -> Option<usize> {
        let want: BTreeSet<usize> = members.iter().copied().collect();
        self.contexts
            .iter()
            .position(|c| c.iter().copied().collect::<BTreeSet<_>>() == want)
    }

    pub fn cards(&self, c: usize) -> Vec<usize> {
        self.contexts[c]
            .iter()
            .map(|&k| self.measurements[k].card)
            .collect()
    }

    /// Number of joint outcomes of context `c`.
    pub fn outcome_count(&self, c: usize) -> usize {
        self.cards(c).iter().product()
    }

    /// Offset of context `c` in the flat coordinate vector.
    pub fn offset(&self, c: usize) -> usize {
        (0..c).map(|k| self.outcome_count(k)).sum()
    }

    pub fn n_coords(&self) -> usize {
        (0..self.contexts.len())
            .map(|k| self.outcome_count(k))
            .sum()
    }

    /// Number of global outcome assignments, or None on overflow.
    pub fn n_global(&self) -> Option<usize> {
        self.measurements
            .iter()
            .try_fold(1usize, |a, m| a.checked_mul(m.card))
    }

    /// Human-readable name of a coordinate, e.g. `p(A1=0,B2=1)`.
    pub fn coord_name(&self, coord: usize) -> String {
        let mut c = 0;
        let mut rest = coord;
        while rest >= self.outcome_count(c) {
            rest -= self.outcome_count(c);
            c += 1;
        }
        let t = decode(rest, &self.cards(c));
        let parts: Vec<String> = self.contexts[c]
            .iter()
            .zip(&t)
            .map(|(&m, o)| format!("{}={}", self.measurements[m].id, o))
            .collect();
        format!("p({})", parts.join(","))
    }
}

/// Mixed-radix encoding with the first position most significant.
pub fn encode(tuple: &[usize], cards: &[usize]) -> usize {
    tuple.iter().zip(cards).fold(0, |acc, (&t, &c)| acc * c + t)
}

pub fn decode(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut t = vec![0; cards.len()];
    for k in (0..cards.len()).rev() {
        t[k] = index % cards[k];
        index /= cards[k];
    }
    t
}

/// Iterates all outcome tuples of the given cardinalities in lexicographic order.
pub fn tuples(cards: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = cards.iter().product();
    (0..total).map(move |i| decode(i, cards))
}

/// Exact behavior: one probability table per context, indexed by [`encode`].
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    pub tables: Vec<Vec<Rational>>,
}

/// Floating-point behavior as produced by the Born rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatBehavior {
    pub tables: Vec<Vec<f64>>,
}

impl Behavior {
    pub fn zeros(s: &Scenario) -> Self {
        Behavior {
            tables: (0..s.contexts().len())
                .map(|c| vec![Rational::zero(); s.outcome_count(c)])
                .collect(),
        }
    }

    pub fn uniform(s: &Scenario) -> Self {
        Behavior {
            tables: (0..s.contexts().len())
                .map(|c| {
                    let n = s.outcome_count(c);
                    vec![rational::frac(1, n as i64); n]
                })
                .collect(),
        }
    }

    pub fn from_coords(s: &Scenario, coords: &[Rational]) -> Result<Self, ScenarioError> {
        if coords.len() != s.n_coords() {
            return Err(ScenarioError::Mismatch(format!(
                "{} coordinates, expected {}",
                coords.len(),
                s.n_coords()
            )));
        }
        let mut tables = Vec::new();
        let mut at = 0;
        for c in 0..s.contexts().len() {
            let n = s.outcome_count(c);
            tables.push(coords[at..at + n].to_vec());
            at += n;
        }
        Ok(Behavior { tables })
    }

    pub fn coords(&self) -> Vec<Rational> {
        self.tables.iter().flatten().cloned().collect()
    }

    pub fn get(&self, s: &Scenario, c: usize, outcome: &[usize]) -> Rational {
        self.tables[c][encode(outcome, &s.cards(c))].clone()
    }

    pub fn set(&mut self, s: &Scenario, c: usize, outcome: &[usize], p: Rational) {
        let i = encode(outcome, &s.cards(c));
        self.tables[c][i] = p;
    }

    /// Shape check only.
    pub fn check_shape(&self, s: &Scenario) -> Result<(), ScenarioError> {
        if self.tables.len() != s.contexts().len() {
            return Err(ScenarioError::Mismatch(format!(
                "{} context tables for {} contexts",
                self.tables.len(),
                s.contexts().len()
            )));
        }
        for (c, t) in self.tables.iter().enumerate() {
            if t.len() != s.outcome_count(c) {
                return Err(ScenarioError::Mismatch(format!(
                    "context {c} table has {} entries",
                    t.len()
                )));
            }
        }
        Ok(())
    }

    /// Shape, nonnegativity and exact per-context normalization.
    pub fn validate(&self, s: &Scenario) -> Result<(), ScenarioError> {
        self.check_shape(s)?;
        for (c, t) in self.tables.iter().enumerate() {
            if t.iter().any(|p| p.is_negative()) {
                return Err(ScenarioError::BadBehavior(format!(
                    "negative entry in context {c}"
                )));
            }
            let sum: Rational = t.iter().sum();
            if !sum.is_one() {
                return Err(ScenarioError::BadBehavior(format!(
                    "context {c} sums to {}",
                    rational::fmt(&sum)
                )));
            }
        }
        Ok(())
    }

    /// Marginal of the measurement at position `pos` within context `c`.
    pub fn marginal(&self, s: &Scenario, c: usize, pos: usize) -> Vec<Rational> {
        let cards = s.cards(c);
        let mut out = vec![Rational::zero(); cards[pos]];
        for (i, p) in self.tables[c].iter().enumerate() {
            if !p.is_zero() {
                out[decode(i, &cards)[pos]] += p;
            }
        }
        out
    }

    /// Marginal over an arbitrary subset of positions of context `c`, in the given order.
    pub fn marginal_on(&self, s: &Scenario, c: usize, positions: &[usize]) -> Vec<Rational> {
        let cards = s.cards(c);
        let sub: Vec<usize> = positions.iter().map(|&p| cards[p]).collect();
        let mut out = vec![Rational::zero(); sub.iter().product()];
        for (i, p) in self.tables[c].iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let t = decode(i, &cards);
            let st: Vec<usize> = positions.iter().map(|&k| t[k]).collect();
            out[encode(&st, &sub)] += p;
        }
        out
    }
}

impl FloatBehavior {
    pub fn get(&self, s: &Scenario, c: usize, outcome: &[usize]) -> f64 {
        self.tables[c][encode(outcome, &s.cards(c))]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub measurement: String,
    pub contexts: (usize, usize),
    pub outcome: usize,
    /// Marginal in the first context minus marginal in the second.
    pub gap: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdReport {
    pub ok: bool,
    pub violations: Vec<Disturbance>,
}

/// Compares every shared measurement's marginal against its first context.
pub fn check_no_disturbance(s: &Scenario, b: &Behavior) -> Result<NdReport, ScenarioError> {
    b.check_shape(s)?;
    let mut violations = Vec::new();
    for (m, meas) in s.measurements().iter().enumerate() {
        let holders: Vec<(usize, usize)> = s
            .contexts()
            .iter()
            .enumerate()
            .filter_map(|(c, members)| members.iter().position(|&k| k == m).map(|p| (c, p)))
            .collect();
        let Some(&(c0, p0)) = holders.first() else {
            continue;
        };
        let base = b.marginal(s, c0, p0);
        for &(c, p) in &holders[1..] {
            let other = b.marginal(s, c, p);
            for (o, (x, y)) in base.iter().zip(&other).enumerate() {
                if x != y {
                    violations.push(Disturbance {
                        measurement: meas.id.clone(),
                        contexts: (c0, c),
                        outcome: o,
                        gap: x - y,
                    });
                    break;
                }
            }
        }
    }
    Ok(NdReport {
        ok: violations.is_empty(),
        violations,
    })
}

/// Restricts contexts to `keep` and reduces to the maximal ones. Missing single
/// edges are not vertex-induced; build those with [`Scenario::new`] directly.
pub fn induced_subscenario(s: &Scenario, keep: &[String]) -> Result<Scenario, ScenarioError> {
    if keep.is_empty() {
        return Err(ScenarioError::EmptyKeep);
    }
    let mut old_idx = Vec::new();
    for id in keep {
        let k = s
            .index_of(id)
            .ok_or_else(|| ScenarioError::UnknownId(id.clone()))?;
        if !old_idx.contains(&k) {
            old_idx.push(k);
        }
    }
    old_idx.sort_unstable();
    let remap: HashMap<usize, usize> = old_idx.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let measurements: Vec<Measurement> = old_idx
        .iter()
        .map(|&o| s.measurements()[o].clone())
        .collect();
    let mut cands: Vec<Vec<usize>> = Vec::new();
    for c in s.contexts() {
        let r: Vec<usize> = c.iter().filter_map(|k| remap.get(k).copied()).collect();
        if !r.is_empty() {
            cands.push(r);
        }
    }
    let sets: Vec<BTreeSet<usize>> = cands.iter().map(|c| c.iter().copied().collect()).collect();
    let mut contexts = Vec::new();
    for i in 0..cands.len() {
        let dominated = (0..cands.len()).any(|j| {
            j != i && sets[i].is_subset(&sets[j]) && (sets[i].len() < sets[j].len() || j < i)
        });
        if !dominated {
            contexts.push(cands[i].clone());
        }
    }
    Scenario::from_indices(measurements, contexts)
}

/// Bipartite LF experiment with `n_a` and `n_b` settings.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LfSpec {
    pub n_a: usize,
    pub n_b: usize,
    pub card_a: Vec<usize>,
    pub card_b: Vec<usize>,
}

impl LfSpec {
    pub fn binary(n_a: usize, n_b: usize) -> Self {
        LfSpec {
            n_a,
            n_b,
            card_a: vec![2; n_a],
            card_b: vec![2; n_b],
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_a == 0 || self.n_b == 0 {
            return Err(ScenarioError::BadSpec(
                "setting counts must be at least 1".into(),
            ));
        }
        if self.card_a.len() != self.n_a || self.card_b.len() != self.n_b {
            return Err(ScenarioError::BadSpec(
                "cardinality list length mismatch".into(),
            ));
        }
        if self.card_a.iter().chain(&self.card_b).any(|&c| c < 2) {
            return Err(ScenarioError::BadSpec(
                "outcome cardinalities must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Context index of the pair (A_i, B_j), 0-based.
    pub fn context(&self, i: usize, j: usize) -> usize {
        i * self.n_b + j
    }

    /// The same experiment with the two sides exchanged.
    pub fn swapped(&self) -> Self {
        LfSpec {
            n_a: self.n_b,
            n_b: self.n_a,
            card_a: self.card_b.clone(),
            card_b: self.card_a.clone(),
        }
    }
}

/// Complete bipartite compatibility graph: contexts {A_i, B_j} ordered by (i, j).
pub fn build_lf_compatibility_graph(spec: &LfSpec) -> Result<Scenario, ScenarioError> {
    spec.validate()?;
    let mut ms = Vec::new();
    for (i, &c) in spec.card_a.iter().enumerate() {
        ms.push(Measurement {
            id: format!("A{}", i + 1),
            card: c,
        });
    }
    for (j, &c) in spec.card_b.iter().enumerate() {
        ms.push(Measurement {
            id: format!("B{}", j + 1),
            card: c,
        });
    }
    let mut ctx = Vec::new();
    for i in 0..spec.n_a {
        for j in 0..spec.n_b {
            ctx.push(vec![i, spec.n_a + j]);
        }
    }
    Scenario::from_indices(ms, ctx)
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Maverick {
    pub final_choice: usize,
    pub friendless: bool,
}

/// One party of a sequential LF experiment.
///
/// A regular party performs Ω_1..Ω_N in sequence and, between consecutive
/// measurements, binarily chooses to reveal or to continue. A maverick with
/// final choice ξ instead ends with a ξ-valued choice: option 1 reveals Ω_N,
/// option α ≥ 2 reverses Ω_N and measures Ω_{N+α−1}. A friendless maverick has
/// no sequence at all and directly measures one of Ω_1..Ω_ξ.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Party {
    pub sequence_length: usize,
    pub outcome_cards: Vec<usize>,
    pub maverick: Option<Maverick>,
}

impl Party {
    pub fn regular(cards: Vec<usize>) -> Self {
        Party {
            sequence_length: cards.len(),
            outcome_cards: cards,
            maverick: None,
        }
    }

    /// Number of distinct measurements this party can end up revealing.
    pub fn n_measurements(&self) -> usize {
        match &self.maverick {
            None => self.sequence_length,
            Some(m) if m.friendless => m.final_choice,
            Some(m) => self.sequence_length + m.final_choice - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SequentialLfSpec {
    pub parties: Vec<Party>,
}

impl SequentialLfSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.parties.is_empty() {
            return Err(ScenarioError::BadSpec("no parties".into()));
        }
        for (k, p) in self.parties.iter().enumerate() {
            if p.sequence_length == 0 {
                return Err(ScenarioError::BadSpec(format!(
                    "party {k} has an empty sequence"
                )));
            }
            if let Some(m) = &p.maverick {
                if m.final_choice < 2 {
                    return Err(ScenarioError::BadSpec(format!(
                        "party {k} has a final choice below 2"
                    )));
                }
                if m.friendless && p.sequence_length != 1 {
                    return Err(ScenarioError::BadSpec(format!(
                        "friendless party {k} must have sequence length 1"
                    )));
                }
            }
            if p.outcome_cards.len() != p.n_measurements() {
                return Err(ScenarioError::BadSpec(format!(
                    "party {k} lists {} cardinalities for {} measurements",
                    p.outcome_cards.len(),
                    p.n_measurements()
                )));
            }
            if p.outcome_cards.iter().any(|&c| c < 2) {
                return Err(ScenarioError::BadSpec(format!(
                    "party {k} has a cardinality below 2"
                )));
            }
        }
        Ok(())
    }

    pub fn maverick_count(&self) -> usize {
        self.parties.iter().filter(|p| p.maverick.is_some()).count()
    }

    /// The bipartite (N_A, N_B) experiment as a two-party sequential spec.
    ///
    /// A side with three or more settings is a maverick with a one-step
    /// sequence and final choice N; a side with one or two settings is a
    /// regular party. Both sides can thus be mavericks when N_A, N_B ≥ 3.
    pub fn from_lf(spec: &LfSpec) -> Self {
        let side = |n: usize, cards: &[usize]| {
            if n >= 3 {
                Party {
                    sequence_length: 1,
                    outcome_cards: cards.to_vec(),
                    maverick: Some(Maverick {
                        final_choice: n,
                        friendless: false,
                    }),
                }
            } else {
                Party::regular(cards.to_vec())
            }
        };
        SequentialLfSpec {
            parties: vec![side(spec.n_a, &spec.card_a), side(spec.n_b, &spec.card_b)],
        }
    }

    /// Minimal scenario: A regular with two binary measurements, B a friendless maverick with ξ = 2.
    pub fn minimal() -> Self {
        SequentialLfSpec {
            parties: vec![
                Party::regular(vec![2, 2]),
                Party {
                    sequence_length: 1,
                    outcome_cards: vec![2, 2],
                    maverick: Some(Maverick {
                        final_choice: 2,
                        friendless: true,
                    }),
                },
            ],
        }
    }
}

fn party_label(k: usize) -> String {
    const L: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    if k < L.len() {
        (L[k] as char).to_string()
    } else {
        format!("P{k}_")
    }
}

/// Product scenario with one measurement per party in each context.
pub fn build_sequential_scenario(spec: &SequentialLfSpec) -> Result<Scenario, ScenarioError> {
    spec.validate()?;
    let mut ms = Vec::new();
    let mut ranges = Vec::new();
    for (k, p) in spec.parties.iter().enumerate() {
        let start = ms.len();
        for (i, &c) in p.outcome_cards.iter().enumerate() {
            ms.push(Measurement {
                id: format!("{}{}", party_label(k), i + 1),
                card: c,
            });
        }
        ranges.push((start, p.n_measurements()));
    }
    let counts: Vec<usize> = ranges.iter().map(|r| r.1).collect();
    let ctx: Vec<Vec<usize>> = tuples(&counts)
        .map(|t| t.iter().zip(&ranges).map(|(&i, r)| r.0 + i).collect())
        .collect();
    Scenario::from_indices(ms, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn pr_box(s: &Scenario) -> Behavior {
        let mut b = Behavior::zeros(s);
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for bb in 0..2 {
                        if (a ^ bb) == (i & j) {
                            b.set(s, i * 2 + j, &[a, bb], frac(1, 2));
                        }
                    }
                }
            }
        }
        b
    }

    #[test]
    fn bipartite_graphs() {
        let s = build_lf_compatibility_graph(&LfSpec::binary(2, 2)).unwrap();
        assert_eq!(s.measurements().len(), 4);
        assert_eq!(s.contexts().len(), 4);
        let s = build_lf_compatibility_graph(&LfSpec::binary(1, 1)).unwrap();
        assert_eq!(s.contexts(), &[vec![0, 1]]);
        let s = build_lf_compatibility_graph(&LfSpec::binary(3, 2)).unwrap();
        assert_eq!(s.contexts().len(), 6);
        assert!(build_lf_compatibility_graph(&LfSpec {
            n_a: 1,
            n_b: 1,
            card_a: vec![1],
            card_b: vec![2]
        })
        .is_err());
    }

    #[test]
    fn bipartite_counts_exhaustive() {
        for na in 1..=6 {
            for nb in 1..=6 {
                let s = build_lf_compatibility_graph(&LfSpec::binary(na, nb)).unwrap();
                assert_eq!(s.contexts().len(), na * nb);
                assert_eq!(s.measurements().len(), na + nb);
            }
        }
    }

    #[test]
    fn sequential_products() {
        let two = SequentialLfSpec {
            parties: vec![Party::regular(vec![2, 2]), Party::regular(vec![2, 2])],
        };
        assert_eq!(
            build_sequential_scenario(&two).unwrap(),
            build_lf_compatibility_graph(&LfSpec::binary(2, 2)).unwrap()
        );
        let three = SequentialLfSpec {
            parties: vec![Party::regular(vec![2, 2]); 3],
        };
        let s = build_sequential_scenario(&three).unwrap();
        assert_eq!(s.contexts().len(), 8);
        assert!(s.contexts().iter().all(|c| c.len() == 3));
        let mav = SequentialLfSpec {
            parties: vec![
                Party {
                    sequence_length: 1,
                    outcome_cards: vec![2; 3],
                    maverick: Some(Maverick {
                        final_choice: 3,
                        friendless: false,
                    }),
                },
                Party::regular(vec![2, 2]),
            ],
        };
        assert_eq!(build_sequential_scenario(&mav).unwrap().contexts().len(), 6);
    }

    #[test]
    fn pr_box_is_nondisturbing() {
        let s = build_lf_compatibility_graph(&LfSpec::binary(2, 2)).unwrap();
        let b = pr_box(&s);
        b.validate(&s).unwrap();
        assert!(check_no_disturbance(&s, &b).unwrap().ok);
    }

    #[test]
    fn detects_disturbance() {
        let s = build_lf_compatibility_graph(&LfSpec::binary(2, 2)).unwrap();
        let mut b = Behavior::zeros(&s);
        b.set(&s, 0, &[0, 0], frac(1, 1));
        b.set(&s, 1, &[1, 0], frac(1, 1));
        b.set(&s, 2, &[0, 0], frac(1, 1));
        b.set(&s, 3, &[0, 0], frac(1, 1));
        let r = check_no_disturbance(&s, &b).unwrap();
        assert!(!r.ok);
        assert_eq!(r.violations[0].measurement, "A1");
    }

    #[test]
    fn induced() {
        let s = build_lf_compatibility_graph(&LfSpec::binary(3, 3)).unwrap();
        let keep: Vec<String> = ["A1", "A2", "B1", "B2"]
            .iter()
            .map(|x| x.to_string())
            .collect();
        let sub = induced_subscenario(&s, &keep).unwrap();
        assert_eq!(
            sub,
            build_lf_compatibility_graph(&LfSpec::binary(2, 2)).unwrap()
        );
        let all: Vec<String> = s.measurements().iter().map(|m| m.id.clone()).collect();
        assert_eq!(induced_subscenario(&s, &all).unwrap(), s);
        assert_eq!(induced_subscenario(&s, &[]), Err(ScenarioError::EmptyKeep));
    }

    #[test]
    fn rejects_bad_scenarios() {
        let m = |id: &str| Measurement {
            id: id.into(),
            card: 2,
        };
        let c = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert!(matches!(
            Scenario::new(vec![m("a"), m("a")], vec![c(&["a"])]),
            Err(ScenarioError::DuplicateId(_))
        ));
        assert!(matches!(
            Scenario::new(vec![m("a"), m("b")], vec![c(&["a"])]),
            Err(ScenarioError::Uncovered(_))
        ));
        assert!(matches!(
            Scenario::new(vec![m("a"), m("b")], vec![c(&["a", "b"]), c(&["a"])]),
            Err(ScenarioError::NotMaximal(1, 0))
        ));
        assert!(matches!(
            Scenario::new(vec![m("a")], vec![c(&["z"])]),
            Err(ScenarioError::UnknownId(_))
        ));
    }

    #[test]
    fn encode_decode() {
        let cards = [2, 3, 2];
        for i in 0..12 {
            assert_eq!(encode(&decode(i, &cards), &cards), i);
        }
        assert_eq!(decode(5, &cards), vec![0, 2, 1]);
    }
}
