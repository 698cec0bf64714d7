//! Support-level contextuality and its translation into extended Wigner's-friend
//! protocols: one with Bobs and reveal choices (Local Friendliness), one without
//! (commutation irrelevance).

use crate::fixtures::{five_cycle_scenario, peres_mermin_fixture, Realization};
use crate::protocol::{
    simulate_protocol, verify_commutation_irrelevance, Basis, ChoiceOption, ChoiceVector, CiCheck, Op, OutcomeDistribution,
    ProtocolSpec, Rearrangement,
};
use crate::protocols::{friend_register, ProtocolBuilder};
use crate::QuantumError;
use lfpoly_core::formats::ScenarioDoc;
use lfpoly_core::scenario::{self, Behavior, FloatBehavior, Scenario};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// Largest assignment space the brute-force search will enter.
pub const SEARCH_GUARD: u128 = 1 << 30;

/// Tolerance for empirical zeros in no-go verification.
pub const ZERO_TOL: f64 = 1e-10;

/// A set of outcome tuples of one context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSet {
    pub context: usize,
    pub outcomes: Vec<Vec<usize>>,
}

/// Zero events are outcome sets of probability zero; the positive event has
/// nonzero probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PossibilisticModel {
    pub scenario: Scenario,
    pub zero_events: Vec<EventSet>,
    pub positive_event: Option<EventSet>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    scenario: ScenarioDoc,
    #[serde(default)]
    zero_events: Vec<EventSet>,
    #[serde(default)]
    positive_event: Option<EventSet>,
}

impl PossibilisticModel {
    pub fn new(scenario: Scenario, zero_events: Vec<EventSet>, positive_event: Option<EventSet>) -> Result<Self, QuantumError> {
        let m = PossibilisticModel { scenario, zero_events, positive_event };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let s = &self.scenario;
        for e in self.zero_events.iter().chain(&self.positive_event) {
            if e.context >= s.contexts().len() {
                return Err(QuantumError::Invalid(format!("context {} does not exist", e.context)));
            }
            let cards = s.cards(e.context);
            if e.outcomes.is_empty() {
                return Err(QuantumError::Invalid(format!("empty outcome set on context {}", e.context)));
            }
            for t in &e.outcomes {
                if t.len() != cards.len() || t.iter().zip(&cards).any(|(o, c)| o >= c) {
                    return Err(QuantumError::Invalid(format!("outcome {t:?} is outside context {}", e.context)));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, QuantumError> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let s = doc.scenario.to_scenario().map_err(|e| QuantumError::Invalid(e.to_string()))?;
        PossibilisticModel::new(s, doc.zero_events, doc.positive_event)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            scenario: ScenarioDoc::from_scenario(&self.scenario),
            zero_events: self.zero_events.clone(),
            positive_event: self.positive_event.clone(),
        };
        serde_json::to_string(&doc).expect("serializable")
    }

    pub fn context_labels(&self, c: usize) -> Vec<String> {
        self.scenario.context_ids(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextualityResult {
    pub contextual: bool,
    /// A global assignment (outcome per measurement) compatible with all events.
    pub witness: Option<Vec<usize>>,
    pub nodes_visited: u64,
}

/// Depth-first search for a global assignment that lands in the positive event
/// and avoids every zero event. Contexts are checked as soon as they are fully assigned.
pub fn check_possibilistic_contextuality(m: &PossibilisticModel) -> Result<ContextualityResult, QuantumError> {
    m.validate()?;
    let s = &m.scenario;
    let cards: Vec<usize> = s.measurements().iter().map(|x| x.card).collect();
    let size = cards.iter().try_fold(1u128, |acc, &c| acc.checked_mul(c as u128)).unwrap_or(u128::MAX);
    if size > SEARCH_GUARD {
        return Err(QuantumError::SearchGuard(size));
    }
    let n_ctx = s.contexts().len();
    let mut forbidden: Vec<HashSet<Vec<usize>>> = vec![HashSet::new(); n_ctx];
    for e in &m.zero_events {
        forbidden[e.context].extend(e.outcomes.iter().cloned());
    }
    let positive = m.positive_event.as_ref().map(|e| (e.context, e.outcomes.iter().cloned().collect::<HashSet<_>>()));
    let mut closing: Vec<Vec<usize>> = vec![vec![]; cards.len()];
    for (c, members) in s.contexts().iter().enumerate() {
        closing[*members.iter().max().expect("nonempty")].push(c);
    }
    struct Search<'a> {
        s: &'a Scenario,
        cards: Vec<usize>,
        forbidden: Vec<HashSet<Vec<usize>>>,
        positive: Option<(usize, HashSet<Vec<usize>>)>,
        closing: Vec<Vec<usize>>,
        nodes: u64,
        assignment: Vec<usize>,
    }
    impl Search<'_> {
        fn ok(&self, c: usize) -> bool {
            let t: Vec<usize> = self.s.contexts()[c].iter().map(|&k| self.assignment[k]).collect();
            if self.forbidden[c].contains(&t) {
                return false;
            }
            match &self.positive {
                Some((pc, set)) if *pc == c => set.contains(&t),
                _ => true,
            }
        }

        fn go(&mut self, i: usize) -> bool {
            if i == self.cards.len() {
                return true;
            }
            for v in 0..self.cards[i] {
                self.nodes += 1;
                self.assignment[i] = v;
                if self.closing[i].iter().all(|&c| self.ok(c)) && self.go(i + 1) {
                    return true;
                }
            }
            false
        }
    }
    let mut search = Search { s, assignment: vec![0; cards.len()], cards, forbidden, positive, closing, nodes: 0 };
    let found = search.go(0);
    Ok(ContextualityResult {
        contextual: !found,
        witness: found.then(|| search.assignment.clone()),
        nodes_visited: search.nodes,
    })
}

fn support_from_tables(s: &Scenario, zero: impl Fn(usize, usize) -> bool) -> PossibilisticModel {
    let mut zero_events = Vec::new();
    for c in 0..s.contexts().len() {
        let cards = s.cards(c);
        let outcomes: Vec<Vec<usize>> = (0..s.outcome_count(c)).filter(|&i| zero(c, i)).map(|i| scenario::decode(i, &cards)).collect();
        if !outcomes.is_empty() {
            zero_events.push(EventSet { context: c, outcomes });
        }
    }
    PossibilisticModel { scenario: s.clone(), zero_events, positive_event: None }
}

/// Zero events of a float behavior: entries below `tol`. The positive event is left unset.
pub fn extract_support_float(s: &Scenario, b: &FloatBehavior, tol: f64) -> PossibilisticModel {
    support_from_tables(s, |c, i| b.tables[c][i] < tol)
}

/// Zero events of an exact behavior: entries equal to 0. The positive event is left unset.
pub fn extract_support_exact(s: &Scenario, b: &Behavior) -> PossibilisticModel {
    support_from_tables(s, |c, i| b.tables[c][i].is_zero())
}

fn ev(context: usize, outcomes: &[[usize; 2]]) -> EventSet {
    EventSet { context, outcomes: outcomes.iter().map(|o| o.to_vec()).collect() }
}

/// The KCBS cycle argument: four zeros and P(A5=0, A1=1) > 0.
pub fn ksnc_5cycle_model() -> PossibilisticModel {
    let zeros = vec![ev(0, &[[1, 1]]), ev(1, &[[0, 0]]), ev(2, &[[1, 1]]), ev(3, &[[0, 0]])];
    PossibilisticModel::new(five_cycle_scenario(), zeros, Some(ev(4, &[[0, 1]]))).expect("valid")
}

/// The same cycle written as a chain starting from P(A1=1, A2=0) > 0: the
/// fifth context's zero P(A5=1, A1=1) = 0 closes the loop.
pub fn lf_5cycle_model() -> PossibilisticModel {
    let zeros = vec![ev(0, &[[1, 1]]), ev(1, &[[0, 0]]), ev(2, &[[1, 1]]), ev(3, &[[0, 0]]), ev(4, &[[1, 1]])];
    PossibilisticModel::new(five_cycle_scenario(), zeros, Some(ev(0, &[[1, 0]]))).expect("valid")
}

/// Parity zeros of the Peres–Mermin square; the positive event is the whole first row.
pub fn peres_mermin_model() -> PossibilisticModel {
    let pm = peres_mermin_fixture();
    let s = pm.scenario;
    let mut zeros = Vec::new();
    for (c, sign) in [1, 1, 1, 1, 1, -1].into_iter().enumerate() {
        // outcome 0 is the −1 eigenvalue
        let outcomes = scenario::tuples(&s.cards(c))
            .filter(|t| {
                let prod: i32 = t.iter().map(|&o| if o == 0 { -1 } else { 1 }).product();
                prod != sign
            })
            .collect();
        zeros.push(EventSet { context: c, outcomes });
    }
    let all = scenario::tuples(&s.cards(0)).collect();
    PossibilisticModel::new(s, zeros, Some(EventSet { context: 0, outcomes: all })).expect("valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    MaxOverlap,
    MinOverlap,
}

/// One link of a context chain: reverse `undo`, then perform `measure`.
#[derive(Debug, Clone, PartialEq)]
struct Link {
    context: usize,
    undo: Vec<usize>,
    measure: Vec<usize>,
}

/// Greedy context chain starting at the positive context. With `all_contexts`
/// every context is visited; otherwise the chain stops once every measurement
/// has been performed. Measurements are never repeated.
fn context_chain(m: &PossibilisticModel, ordering: Ordering, all_contexts: bool) -> Vec<Link> {
    let s = &m.scenario;
    let n = s.measurements().len();
    let sets: Vec<BTreeSet<usize>> = s.contexts().iter().map(|c| c.iter().copied().collect()).collect();
    let start = m.positive_event.as_ref().map_or(0, |e| e.context);
    let mut performed = vec![false; n];
    let mut alive: Vec<usize> = Vec::new();
    let mut visited = vec![false; sets.len()];
    let mut chain = Vec::new();
    let mut current = start;
    loop {
        let c = current;
        visited[c] = true;
        let undo: Vec<usize> = alive.iter().rev().copied().filter(|k| !sets[c].contains(k)).collect();
        let measure: Vec<usize> = sets[c].iter().copied().filter(|&k| !performed[k]).collect();
        alive.retain(|k| sets[c].contains(k));
        for &k in &measure {
            performed[k] = true;
            alive.push(k);
        }
        alive.sort_unstable();
        chain.push(Link { context: c, undo, measure });
        let done = if all_contexts { visited.iter().all(|&v| v) } else { performed.iter().all(|&p| p) };
        if done {
            return chain;
        }
        let overlap = |d: usize| sets[d].intersection(&sets[c]).count();
        let candidates = (0..sets.len()).filter(|&d| !visited[d]);
        current = match ordering {
            // min_by_key / max_by_key keep the first or last extreme; fold explicitly for lowest index
            Ordering::MaxOverlap => candidates.fold(None, |best: Option<usize>, d| match best {
                Some(b) if overlap(b) >= overlap(d) => Some(b),
                _ => Some(d),
            }),
            Ordering::MinOverlap => candidates.fold(None, |best: Option<usize>, d| match best {
                Some(b) if overlap(b) <= overlap(d) => Some(b),
                _ => Some(d),
            }),
        }
        .expect("an unvisited context remains");
    }
}

fn check_realization(m: &PossibilisticModel, real: &Realization) -> Result<Vec<String>, QuantumError> {
    m.validate()?;
    real.check(&m.scenario).map_err(|e| QuantumError::Invalid(format!("inconsistent realization: {e}")))?;
    Ok(m.scenario.measurements().iter().map(|x| x.id.clone()).collect())
}

/// LF protocol for a possibilistic model: one friend and one Bob per measurement,
/// Alice walking the context chain. Before each link that measures something new
/// she may reveal all live friends (choice x_k, option 1) or continue (option 2).
pub fn ks_to_lf_translate(m: &PossibilisticModel, real: &Realization, ordering: Ordering) -> Result<ProtocolSpec, QuantumError> {
    let labels = check_realization(m, real)?;
    let mut b = ProtocolBuilder::new(real, &labels)?;
    for l in &labels {
        b.add_bob(l)?;
    }
    let mut alive: Vec<usize> = Vec::new();
    for (k, link) in context_chain(m, ordering, false).iter().enumerate() {
        if link.measure.is_empty() {
            continue;
        }
        if k > 0 {
            b.choice_reveal(&alive.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>());
        }
        let keep: BTreeSet<usize> = m.scenario.contexts()[link.context].iter().copied().collect();
        for &i in alive.iter().rev().filter(|i| !keep.contains(i)) {
            b.undo(&labels[i])?;
        }
        alive.retain(|i| keep.contains(i));
        for &i in &link.measure {
            b.measure(&labels[i]);
            alive.push(i);
        }
        alive.sort_unstable();
    }
    b.reveal(&alive.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>());
    b.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Zero,
    Positive,
    Bridge,
    Normalization,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub tag: String,
    pub value: f64,
    pub tol: f64,
    pub kind: ConstraintKind,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoGoReport {
    pub constraints_verified: Vec<Constraint>,
    /// Whether the verified constraints admit no global assignment.
    pub contextual: bool,
    pub contradiction: bool,
    pub assignment_search_size: u64,
}

/// A place where Alice's friends become visible: a reveal option of a choice or a plain reveal.
#[derive(Debug, Clone)]
struct RevealPoint {
    pos: usize,
    name: String,
    choice: Option<(String, usize)>,
    alive: BTreeSet<String>,
}

struct Bob {
    register: String,
    choice: String,
    computational: usize,
}

struct LfView<'a> {
    p: &'a ProtocolSpec,
    points: Vec<RevealPoint>,
    bobs: BTreeMap<String, Bob>,
    base: ChoiceVector,
    cache: BTreeMap<ChoiceVector, OutcomeDistribution>,
}

impl<'a> LfView<'a> {
    fn new(p: &'a ProtocolSpec) -> Result<Self, QuantumError> {
        p.validate()?;
        let mut friend_of = BTreeMap::new();
        for s in &p.timeline {
            if let Op::Measure { measurement, friend } = &s.op {
                friend_of.entry(friend.clone()).or_insert_with(|| measurement.clone());
            }
        }
        let alive = |regs: &[String]| regs.iter().filter_map(|r| friend_of.get(r).cloned()).collect::<BTreeSet<_>>();
        let mut points = Vec::new();
        let mut base = ChoiceVector::new();
        let mut remote_steps = BTreeMap::new();
        for (pos, s) in p.timeline.iter().enumerate() {
            match &s.op {
                Op::Choice { id, options } => {
                    let cont = options.iter().position(|o| *o == ChoiceOption::Continue);
                    base.insert(id.clone(), cont.map_or(1, |i| i + 1));
                    for (i, o) in options.iter().enumerate() {
                        if let ChoiceOption::Reveal { registers } = o {
                            let name = if options.len() == 2 { id.clone() } else { format!("{id}={}", i + 1) };
                            points.push(RevealPoint { pos, name, choice: Some((id.clone(), i + 1)), alive: alive(registers) });
                        }
                    }
                }
                Op::Reveal { registers } => {
                    points.push(RevealPoint { pos, name: format!("reveal@{pos}"), choice: None, alive: alive(registers) });
                }
                Op::Remote { choice, register, bases } => {
                    remote_steps.insert(register.clone(), (choice.clone(), bases.clone()));
                }
                _ => {}
            }
        }
        let mut bobs = BTreeMap::new();
        for c in &p.initial.couplings {
            let Some((choice, bases)) = remote_steps.get(&c.remote) else { continue };
            let (Some(comp), Some(pm)) =
                (bases.iter().position(|b| *b == Basis::Computational), bases.iter().position(|b| *b == Basis::PlusMinus))
            else {
                continue;
            };
            base.insert(choice.clone(), pm + 1);
            bobs.insert(
                c.measurement.clone(),
                Bob { register: c.remote.clone(), choice: choice.clone(), computational: comp + 1 },
            );
        }
        if let Some(last) = points.iter().rposition(|pt| pt.choice.is_none()) {
            points[last].name = "final".into();
        }
        Ok(LfView { p, points, bobs, base, cache: BTreeMap::new() })
    }

    fn choices(&self, point: &RevealPoint, computational: &BTreeSet<String>) -> ChoiceVector {
        let mut c = self.base.clone();
        if let Some((id, opt)) = &point.choice {
            c.insert(id.clone(), *opt);
        }
        for m in computational {
            let b = &self.bobs[m];
            c.insert(b.choice.clone(), b.computational);
        }
        c
    }

    fn run(&mut self, c: ChoiceVector) -> Result<&OutcomeDistribution, QuantumError> {
        if !self.cache.contains_key(&c) {
            let d = simulate_protocol(self.p, &c)?;
            self.cache.insert(c.clone(), d);
        }
        Ok(&self.cache[&c])
    }

    /// Reveal point for a context: most live members, the rest covered by Bobs; ties go to the latest point.
    fn point_for(&self, members: &[String]) -> Option<RevealPoint> {
        self.points
            .iter()
            .filter(|pt| members.iter().all(|m| pt.alive.contains(m) || self.bobs.contains_key(m)))
            .max_by_key(|pt| (members.iter().filter(|m| pt.alive.contains(*m)).count(), pt.pos))
            .cloned()
    }

    /// ℘(context outcomes ∈ set, every other Bob = +), reading live members from
    /// friends and the others from their Bobs in the computational basis.
    fn event_probability(&mut self, members: &[String], outcomes: &[Vec<usize>]) -> Result<(f64, String), QuantumError> {
        let pt = self.point_for(members).ok_or_else(|| {
            QuantumError::Invalid(format!("no reveal point exposes context {} (missing Bobs?)", members.join(",")))
        })?;
        let via_bob: BTreeSet<String> = members.iter().filter(|m| !pt.alive.contains(*m)).cloned().collect();
        let mut names: Vec<String> = members
            .iter()
            .map(|m| if via_bob.contains(m) { self.bobs[m].register.clone() } else { friend_register(m) })
            .collect();
        let rest: Vec<String> = self.bobs.iter().filter(|(m, _)| !via_bob.contains(*m)).map(|(_, b)| b.register.clone()).collect();
        names.extend(rest);
        let k = members.len();
        let set: HashSet<&Vec<usize>> = outcomes.iter().collect();
        let c = self.choices(&pt, &via_bob);
        let d = self.run(c)?;
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let v = d.prob_where(&refs, |vals| set.contains(&vals[..k].to_vec()) && vals[k..].iter().all(|&x| x == 0))?;
        Ok((v, pt.name))
    }
}

/// Simulates the runs the LF argument needs and checks every empirical constraint:
/// each zero event (friends for live members, computational-basis Bobs for the rest,
/// all other Bobs conditioned on +), the positive event, the friend/Bob agreement
/// used to bridge between runs (other Bobs conditioned on +), and ℘(all Bobs +) = ∏ 1/d. The contradiction holds
/// when all checks pass and the verified constraints are possibilistically contextual.
pub fn verify_lf_no_go(p: &ProtocolSpec, m: &PossibilisticModel) -> Result<NoGoReport, QuantumError> {
    m.validate()?;
    let pos = m.positive_event.as_ref().ok_or_else(|| QuantumError::Invalid("the model has no positive event".into()))?;
    let mut view = LfView::new(p)?;
    let mut out = Vec::new();
    let mut verified = Vec::new();
    let mut bridged = BTreeSet::new();
    for (i, e) in m.zero_events.iter().enumerate() {
        let members = m.context_labels(e.context);
        let (value, at) = view.event_probability(&members, &e.outcomes)?;
        let ok = value <= ZERO_TOL;
        if ok {
            verified.push(e.clone());
        }
        if let Some(pt) = view.point_for(&members) {
            bridged.extend(members.iter().filter(|x| !pt.alive.contains(*x)).cloned());
        }
        out.push(Constraint { tag: format!("zero[{i}] {} @ {at}", members.join(",")), value, tol: ZERO_TOL, kind: ConstraintKind::Zero, ok });
    }
    let members = m.context_labels(pos.context);
    let (value, at) = view.event_probability(&members, &pos.outcomes)?;
    if let Some(pt) = view.point_for(&members) {
        bridged.extend(members.iter().filter(|x| !pt.alive.contains(*x)).cloned());
    }
    out.push(Constraint {
        tag: format!("positive {} @ {at}", members.join(",")),
        value,
        tol: ZERO_TOL,
        kind: ConstraintKind::Positive,
        ok: value > ZERO_TOL,
    });
    for label in &bridged {
        let first = view.points.iter().filter(|pt| pt.alive.contains(label)).min_by_key(|pt| pt.pos).cloned();
        let (value, tag) = match first {
            Some(pt) => {
                let c = view.choices(&pt, &BTreeSet::from([label.clone()]));
                let mut names = vec![friend_register(label), view.bobs[label].register.clone()];
                names.extend(view.bobs.iter().filter(|(m, _)| *m != label).map(|(_, b)| b.register.clone()));
                let d = view.run(c)?;
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                let v = d.prob_where(&refs, |v| v[0] != v[1] && v[2..].iter().all(|&x| x == 0))?;
                (v, format!("bridge {label} @ {}", pt.name))
            }
            None => (1.0, format!("bridge {label}: never revealed")),
        };
        out.push(Constraint { tag, value, tol: ZERO_TOL, kind: ConstraintKind::Bridge, ok: value <= ZERO_TOL });
    }
    if !view.bobs.is_empty() {
        let final_pt = RevealPoint { pos: usize::MAX, name: "final".into(), choice: None, alive: BTreeSet::new() };
        let c = view.choices(&final_pt, &BTreeSet::new());
        let regs: Vec<String> = view.bobs.values().map(|b| b.register.clone()).collect();
        let expect: f64 = regs.iter().map(|r| 1.0 / p.registers[p.register_index(r).expect("validated")].dim as f64).product();
        let d = view.run(c)?;
        let refs: Vec<&str> = regs.iter().map(String::as_str).collect();
        let value = d.prob_where(&refs, |v| v.iter().all(|&x| x == 0))?;
        out.push(Constraint {
            tag: "all bobs +".into(),
            value,
            tol: ZERO_TOL,
            kind: ConstraintKind::Normalization,
            ok: (value - expect).abs() <= ZERO_TOL,
        });
    }
    let induced = PossibilisticModel { scenario: m.scenario.clone(), zero_events: verified, positive_event: Some(pos.clone()) };
    let res = check_possibilistic_contextuality(&induced)?;
    let all_ok = out.iter().all(|c| c.ok);
    Ok(NoGoReport {
        constraints_verified: out,
        contextual: res.contextual,
        contradiction: all_ok && res.contextual,
        assignment_search_size: res.nodes_visited,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiTranslation {
    pub protocol: ProtocolSpec,
    /// One rearrangement per chain context after the first.
    pub rearrangements: Vec<Rearrangement>,
    /// Context indices in chain order.
    pub chain: Vec<usize>,
}

/// Commutation-irrelevance protocol: no Bobs and no choices, Alice walks a chain
/// through every context and all friends still live are revealed at the end.
/// For each later context the rearrangement moves that context's measurements to
/// the front of the prefix ending at its last measurement.
pub fn ks_to_ci_translate(m: &PossibilisticModel, real: &Realization, ordering: Ordering) -> Result<CiTranslation, QuantumError> {
    let labels = check_realization(m, real)?;
    let mut b = ProtocolBuilder::new(real, &labels)?;
    let chain = context_chain(m, ordering, true);
    let mut alive: Vec<usize> = Vec::new();
    let mut measured_at = BTreeMap::new();
    let mut pos = 0;
    for link in &chain {
        for &i in &link.undo {
            b.undo(&labels[i])?;
            pos += 1;
        }
        alive.retain(|i| !link.undo.contains(i));
        for &i in &link.measure {
            b.measure(&labels[i]);
            measured_at.insert(i, pos);
            pos += 1;
            alive.push(i);
        }
        alive.sort_unstable();
    }
    b.reveal(&alive.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>());
    let protocol = b.finish()?;
    let mut rearrangements = Vec::new();
    for link in chain.iter().skip(1) {
        rearrangements.push(block_rearrangement(m, &labels, &measured_at, link.context));
    }
    Ok(CiTranslation { protocol, rearrangements, chain: chain.iter().map(|l| l.context).collect() })
}

fn block_rearrangement(m: &PossibilisticModel, labels: &[String], measured_at: &BTreeMap<usize, usize>, c: usize) -> Rearrangement {
    let members = &m.scenario.contexts()[c];
    let mut block: Vec<usize> = members.iter().map(|i| measured_at[i]).collect();
    block.sort_unstable();
    let end = block.last().expect("nonempty") + 1;
    let mut order = block.clone();
    order.extend((0..end).filter(|i| !block.contains(i)));
    Rearrangement {
        context: members.iter().map(|&i| labels[i].clone()).collect(),
        order,
        block_end: block.len(),
        readout: members.iter().map(|&i| friend_register(&labels[i])).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiReport {
    pub checks: Vec<CiCheck>,
    pub constraints_verified: Vec<Constraint>,
    pub contextual: bool,
    pub contradiction: bool,
    pub assignment_search_size: u64,
}

/// Runs every rearrangement check, reads each context's block distribution and tests
/// the model's events on it. The first chain context needs no rearrangement; its
/// block is the opening run of measurements.
pub fn verify_ci_no_go(t: &CiTranslation, m: &PossibilisticModel) -> Result<CiReport, QuantumError> {
    m.validate()?;
    let p = &t.protocol;
    let first = t.chain.first().copied().ok_or_else(|| QuantumError::Invalid("empty chain".into()))?;
    let members = m.context_labels(first);
    let opening = Rearrangement {
        context: members.clone(),
        order: (0..members.len()).collect(),
        block_end: members.len(),
        readout: members.iter().map(|l| friend_register(l)).collect(),
    };
    let mut checks = vec![verify_commutation_irrelevance(p, &opening)?];
    for r in &t.rearrangements {
        checks.push(verify_commutation_irrelevance(p, r)?);
    }
    let mut out = Vec::new();
    for c in &checks[1..] {
        out.push(Constraint {
            tag: format!("identity {}", c.context.join(",")),
            value: c.operator_deviation.max(c.distribution_deviation),
            tol: crate::protocol::CI_TOL,
            kind: ConstraintKind::Identity,
            ok: c.unitary_identity && c.distribution_equal,
        });
    }
    let block_of = |ctx: usize| {
        let labels = m.context_labels(ctx);
        checks.iter().find(|c| c.context == labels).map(|c| &c.block)
    };
    let prob = |ctx: usize, outcomes: &[Vec<usize>]| -> Result<f64, QuantumError> {
        let d = block_of(ctx).ok_or_else(|| QuantumError::Invalid(format!("context {ctx} is not in the chain")))?;
        let set: HashSet<&Vec<usize>> = outcomes.iter().collect();
        let names: Vec<&str> = d.names.iter().map(String::as_str).collect();
        d.prob_where(&names, |v| set.contains(&v.to_vec()))
    };
    let mut verified = Vec::new();
    for (i, e) in m.zero_events.iter().enumerate() {
        let value = prob(e.context, &e.outcomes)?;
        let ok = value <= ZERO_TOL;
        if ok {
            verified.push(e.clone());
        }
        out.push(Constraint {
            tag: format!("zero[{i}] {}", m.context_labels(e.context).join(",")),
            value,
            tol: ZERO_TOL,
            kind: ConstraintKind::Zero,
            ok,
        });
    }
    if let Some(e) = &m.positive_event {
        let value = prob(e.context, &e.outcomes)?;
        out.push(Constraint {
            tag: format!("positive {}", m.context_labels(e.context).join(",")),
            value,
            tol: ZERO_TOL,
            kind: ConstraintKind::Positive,
            ok: value > ZERO_TOL,
        });
    }
    let induced = PossibilisticModel { scenario: m.scenario.clone(), zero_events: verified, positive_event: m.positive_event.clone() };
    let res = check_possibilistic_contextuality(&induced)?;
    let all_ok = out.iter().all(|c| c.ok);
    Ok(CiReport {
        checks,
        constraints_verified: out,
        contextual: res.contextual,
        contradiction: all_ok && res.contextual,
        assignment_search_size: res.nodes_visited,
    })
}
