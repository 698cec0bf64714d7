//! Marginal-problem LPs: Bell/KSNC membership, LF membership, gluing.

use crate::dd;
use crate::lp::{self, Certificate, LinearProgram, LpError};
use crate::polytope::{
    self, Equality, Extremum, HPolytope, Inequality, Membership, Polyhedron, PolytopeError,
    VPolytope,
};
use crate::rational::{self, Rational};
use crate::scenario::{self, decode, encode, tuples, Behavior, LfSpec, Scenario, ScenarioError};
use num_traits::{One, Zero};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarginalError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("overlap marginals differ at {outcome:?} on {vars:?}: {left} vs {right}")]
    OverlapMismatch {
        vars: Vec<String>,
        outcome: Vec<usize>,
        left: String,
        right: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Joint distribution over named variables, table indexed by [`encode`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub vars: Vec<String>,
    pub cards: Vec<usize>,
    pub table: Vec<Rational>,
}

impl JointDistribution {
    pub fn new(
        vars: Vec<String>,
        cards: Vec<usize>,
        table: Vec<Rational>,
    ) -> Result<Self, MarginalError> {
        if vars.len() != cards.len() || table.len() != cards.iter().product::<usize>() {
            return Err(MarginalError::Invalid(
                "joint distribution shape mismatch".into(),
            ));
        }
        Ok(JointDistribution { vars, cards, table })
    }

    pub fn get(&self, outcome: &[usize]) -> &Rational {
        &self.table[encode(outcome, &self.cards)]
    }

    pub fn total(&self) -> Rational {
        self.table.iter().sum()
    }

    pub fn is_distribution(&self) -> bool {
        self.table.iter().all(|p| *p >= Rational::zero()) && self.total().is_one()
    }

    fn position(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|x| x == v)
    }

    /// Marginal on the listed variables, in that order.
    pub fn marginal(&self, vars: &[String]) -> Result<JointDistribution, MarginalError> {
        let pos: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.position(v)
                    .ok_or_else(|| MarginalError::Invalid(format!("unknown variable {v}")))
            })
            .collect::<Result<_, _>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let mut table = vec![Rational::zero(); cards.iter().product()];
        for (i, p) in self.table.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let t = decode(i, &self.cards);
            let sub: Vec<usize> = pos.iter().map(|&k| t[k]).collect();
            table[encode(&sub, &cards)] += p;
        }
        Ok(JointDistribution {
            vars: vars.to_vec(),
            cards,
            table,
        })
    }
}

/// Glues two distributions that agree on their shared variables:
/// P(u) = p1(u₁)·p2(u₂) / m(u_shared), and 0 where the shared marginal vanishes.
pub fn glue(
    p1: &JointDistribution,
    p2: &JointDistribution,
) -> Result<JointDistribution, MarginalError> {
    let shared: Vec<String> = p1
        .vars
        .iter()
        .filter(|v| p2.vars.contains(v))
        .cloned()
        .collect();
    for v in &shared {
        let (a, b) = (p1.position(v).unwrap(), p2.position(v).unwrap());
        if p1.cards[a] != p2.cards[b] {
            return Err(MarginalError::Invalid(format!(
                "variable {v} has different cardinalities"
            )));
        }
    }
    let m1 = p1.marginal(&shared)?;
    let m2 = p2.marginal(&shared)?;
    if let Some(i) = (0..m1.table.len()).find(|&i| m1.table[i] != m2.table[i]) {
        return Err(MarginalError::OverlapMismatch {
            vars: shared,
            outcome: decode(i, &m1.cards),
            left: rational::fmt(&m1.table[i]),
            right: rational::fmt(&m2.table[i]),
        });
    }
    let mut vars = p1.vars.clone();
    let mut cards = p1.cards.clone();
    for (v, &c) in p2.vars.iter().zip(&p2.cards) {
        if !shared.contains(v) {
            vars.push(v.clone());
            cards.push(c);
        }
    }
    let pos1: Vec<usize> = p1
        .vars
        .iter()
        .map(|v| vars.iter().position(|x| x == v).unwrap())
        .collect();
    let pos2: Vec<usize> = p2
        .vars
        .iter()
        .map(|v| vars.iter().position(|x| x == v).unwrap())
        .collect();
    let poss: Vec<usize> = shared
        .iter()
        .map(|v| vars.iter().position(|x| x == v).unwrap())
        .collect();
    let mut table = vec![Rational::zero(); cards.iter().product()];
    for (i, slot) in table.iter_mut().enumerate() {
        let u = decode(i, &cards);
        let us: Vec<usize> = poss.iter().map(|&k| u[k]).collect();
        let m = m1.get(&us);
        if m.is_zero() {
            continue;
        }
        let u1: Vec<usize> = pos1.iter().map(|&k| u[k]).collect();
        let u2: Vec<usize> = pos2.iter().map(|&k| u[k]).collect();
        let a = p1.get(&u1);
        let b = p2.get(&u2);
        if a.is_zero() || b.is_zero() {
            continue;
        }
        *slot = a * b / m;
    }
    Ok(JointDistribution { vars, cards, table })
}

/// One equality row: Σ beh·b + Σ aux·y = rhs.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedRow {
    pub beh: Vec<(usize, Rational)>,
    pub aux: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

/// The projection {b : ∃ y ≥ 0, E b + F y = c} onto behavior coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPolytope {
    pub n_behavior: usize,
    pub n_aux: usize,
    pub rows: Vec<LiftedRow>,
    /// Named blocks of auxiliary variables, as (vars, cards, offset).
    pub blocks: Vec<(Vec<String>, Vec<usize>, usize)>,
}

/// rhs_i(b) = constant_i + Σ coeff·b_k for every row of a membership LP.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub n_behavior: usize,
    pub rows: Vec<(Rational, Vec<(usize, Rational)>)>,
}

/// Turns a Farkas certificate of a membership LP into an inequality over
/// behavior coordinates that every member satisfies and the query violates.
pub fn farkas_to_inequality(
    cert: &Certificate,
    embedding: &Embedding,
) -> Result<Inequality, MarginalError> {
    let Certificate::Infeasible { farkas } = cert else {
        return Err(MarginalError::Invalid(
            "certificate is not an infeasibility certificate".into(),
        ));
    };
    if farkas.len() != embedding.rows.len() {
        return Err(MarginalError::Invalid(format!(
            "certificate has {} multipliers, embedding has {} rows",
            farkas.len(),
            embedding.rows.len()
        )));
    }
    // For members, Σ λ_i rhs_i(b) ≥ 0, i.e. −Σ_k (Σ_i λ_i e_ik) b_k ≤ Σ_i λ_i c_i.
    let mut coeffs = vec![Rational::zero(); embedding.n_behavior];
    let mut bound = Rational::zero();
    for (lam, (c, terms)) in farkas.iter().zip(&embedding.rows) {
        if lam.is_zero() {
            continue;
        }
        bound += lam * c;
        for (k, e) in terms {
            if *k >= embedding.n_behavior {
                return Err(MarginalError::Invalid(
                    "embedding coordinate out of range".into(),
                ));
            }
            coeffs[*k] -= lam * e;
        }
    }
    Ok(Inequality::new(coeffs, bound).normalized())
}

/// Outcome of a membership query.
#[derive(Debug, Clone, PartialEq)]
pub enum MembershipCore {
    Member(Vec<Rational>),
    Separated(Inequality),
}

impl LiftedPolytope {
    pub fn new(n_behavior: usize) -> Self {
        LiftedPolytope {
            n_behavior,
            n_aux: 0,
            rows: Vec::new(),
            blocks: Vec::new(),
        }
    }

    /// Appends a block of nonnegative auxiliary variables; returns its offset.
    pub fn add_block(&mut self, vars: Vec<String>, cards: Vec<usize>) -> usize {
        let off = self.n_aux;
        self.n_aux += cards.iter().product::<usize>();
        self.blocks.push((vars, cards, off));
        off
    }

    pub fn add_aux(&mut self, n: usize) -> usize {
        let off = self.n_aux;
        self.n_aux += n;
        off
    }

    pub fn push(
        &mut self,
        beh: Vec<(usize, Rational)>,
        aux: Vec<(usize, Rational)>,
        rhs: Rational,
    ) {
        self.rows.push(LiftedRow { beh, aux, rhs });
    }

    /// The LP over auxiliary variables for a fixed behavior, and its embedding.
    pub fn membership_lp(&self, b: &[Rational]) -> (LinearProgram, Embedding) {
        let mut p = LinearProgram::all_nonneg(self.n_aux);
        let mut emb = Embedding {
            n_behavior: self.n_behavior,
            rows: Vec::new(),
        };
        for r in &self.rows {
            let mut coeffs = vec![Rational::zero(); self.n_aux];
            for (k, a) in &r.aux {
                coeffs[*k] += a;
            }
            let mut rhs = r.rhs.clone();
            for (k, e) in &r.beh {
                rhs -= e * &b[*k];
            }
            p.add_eq(coeffs, rhs);
            emb.rows.push((
                r.rhs.clone(),
                r.beh.iter().map(|(k, e)| (*k, -e.clone())).collect(),
            ));
        }
        (p, emb)
    }

    /// LP over (b free, y ≥ 0).
    pub fn joint_lp(&self) -> LinearProgram {
        let n = self.n_behavior + self.n_aux;
        let mut p = LinearProgram::new(n);
        p.nonneg = (self.n_behavior..n).collect();
        for r in &self.rows {
            let mut coeffs = vec![Rational::zero(); n];
            for (k, e) in &r.beh {
                coeffs[*k] += e;
            }
            for (k, a) in &r.aux {
                coeffs[self.n_behavior + *k] += a;
            }
            p.add_eq(coeffs, r.rhs.clone());
        }
        p
    }

    pub fn check_membership(&self, b: &[Rational]) -> Result<MembershipCore, MarginalError> {
        if b.len() != self.n_behavior {
            return Err(MarginalError::Invalid(format!(
                "behavior has {} coordinates, expected {}",
                b.len(),
                self.n_behavior
            )));
        }
        let (p, emb) = self.membership_lp(b);
        match lp::solve_feasibility(&p)? {
            Certificate::Feasible { point } => Ok(MembershipCore::Member(point)),
            cert @ Certificate::Infeasible { .. } => Ok(MembershipCore::Separated(
                farkas_to_inequality(&cert, &emb)?,
            )),
            Certificate::Unbounded { .. } => {
                unreachable!("feasibility never reports unboundedness")
            }
        }
    }

    /// Concatenation: the intersection of the two projections.
    pub fn intersect(&self, other: &LiftedPolytope) -> Result<LiftedPolytope, MarginalError> {
        if self.n_behavior != other.n_behavior {
            return Err(PolytopeError::DimensionMismatch(self.n_behavior, other.n_behavior).into());
        }
        let mut out = self.clone();
        let off = out.n_aux;
        out.n_aux += other.n_aux;
        for (v, c, o) in &other.blocks {
            out.blocks.push((v.clone(), c.clone(), o + off));
        }
        for r in &other.rows {
            out.rows.push(LiftedRow {
                beh: r.beh.clone(),
                aux: r.aux.iter().map(|(k, a)| (k + off, a.clone())).collect(),
                rhs: r.rhs.clone(),
            });
        }
        Ok(out)
    }

    /// Splits an auxiliary point into its named blocks.
    pub fn block_distributions(&self, y: &[Rational]) -> Vec<JointDistribution> {
        self.blocks
            .iter()
            .map(|(v, c, off)| {
                let n: usize = c.iter().product();
                JointDistribution {
                    vars: v.clone(),
                    cards: c.clone(),
                    table: y[*off..off + n].to_vec(),
                }
            })
            .collect()
    }
}

impl Polyhedron for LiftedPolytope {
    fn ambient_dim(&self) -> usize {
        self.n_behavior
    }

    fn maximize(&self, c: &[Rational]) -> Result<Extremum, PolytopeError> {
        if c.len() != self.n_behavior {
            return Err(PolytopeError::DimensionMismatch(c.len(), self.n_behavior));
        }
        let mut obj = c.to_vec();
        obj.resize(self.n_behavior + self.n_aux, Rational::zero());
        let nb = self.n_behavior;
        polytope::from_outcome(lp::maximize(&self.joint_lp(), obj), |x| x[..nb].to_vec())
    }
}

impl Membership for LiftedPolytope {
    fn ambient(&self) -> usize {
        self.n_behavior
    }

    fn is_member(&self, x: &[Rational]) -> Result<bool, PolytopeError> {
        match self.check_membership(x) {
            Ok(MembershipCore::Member(_)) => Ok(true),
            Ok(MembershipCore::Separated(_)) => Ok(false),
            Err(MarginalError::Polytope(e)) => Err(e),
            Err(MarginalError::Lp(e)) => Err(e.into()),
            Err(e) => Err(PolytopeError::Other(e.to_string())),
        }
    }
}

/// Adds rows tying the marginal of an auxiliary block (on `positions`) to the
/// coordinates of context `ctx`, whose members appear in the same order.
pub(crate) fn tie_block_to_context(
    lp: &mut LiftedPolytope,
    s: &Scenario,
    block_cards: &[usize],
    off: usize,
    positions: &[usize],
    ctx: usize,
) {
    let sub: Vec<usize> = positions.iter().map(|&p| block_cards[p]).collect();
    let mut groups: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); sub.iter().product()];
    for (i, t) in tuples(block_cards).enumerate() {
        let st: Vec<usize> = positions.iter().map(|&p| t[p]).collect();
        groups[encode(&st, &sub)].push((off + i, Rational::one()));
    }
    let base = s.offset(ctx);
    for (o, aux) in groups.into_iter().enumerate() {
        lp.push(vec![(base + o, -Rational::one())], aux, Rational::zero());
    }
}

/// Rows forcing two blocks to agree on a marginal.
pub(crate) fn agree(
    lp: &mut LiftedPolytope,
    a: (&[usize], usize, &[usize]),
    b: (&[usize], usize, &[usize]),
) {
    let sub: Vec<usize> = a.2.iter().map(|&p| a.0[p]).collect();
    let n: usize = sub.iter().product();
    let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
    for (cards, off, pos, sign) in [
        (a.0, a.1, a.2, Rational::one()),
        (b.0, b.1, b.2, -Rational::one()),
    ] {
        for (i, t) in tuples(cards).enumerate() {
            let st: Vec<usize> = pos.iter().map(|&p| t[p]).collect();
            rows[encode(&st, &sub)].push((off + i, sign.clone()));
        }
    }
    for r in rows {
        lp.push(Vec::new(), r, Rational::zero());
    }
}

pub(crate) fn normalize_block(lp: &mut LiftedPolytope, off: usize, n: usize) {
    lp.push(
        Vec::new(),
        (off..off + n).map(|k| (k, Rational::one())).collect(),
        Rational::one(),
    );
}

/// Bell/KSNC polytope: behaviors that are marginals of one global distribution.
pub fn bell_polytope(s: &Scenario) -> Result<LiftedPolytope, MarginalError> {
    let cards: Vec<usize> = s.measurements().iter().map(|m| m.card).collect();
    let total = s
        .n_global()
        .filter(|&n| n <= 1 << 22)
        .ok_or_else(|| MarginalError::Invalid("global assignment space too large".into()))?;
    let mut p = LiftedPolytope::new(s.n_coords());
    let vars = s.measurements().iter().map(|m| m.id.clone()).collect();
    let off = p.add_block(vars, cards.clone());
    for c in 0..s.contexts().len() {
        tie_block_to_context(&mut p, s, &cards, off, &s.contexts()[c], c);
    }
    normalize_block(&mut p, off, total);
    Ok(p)
}

/// Witness produced by a feasible membership query.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Global(JointDistribution),
    Family(Vec<JointDistribution>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipResult {
    pub feasible: bool,
    pub joint: Option<Witness>,
    pub separator: Option<Inequality>,
    pub theorem: Option<String>,
}

impl MembershipResult {
    pub(crate) fn member(w: Witness) -> Self {
        MembershipResult {
            feasible: true,
            joint: Some(w),
            separator: None,
            theorem: None,
        }
    }

    pub(crate) fn separated(i: Inequality) -> Self {
        MembershipResult {
            feasible: false,
            joint: None,
            separator: Some(i),
            theorem: None,
        }
    }

    pub fn with_theorem(mut self, t: &str) -> Self {
        self.theorem = Some(t.to_string());
        self
    }
}

/// Inequality separating a disturbing behavior: the violated marginal equality.
pub fn disturbance_separator(s: &Scenario, d: &scenario::Disturbance) -> Inequality {
    let m = s.index_of(&d.measurement).expect("measurement from report");
    let mut coeffs = vec![Rational::zero(); s.n_coords()];
    let sign = if d.gap > Rational::zero() {
        Rational::one()
    } else {
        -Rational::one()
    };
    for (c, sgn) in [(d.contexts.0, sign.clone()), (d.contexts.1, -sign)] {
        let pos = s.contexts()[c].iter().position(|&k| k == m).unwrap();
        let cards = s.cards(c);
        for (i, t) in tuples(&cards).enumerate() {
            if t[pos] == d.outcome {
                coeffs[s.offset(c) + i] += &sgn;
            }
        }
    }
    Inequality::new(coeffs, Rational::zero())
}

pub fn bell_membership(s: &Scenario, b: &Behavior) -> Result<MembershipResult, MarginalError> {
    b.validate(s)?;
    let nd = scenario::check_no_disturbance(s, b)?;
    if let Some(d) = nd.violations.first() {
        return Ok(MembershipResult::separated(disturbance_separator(s, d)));
    }
    let p = bell_polytope(s)?;
    Ok(match p.check_membership(&b.coords())? {
        MembershipCore::Member(y) => {
            let mut blocks = p.block_distributions(&y);
            MembershipResult::member(Witness::Global(blocks.remove(0)))
        }
        MembershipCore::Separated(i) => MembershipResult::separated(i),
    })
}

/// LF polytope of the bipartite (N_A, N_B) experiment, via one joint block
/// P_ij(a_1, a_i, b_1, b_j) per i, j ≥ 2 with overlap agreement.
pub fn lf_polytope(spec: &LfSpec) -> Result<LiftedPolytope, MarginalError> {
    let s = scenario::build_lf_compatibility_graph(spec)?;
    let mut p = LiftedPolytope::new(s.n_coords());
    let a = |i: usize| format!("A{}", i + 1);
    let b = |j: usize| format!("B{}", j + 1);
    let (na, nb) = (spec.n_a, spec.n_b);
    let (ca, cb) = (&spec.card_a, &spec.card_b);
    match (na >= 2, nb >= 2) {
        (false, false) => {
            let cards = vec![ca[0], cb[0]];
            let off = p.add_block(vec![a(0), b(0)], cards.clone());
            tie_block_to_context(&mut p, &s, &cards, off, &[0, 1], spec.context(0, 0));
            normalize_block(&mut p, off, cards.iter().product());
        }
        (false, true) => {
            for j in 1..nb {
                let cards = vec![ca[0], cb[0], cb[j]];
                let off = p.add_block(vec![a(0), b(0), b(j)], cards.clone());
                tie_block_to_context(&mut p, &s, &cards, off, &[0, 1], spec.context(0, 0));
                tie_block_to_context(&mut p, &s, &cards, off, &[0, 2], spec.context(0, j));
                normalize_block(&mut p, off, cards.iter().product());
            }
        }
        (true, false) => {
            for i in 1..na {
                let cards = vec![ca[0], ca[i], cb[0]];
                let off = p.add_block(vec![a(0), a(i), b(0)], cards.clone());
                tie_block_to_context(&mut p, &s, &cards, off, &[0, 2], spec.context(0, 0));
                tie_block_to_context(&mut p, &s, &cards, off, &[1, 2], spec.context(i, 0));
                normalize_block(&mut p, off, cards.iter().product());
            }
        }
        (true, true) => {
            let mut offs = HashMap::new();
            for i in 1..na {
                for j in 1..nb {
                    let cards = vec![ca[0], ca[i], cb[0], cb[j]];
                    let off = p.add_block(vec![a(0), a(i), b(0), b(j)], cards.clone());
                    tie_block_to_context(&mut p, &s, &cards, off, &[1, 3], spec.context(i, j));
                    tie_block_to_context(&mut p, &s, &cards, off, &[0, 3], spec.context(0, j));
                    tie_block_to_context(&mut p, &s, &cards, off, &[1, 2], spec.context(i, 0));
                    tie_block_to_context(&mut p, &s, &cards, off, &[0, 2], spec.context(0, 0));
                    normalize_block(&mut p, off, cards.iter().product());
                    offs.insert((i, j), (cards, off));
                }
            }
            for i in 1..na {
                for j in 1..nb {
                    let (c1, o1) = &offs[&(i, j)];
                    if j + 1 < nb {
                        let (c2, o2) = &offs[&(i, j + 1)];
                        agree(&mut p, (c1, *o1, &[0, 1, 2]), (c2, *o2, &[0, 1, 2]));
                    }
                    if i + 1 < na {
                        let (c2, o2) = &offs[&(i + 1, j)];
                        agree(&mut p, (c1, *o1, &[0, 2, 3]), (c2, *o2, &[0, 2, 3]));
                    }
                }
            }
        }
    }
    Ok(p)
}

pub fn lf_membership(spec: &LfSpec, b: &Behavior) -> Result<MembershipResult, MarginalError> {
    let s = scenario::build_lf_compatibility_graph(spec)?;
    b.validate(&s)?;
    let p = lf_polytope(spec)?;
    Ok(match p.check_membership(&b.coords())? {
        MembershipCore::Member(y) => {
            MembershipResult::member(Witness::Family(p.block_distributions(&y)))
        }
        MembershipCore::Separated(i) => MembershipResult::separated(i),
    })
}

/// No-disturbance polytope: nonnegative, normalized, context-independent marginals.
pub fn nd_polytope(s: &Scenario) -> LiftedPolytope {
    let n = s.n_coords();
    let mut p = LiftedPolytope::new(n);
    let off = p.add_aux(n);
    for k in 0..n {
        p.push(
            vec![(k, Rational::one())],
            vec![(off + k, -Rational::one())],
            Rational::zero(),
        );
    }
    for c in 0..s.contexts().len() {
        let base = s.offset(c);
        p.push(
            (0..s.outcome_count(c))
                .map(|o| (base + o, Rational::one()))
                .collect(),
            Vec::new(),
            Rational::one(),
        );
    }
    for m in 0..s.measurements().len() {
        let holders: Vec<usize> = (0..s.contexts().len())
            .filter(|&c| s.contexts()[c].contains(&m))
            .collect();
        for w in holders.windows(2) {
            for o in 0..s.measurements()[m].card {
                let mut row = Vec::new();
                for (c, sign) in [(w[0], Rational::one()), (w[1], -Rational::one())] {
                    let pos = s.contexts()[c].iter().position(|&k| k == m).unwrap();
                    for (i, t) in tuples(&s.cards(c)).enumerate() {
                        if t[pos] == o {
                            row.push((s.offset(c) + i, sign.clone()));
                        }
                    }
                }
                p.push(row, Vec::new(), Rational::zero());
            }
        }
    }
    p
}

/// Variable sets reachable by gluing the LF blocks, with the contexts each recovers.
pub fn derive_subgraph_constraints(
    spec: &LfSpec,
) -> Result<Vec<(Vec<String>, Scenario)>, MarginalError> {
    spec.validate()?;
    if spec.n_a < 2 || spec.n_b < 2 {
        return Err(MarginalError::Invalid(
            "subgraph derivation needs at least two settings per side".into(),
        ));
    }
    let full = scenario::build_lf_compatibility_graph(spec)?;
    let vars: Vec<String> = full.measurements().iter().map(|m| m.id.clone()).collect();
    let mut out: Vec<(Vec<String>, Scenario)> = Vec::new();
    for ic in 1..spec.n_a {
        for jc in 1..spec.n_b {
            let edges = glued_edges(spec, ic, jc);
            let ctx: Vec<Vec<usize>> = edges.iter().map(|&(i, j)| vec![i, spec.n_a + j]).collect();
            let sc = Scenario::from_indices(full.measurements().to_vec(), ctx)?;
            if !out.iter().any(|(_, s)| s.contexts() == sc.contexts()) {
                out.push((vars.clone(), sc));
            }
        }
    }
    Ok(out)
}

/// Edges (i, j) recovered by gluing the row of blocks through (ic, ·) with the
/// column of blocks through (·, jc).
pub fn glued_edges(spec: &LfSpec, ic: usize, jc: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..spec.n_a {
        for j in 0..spec.n_b {
            if i == 0 || j == 0 || i == ic || j == jc {
                e.push((i, j));
            }
        }
    }
    e
}

/// Glues an LF block family around the center block (ic, jc), both ≥ 1.
pub fn glue_family(
    spec: &LfSpec,
    blocks: &[JointDistribution],
    ic: usize,
    jc: usize,
) -> Result<JointDistribution, MarginalError> {
    let nbm = spec.n_b - 1;
    let at = |i: usize, j: usize| &blocks[(i - 1) * nbm + (j - 1)];
    let mut acc = at(ic, jc).clone();
    for j in 1..spec.n_b {
        if j != jc {
            acc = glue(&acc, at(ic, j))?;
        }
    }
    for i in 1..spec.n_a {
        if i != ic {
            acc = glue(&acc, at(i, jc))?;
        }
    }
    Ok(acc)
}

/// KSNC polytope of a subgraph of the full bipartite scenario, embedded in the
/// full coordinate space. Contexts outside the subgraph are only required to
/// be distributions whose single-measurement marginals match the global joint.
pub fn subgraph_polytope(full: &Scenario, sub: &Scenario) -> Result<LiftedPolytope, MarginalError> {
    let cards: Vec<usize> = full.measurements().iter().map(|m| m.card).collect();
    let mut p = LiftedPolytope::new(full.n_coords());
    let vars = full.measurements().iter().map(|m| m.id.clone()).collect();
    let off = p.add_block(vars, cards.clone());
    normalize_block(&mut p, off, cards.iter().product());
    for (c, members) in full.contexts().iter().enumerate() {
        if sub.context_index(members).is_some() {
            tie_block_to_context(&mut p, full, &cards, off, members, c);
            continue;
        }
        let n = full.outcome_count(c);
        let base = full.offset(c);
        let slack = p.add_aux(n);
        for o in 0..n {
            p.push(
                vec![(base + o, Rational::one())],
                vec![(slack + o, -Rational::one())],
                Rational::zero(),
            );
        }
        let ccards = full.cards(c);
        for (pos, &m) in members.iter().enumerate() {
            for val in 0..cards[m] {
                let mut beh = Vec::new();
                for (i, t) in tuples(&ccards).enumerate() {
                    if t[pos] == val {
                        beh.push((base + i, Rational::one()));
                    }
                }
                let mut aux = Vec::new();
                for (g, t) in tuples(&cards).enumerate() {
                    if t[m] == val {
                        aux.push((off + g, -Rational::one()));
                    }
                }
                p.push(beh, aux, Rational::zero());
            }
        }
    }
    Ok(p)
}

/// Intersection of the KSNC polytopes of all gluing-reachable subgraphs.
pub fn ksnc_intersection_polytope(spec: &LfSpec) -> Result<LiftedPolytope, MarginalError> {
    let full = scenario::build_lf_compatibility_graph(spec)?;
    let subs = derive_subgraph_constraints(spec)?;
    let mut acc = subgraph_polytope(&full, &subs[0].1)?;
    for (_, s) in &subs[1..] {
        acc = acc.intersect(&subgraph_polytope(&full, s)?)?;
    }
    Ok(acc)
}

/// Maximizes a functional over a lifted polytope, returning the exact optimum and maximizer.
pub fn maximize_over(
    p: &LiftedPolytope,
    c: &[Rational],
) -> Result<(Rational, Vec<Rational>), MarginalError> {
    match p.maximize(c)? {
        Extremum::Optimal { value, point } => Ok((value, point)),
        Extremum::Empty => Err(MarginalError::Invalid("empty polytope".into())),
        Extremum::Unbounded { .. } => Err(MarginalError::Invalid("unbounded functional".into())),
    }
}

/// Correlator-form CHSH functional E_{x0 y0} + E_{x0 y1} + E_{x1 y0} − E_{x1 y1}
/// on settings x0, x1 of A and y0, y1 of B (0-based), for binary outcomes.
pub fn chsh_functional(spec: &LfSpec, xs: (usize, usize), ys: (usize, usize)) -> Vec<Rational> {
    let s = scenario::build_lf_compatibility_graph(spec).expect("valid spec");
    let mut c = vec![Rational::zero(); s.n_coords()];
    for (x, y, sign) in [
        (xs.0, ys.0, 1),
        (xs.0, ys.1, 1),
        (xs.1, ys.0, 1),
        (xs.1, ys.1, -1),
    ] {
        let ctx = spec.context(x, y);
        for a in 0..2 {
            for b in 0..2 {
                let par = if a == b { 1 } else { -1 };
                c[s.offset(ctx) + encode(&[a, b], &[2, 2])] += rational::int(sign * par);
            }
        }
    }
    c
}

/// Deterministic behavior of a global assignment.
pub fn deterministic_behavior(s: &Scenario, assignment: &[usize]) -> Behavior {
    let mut b = Behavior::zeros(s);
    for (c, members) in s.contexts().iter().enumerate() {
        let t: Vec<usize> = members.iter().map(|&m| assignment[m]).collect();
        b.set(s, c, &t, Rational::one());
    }
    b
}

/// Behavior obtained by marginalizing a global distribution (table over all measurements).
pub fn marginalize_global(s: &Scenario, global: &[Rational]) -> Behavior {
    let cards: Vec<usize> = s.measurements().iter().map(|m| m.card).collect();
    let mut b = Behavior::zeros(s);
    for (g, p) in global.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let t = decode(g, &cards);
        for (c, members) in s.contexts().iter().enumerate() {
            let sub: Vec<usize> = members.iter().map(|&m| t[m]).collect();
            let i = encode(&sub, &s.cards(c));
            b.tables[c][i] += p;
        }
    }
    b
}

impl LiftedPolytope {
    /// H-description of the lifted set over (b, y): the rows as equalities, y ≥ 0.
    pub fn lifted_hpolytope(&self) -> HPolytope {
        let n = self.n_behavior + self.n_aux;
        let mut h = HPolytope::new(n);
        for r in &self.rows {
            let mut coeffs = vec![Rational::zero(); n];
            for (k, e) in &r.beh {
                coeffs[*k] += e;
            }
            for (k, a) in &r.aux {
                coeffs[self.n_behavior + *k] += a;
            }
            h.equalities.push(Equality::new(coeffs, r.rhs.clone()));
        }
        for k in self.n_behavior..n {
            let mut coeffs = vec![Rational::zero(); n];
            coeffs[k] = -Rational::one();
            h.inequalities
                .push(Inequality::new(coeffs, Rational::zero()));
        }
        h
    }

    /// Vertices of the projection onto behavior coordinates: lifted vertices by
    /// double description, projected, then pruned to the extreme ones.
    pub fn projected_vertices(&self) -> Result<VPolytope, MarginalError> {
        let v = dd::dd_h_to_v(&self.lifted_hpolytope())?;
        if !v.rays.is_empty() {
            return Err(MarginalError::Invalid(
                "lifted polytope is unbounded".into(),
            ));
        }
        let points: BTreeSet<Vec<Rational>> = v
            .vertices
            .iter()
            .map(|x| x[..self.n_behavior].to_vec())
            .collect();
        Ok(VPolytope::new(
            self.n_behavior,
            extreme_points(points.into_iter().collect())?,
        ))
    }
}

/// Keeps the points that are not convex combinations of the others.
pub fn extreme_points(points: Vec<Vec<Rational>>) -> Result<Vec<Vec<Rational>>, MarginalError> {
    let mut keep = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let others: Vec<&Vec<Rational>> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| q)
            .collect();
        let mut lp = LinearProgram::all_nonneg(others.len());
        lp.add_eq(vec![Rational::one(); others.len()], Rational::one());
        for (k, x) in p.iter().enumerate() {
            lp.add_eq(others.iter().map(|q| q[k].clone()).collect(), x.clone());
        }
        if others.is_empty()
            || matches!(lp::solve_feasibility(&lp)?, Certificate::Infeasible { .. })
        {
            keep.push(p.clone());
        }
    }
    Ok(keep)
}

/// Vertices of the Bell polytope: the distinct deterministic behaviors.
pub fn bell_vertices(s: &Scenario) -> VPolytope {
    let cards: Vec<usize> = s.measurements().iter().map(|m| m.card).collect();
    let points: BTreeSet<Vec<Rational>> = tuples(&cards)
        .map(|g| deterministic_behavior(s, &g).coords())
        .collect();
    VPolytope::new(s.n_coords(), points.into_iter().collect())
}

/// Maximum of the CHSH functional over the Bell polytope by LP, returning the exact value.
pub fn max_over_bell(s: &Scenario, c: &[Rational]) -> Result<Rational, MarginalError> {
    Ok(maximize_over(&bell_polytope(s)?, c)?.0)
}
