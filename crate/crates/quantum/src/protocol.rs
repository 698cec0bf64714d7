//! Extended Wigner's-friend protocols: registers, a step timeline and its simulation.
//!
//! Measurements are modeled unitarily: the PVM {P_k} on its system registers is
//! coupled to a fresh friend register by U = Σ_k P_k ⊗ X^k. `Undo` applies U†.
//! A reveal reads friend registers in the computational basis and terminates the
//! revealing party; everything else stays unitary, so reveals are read off the
//! final state. Remote parties measure their register in the computational
//! basis or, after a Fourier transform, in the "±" basis where outcome 0 is "+".

use crate::ops::{fourier, Mat, Pvm};
use crate::state::{StateVector, NORM_TOL};
use crate::QuantumError;
use lfpoly_core::scenario;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Largest total Hilbert-space dimension a protocol may have.
pub const MAX_DIM: usize = 1 << 24;

/// Tolerance for the commutation-irrelevance comparisons.
pub const CI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegisterKind {
    System,
    Friend,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
    pub kind: RegisterKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDef {
    pub label: String,
    /// System registers the PVM acts on, most significant first.
    pub system: Vec<String>,
    pub pvm: Pvm,
}

/// Amplitudes of a group of registers; registers outside every block start in |0⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateBlock {
    pub registers: Vec<String>,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Entangles a remote register with the outcome of `measurement`, applied before the timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub measurement: String,
    pub remote: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    #[serde(default)]
    pub blocks: Vec<StateBlock>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    PlusMinus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChoiceOption {
    Reveal { registers: Vec<String> },
    Continue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Measure { measurement: String, friend: String },
    /// Reverses the Measure at timeline position `step`.
    Undo { step: usize },
    /// Options are selected 1-based by the choice vector.
    Choice { id: String, options: Vec<ChoiceOption> },
    Reveal { registers: Vec<String> },
    Remote { choice: String, register: String, bases: Vec<Basis> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub party: String,
    #[serde(flatten)]
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub registers: Vec<Register>,
    pub measurements: Vec<MeasurementDef>,
    #[serde(default)]
    pub initial: InitialState,
    pub timeline: Vec<Step>,
    /// Partition of timeline positions into causally disconnected groups.
    #[serde(default)]
    pub spacelike: Vec<Vec<usize>>,
}

/// Choice id → 1-based option index.
pub type ChoiceVector = BTreeMap<String, usize>;

impl ProtocolSpec {
    pub fn from_json(text: &str) -> Result<Self, QuantumError> {
        let p: ProtocolSpec = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn register_index(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.name == name)
    }

    pub fn measurement(&self, label: &str) -> Option<&MeasurementDef> {
        self.measurements.iter().find(|m| m.label == label)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    /// All choice ids, from Choice and Remote steps.
    pub fn choice_ids(&self) -> Vec<String> {
        self.timeline
            .iter()
            .filter_map(|s| match &s.op {
                Op::Choice { id, .. } => Some(id.clone()),
                Op::Remote { choice, .. } => Some(choice.clone()),
                _ => None,
            })
            .collect()
    }

    /// Checks the structural invariants of the register set and timeline.
    pub fn validate(&self) -> Result<(), QuantumError> {
        let bad = |m: String| Err(QuantumError::Invalid(m));
        let mut names = BTreeSet::new();
        let mut total = 1usize;
        for r in &self.registers {
            if !names.insert(r.name.as_str()) {
                return bad(format!("duplicate register {}", r.name));
            }
            total = match total.checked_mul(r.dim) {
                Some(t) if r.dim > 0 && t <= MAX_DIM => t,
                _ => return bad(format!("register {} makes the state space too large or empty", r.name)),
            };
        }
        let reg = |name: &str| self.register_index(name).ok_or_else(|| QuantumError::Invalid(format!("unknown register {name}")));
        let mut labels = BTreeSet::new();
        for m in &self.measurements {
            if !labels.insert(m.label.as_str()) {
                return bad(format!("duplicate measurement {}", m.label));
            }
            let mut d = 1;
            let mut seen = BTreeSet::new();
            for name in &m.system {
                let k = reg(name)?;
                if self.registers[k].kind != RegisterKind::System || !seen.insert(k) {
                    return bad(format!("measurement {} must act on distinct system registers", m.label));
                }
                d *= self.registers[k].dim;
            }
            if m.system.is_empty() || m.pvm.dim() != d {
                return Err(QuantumError::Dimension(format!("measurement {} has a PVM of dimension {}, registers give {d}", m.label, m.pvm.dim())));
            }
        }
        let meas = |label: &str| self.measurement(label).ok_or_else(|| QuantumError::Invalid(format!("unknown measurement {label}")));
        let mut in_block = BTreeSet::new();
        for b in &self.initial.blocks {
            let mut d = 1;
            for name in &b.registers {
                let k = reg(name)?;
                if !in_block.insert(k) {
                    return bad(format!("register {name} appears in two initial blocks"));
                }
                d *= self.registers[k].dim;
            }
            if b.amplitudes.len() != d {
                return Err(QuantumError::Dimension(format!("block {:?} has {} amplitudes, expected {d}", b.registers, b.amplitudes.len())));
            }
            let n: f64 = b.amplitudes.iter().map(|[re, im]| re * re + im * im).sum();
            if (n - 1.0).abs() > NORM_TOL {
                return bad(format!("block {:?} is not normalized", b.registers));
            }
        }
        let mut coupled = BTreeSet::new();
        for c in &self.initial.couplings {
            let m = meas(&c.measurement)?;
            let k = reg(&c.remote)?;
            let r = &self.registers[k];
            if r.kind != RegisterKind::Remote || r.dim != m.pvm.n_outcomes() || in_block.contains(&k) || !coupled.insert(k) {
                return bad(format!("remote register {} cannot record {}", c.remote, c.measurement));
            }
        }
        let mut choice_ids = BTreeSet::new();
        let mut dirty: BTreeSet<usize> = BTreeSet::new();
        let mut undone = BTreeSet::new();
        let mut revealed_plain: BTreeSet<usize> = BTreeSet::new();
        for (i, step) in self.timeline.iter().enumerate() {
            if step.party.is_empty() {
                return bad(format!("step {i} has no party"));
            }
            match &step.op {
                Op::Measure { measurement, friend } => {
                    let m = meas(measurement)?;
                    let k = reg(friend)?;
                    let r = &self.registers[k];
                    if r.kind != RegisterKind::Friend || r.dim != m.pvm.n_outcomes() {
                        return bad(format!("step {i}: {friend} cannot record {measurement}"));
                    }
                    if !dirty.insert(k) {
                        return bad(format!("step {i}: friend register {friend} written twice without an undo"));
                    }
                    if revealed_plain.contains(&k) {
                        return bad(format!("step {i}: friend register {friend} was already revealed"));
                    }
                }
                Op::Undo { step: j } => {
                    let Some(Step { op: Op::Measure { friend, .. }, .. }) = self.timeline.get(*j).filter(|_| *j < i) else {
                        return bad(format!("step {i}: undo must reference an earlier measure"));
                    };
                    if !undone.insert(*j) {
                        return bad(format!("step {i}: measure {j} is undone twice"));
                    }
                    let k = reg(friend)?;
                    if revealed_plain.contains(&k) {
                        return bad(format!("step {i}: undo of revealed register {friend}"));
                    }
                    dirty.remove(&k);
                }
                Op::Choice { id, options } => {
                    if !choice_ids.insert(id.clone()) || options.is_empty() {
                        return bad(format!("step {i}: choice {id} is repeated or has no options"));
                    }
                    for o in options {
                        if let ChoiceOption::Reveal { registers } = o {
                            for name in registers {
                                reg(name)?;
                            }
                        }
                    }
                }
                Op::Reveal { registers } => {
                    for name in registers {
                        revealed_plain.insert(reg(name)?);
                    }
                }
                Op::Remote { choice, register, bases } => {
                    if !choice_ids.insert(choice.clone()) || bases.is_empty() {
                        return bad(format!("step {i}: choice {choice} is repeated or has no bases"));
                    }
                    if self.registers[reg(register)?].kind != RegisterKind::Remote {
                        return bad(format!("step {i}: {register} is not a remote register"));
                    }
                }
            }
        }
        if !self.spacelike.is_empty() {
            let mut all: Vec<usize> = self.spacelike.iter().flatten().copied().collect();
            all.sort_unstable();
            if all != (0..self.timeline.len()).collect::<Vec<_>>() {
                return bad("spacelike groups must partition the timeline".into());
            }
        }
        Ok(())
    }
}

/// Joint distribution over named registers, indexed like [`scenario::encode`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub names: Vec<String>,
    pub cards: Vec<usize>,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    fn positions(&self, names: &[&str]) -> Result<Vec<usize>, QuantumError> {
        names
            .iter()
            .map(|n| self.names.iter().position(|m| m == n).ok_or_else(|| QuantumError::Invalid(format!("{n} is not an outcome"))))
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability that the listed registers satisfy `pred` (arguments in the listed order).
    pub fn prob_where(&self, names: &[&str], pred: impl Fn(&[usize]) -> bool) -> Result<f64, QuantumError> {
        let pos = self.positions(names)?;
        let mut vals = vec![0; pos.len()];
        let mut total = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let t = scenario::decode(i, &self.cards);
            for (v, &k) in vals.iter_mut().zip(&pos) {
                *v = t[k];
            }
            if pred(&vals) {
                total += p;
            }
        }
        Ok(total)
    }

    /// Probability of a conjunction of register values.
    pub fn prob(&self, event: &[(&str, usize)]) -> Result<f64, QuantumError> {
        let names: Vec<&str> = event.iter().map(|e| e.0).collect();
        self.prob_where(&names, |v| v.iter().zip(event).all(|(a, e)| *a == e.1))
    }

    pub fn marginal(&self, names: &[&str]) -> Result<OutcomeDistribution, QuantumError> {
        let pos = self.positions(names)?;
        let cards: Vec<usize> = pos.iter().map(|&k| self.cards[k]).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            let t = scenario::decode(i, &self.cards);
            let sub: Vec<usize> = pos.iter().map(|&k| t[k]).collect();
            probs[scenario::encode(&sub, &cards)] += p;
        }
        Ok(OutcomeDistribution { names: names.iter().map(|s| s.to_string()).collect(), cards, probs })
    }

    /// Distribution of the remaining registers given the event. Errors on a probability-zero event.
    pub fn conditional(&self, given: &[(&str, usize)]) -> Result<OutcomeDistribution, QuantumError> {
        let pos = self.positions(&given.iter().map(|g| g.0).collect::<Vec<_>>())?;
        let z = self.prob(given)?;
        if z <= 0.0 {
            return Err(QuantumError::ZeroProbability(format!("{given:?}")));
        }
        let keep: Vec<usize> = (0..self.names.len()).filter(|k| !pos.contains(k)).collect();
        let cards: Vec<usize> = keep.iter().map(|&k| self.cards[k]).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            let t = scenario::decode(i, &self.cards);
            if pos.iter().zip(given).all(|(&k, g)| t[k] == g.1) {
                let sub: Vec<usize> = keep.iter().map(|&k| t[k]).collect();
                probs[scenario::encode(&sub, &cards)] += p / z;
            }
        }
        Ok(OutcomeDistribution { names: keep.iter().map(|&k| self.names[k].clone()).collect(), cards, probs })
    }

    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        if self.names != other.names || self.cards != other.cards {
            return f64::INFINITY;
        }
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Final state of a run plus bookkeeping.
#[derive(Debug, Clone)]
pub struct Execution {
    pub state: StateVector,
    /// Revealed and remote registers in the order they were read.
    pub outputs: Vec<usize>,
    /// Largest |‖ψ‖² − 1| seen after any step.
    pub max_drift: f64,
    pub executed: Vec<bool>,
}

impl Execution {
    pub fn distribution(&self, p: &ProtocolSpec) -> OutcomeDistribution {
        OutcomeDistribution {
            names: self.outputs.iter().map(|&k| p.registers[k].name.clone()).collect(),
            cards: self.outputs.iter().map(|&k| p.registers[k].dim).collect(),
            probs: self.state.probabilities(&self.outputs),
        }
    }
}

/// Operator and registers of a Measure (or its inverse for Undo) step.
fn step_operator(p: &ProtocolSpec, cache: &mut HashMap<String, Mat>, i: usize) -> Result<(Mat, Vec<usize>), QuantumError> {
    let (j, adjoint) = match p.timeline[i].op {
        Op::Measure { .. } => (i, false),
        Op::Undo { step } => (step, true),
        _ => return Err(QuantumError::Invalid(format!("step {i} is not a measure or undo"))),
    };
    let Op::Measure { measurement, friend } = &p.timeline[j].op else {
        return Err(QuantumError::Invalid(format!("step {i} does not reference a measure")));
    };
    let m = p.measurement(measurement).ok_or_else(|| QuantumError::Invalid(format!("unknown measurement {measurement}")))?;
    let u = cache.entry(measurement.clone()).or_insert_with(|| m.pvm.isometry());
    let mut regs: Vec<usize> = m.system.iter().map(|n| p.register_index(n).expect("validated")).collect();
    regs.push(p.register_index(friend).expect("validated"));
    Ok((if adjoint { u.adjoint() } else { u.clone() }, regs))
}

/// Initial state built by applying the couplings (one CNOT-type isometry per remote register).
pub fn initial_state(p: &ProtocolSpec) -> Result<StateVector, QuantumError> {
    p.validate()?;
    let dims = p.dims();
    let mut st = StateVector::basis(dims.clone(), &vec![0; dims.len()]);
    if !p.initial.blocks.is_empty() {
        st.amplitudes[0] = num_complex::Complex64::new(0.0, 0.0);
        let block_regs: Vec<Vec<usize>> =
            p.initial.blocks.iter().map(|b| b.registers.iter().map(|n| p.register_index(n).expect("validated")).collect()).collect();
        let sizes: Vec<usize> = p.initial.blocks.iter().map(|b| b.amplitudes.len()).collect();
        for combo in scenario::tuples(&sizes) {
            let mut digits = vec![0; dims.len()];
            let mut amp = num_complex::Complex64::new(1.0, 0.0);
            for (b, &k) in combo.iter().enumerate() {
                let [re, im] = p.initial.blocks[b].amplitudes[k];
                amp *= num_complex::Complex64::new(re, im);
                let local: Vec<usize> = block_regs[b].iter().map(|&r| dims[r]).collect();
                for (&r, d) in block_regs[b].iter().zip(scenario::decode(k, &local)) {
                    digits[r] = d;
                }
            }
            st.amplitudes[scenario::encode(&digits, &dims)] = amp;
        }
    }
    for c in &p.initial.couplings {
        let m = p.measurement(&c.measurement).expect("validated");
        let mut regs: Vec<usize> = m.system.iter().map(|n| p.register_index(n).expect("validated")).collect();
        regs.push(p.register_index(&c.remote).expect("validated"));
        st.apply(&m.pvm.isometry(), &regs)?;
    }
    Ok(st)
}

/// Runs the timeline for one choice vector and returns the final state.
pub fn execute(p: &ProtocolSpec, choices: &ChoiceVector) -> Result<Execution, QuantumError> {
    let mut state = initial_state(p)?;
    let ids: BTreeSet<String> = p.choice_ids().into_iter().collect();
    if let Some(unknown) = choices.keys().find(|k| !ids.contains(*k)) {
        return Err(QuantumError::Invalid(format!("unknown choice {unknown}")));
    }
    let pick = |id: &str, n: usize| -> Result<usize, QuantumError> {
        match choices.get(id) {
            Some(&x) if (1..=n).contains(&x) => Ok(x - 1),
            Some(&x) => Err(QuantumError::Invalid(format!("choice {id} = {x} is out of range 1..={n}"))),
            None => Err(QuantumError::Invalid(format!("reachable choice {id} is unassigned"))),
        }
    };
    let mut cache = HashMap::new();
    let mut terminated: BTreeSet<&str> = BTreeSet::new();
    let mut outputs: Vec<usize> = Vec::new();
    let mut executed = vec![false; p.timeline.len()];
    let mut max_drift: f64 = 0.0;
    let touch = |outputs: &[usize], regs: &[usize], i: usize| -> Result<(), QuantumError> {
        match regs.iter().find(|r| outputs.contains(r)) {
            Some(&r) => Err(QuantumError::Invalid(format!("step {i} acts on already read register {}", p.registers[r].name))),
            None => Ok(()),
        }
    };
    for (i, step) in p.timeline.iter().enumerate() {
        if terminated.contains(step.party.as_str()) {
            continue;
        }
        let reveal = |names: &[String], outputs: &mut Vec<usize>| {
            for n in names {
                let k = p.register_index(n).expect("validated");
                if !outputs.contains(&k) {
                    outputs.push(k);
                }
            }
        };
        match &step.op {
            Op::Measure { .. } | Op::Undo { .. } => {
                if let Op::Undo { step: j } = step.op {
                    if !executed[j] {
                        return Err(QuantumError::Invalid(format!("step {i} undoes a measure that did not happen")));
                    }
                }
                let (u, regs) = step_operator(p, &mut cache, i)?;
                touch(&outputs, &regs, i)?;
                state.apply(&u, &regs)?;
            }
            Op::Choice { id, options } => match &options[pick(id, options.len())?] {
                ChoiceOption::Reveal { registers } => {
                    reveal(registers, &mut outputs);
                    terminated.insert(&step.party);
                }
                ChoiceOption::Continue => {}
            },
            Op::Reveal { registers } => {
                reveal(registers, &mut outputs);
                terminated.insert(&step.party);
            }
            Op::Remote { choice, register, bases } => {
                let k = p.register_index(register).expect("validated");
                touch(&outputs, &[k], i)?;
                if bases[pick(choice, bases.len())?] == Basis::PlusMinus {
                    state.apply(&fourier(p.registers[k].dim), &[k])?;
                }
                outputs.push(k);
            }
        }
        executed[i] = true;
        let drift = (state.norm_sqr() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(QuantumError::NormDrift(drift));
        }
        max_drift = max_drift.max(drift);
    }
    Ok(Execution { state, outputs, max_drift, executed })
}

/// Joint distribution of all revealed and remote outcomes for the given choices.
pub fn simulate_protocol(p: &ProtocolSpec, choices: &ChoiceVector) -> Result<OutcomeDistribution, QuantumError> {
    Ok(execute(p, choices)?.distribution(p))
}

/// A reordering of a Measure/Undo-only timeline prefix.
///
/// `order` lists the prefix positions in their new order. The first `block_end`
/// entries of `order` form the block whose friend records are read out from
/// `readout` right after the block, as if the remaining operations happened later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rearrangement {
    pub context: Vec<String>,
    pub order: Vec<usize>,
    pub block_end: usize,
    pub readout: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiCheck {
    pub context: Vec<String>,
    pub unitary_identity: bool,
    pub distribution_equal: bool,
    pub operator_deviation: f64,
    pub distribution_deviation: f64,
    /// Readout distribution right after the rearranged block.
    pub block: OutcomeDistribution,
}

/// Checks that the rearranged prefix composes to the same operator as the original
/// and that both yield the same friend-record distribution.
pub fn verify_commutation_irrelevance(p: &ProtocolSpec, r: &Rearrangement) -> Result<CiCheck, QuantumError> {
    p.validate()?;
    let n = r.order.len();
    let mut sorted = r.order.clone();
    sorted.sort_unstable();
    if n > p.timeline.len() || sorted != (0..n).collect::<Vec<_>>() || r.block_end > n {
        return Err(QuantumError::Invalid("rearrangement is not a permutation of a timeline prefix".into()));
    }
    let mut cache = HashMap::new();
    let ops: Vec<(Mat, Vec<usize>)> = (0..n).map(|i| step_operator(p, &mut cache, i)).collect::<Result<_, _>>()?;
    let readout: Vec<usize> = r
        .readout
        .iter()
        .map(|name| p.register_index(name).ok_or_else(|| QuantumError::Invalid(format!("unknown register {name}"))))
        .collect::<Result<_, _>>()?;

    // operator identity on the registers the prefix touches, column by column
    let touched: Vec<usize> = ops.iter().flat_map(|(_, regs)| regs.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let local = |regs: &[usize]| -> Vec<usize> { regs.iter().map(|r| touched.iter().position(|t| t == r).expect("touched")).collect() };
    let dims: Vec<usize> = touched.iter().map(|&k| p.registers[k].dim).collect();
    let d: usize = dims.iter().product();
    let mut operator_deviation: f64 = 0.0;
    for col in 0..d {
        let e = StateVector::basis(dims.clone(), &scenario::decode(col, &dims));
        let (mut a, mut b) = (e.clone(), e);
        for (u, regs) in &ops {
            a.apply(u, &local(regs))?;
        }
        for &i in &r.order {
            b.apply(&ops[i].0, &local(&ops[i].1))?;
        }
        operator_deviation = operator_deviation.max(a.max_abs_diff(&b));
    }

    let start = initial_state(p)?;
    let friends: Vec<usize> = touched.iter().copied().filter(|&k| p.registers[k].kind == RegisterKind::Friend).collect();
    let (mut a, mut b) = (start.clone(), start);
    for (u, regs) in &ops {
        a.apply(u, regs)?;
    }
    let mut block = None;
    for (pos, &i) in r.order.iter().enumerate() {
        if pos == r.block_end {
            block = Some(b.probabilities(&readout));
        }
        b.apply(&ops[i].0, &ops[i].1)?;
    }
    let block = block.unwrap_or_else(|| b.probabilities(&readout));
    let distribution_deviation = a
        .probabilities(&friends)
        .iter()
        .zip(b.probabilities(&friends))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(CiCheck {
        context: r.context.clone(),
        unitary_identity: operator_deviation <= CI_TOL,
        distribution_equal: distribution_deviation <= CI_TOL,
        operator_deviation,
        distribution_deviation,
        block: OutcomeDistribution {
            names: r.readout.clone(),
            cards: readout.iter().map(|&k| p.registers[k].dim).collect(),
            probs: block,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{pauli_x, pauli_z};

    fn qubit_protocol(timeline: Vec<Step>) -> ProtocolSpec {
        ProtocolSpec {
            registers: vec![
                Register { name: "S".into(), dim: 2, kind: RegisterKind::System },
                Register { name: "F1".into(), dim: 2, kind: RegisterKind::Friend },
                Register { name: "F2".into(), dim: 2, kind: RegisterKind::Friend },
            ],
            measurements: vec![
                MeasurementDef { label: "Z".into(), system: vec!["S".into()], pvm: Pvm::from_observable(&pauli_z()).unwrap() },
                MeasurementDef { label: "X".into(), system: vec!["S".into()], pvm: Pvm::from_observable(&pauli_x()).unwrap() },
            ],
            initial: InitialState {
                blocks: vec![StateBlock { registers: vec!["S".into()], amplitudes: vec![[0.8, 0.0], [0.0, 0.6]] }],
                couplings: vec![],
            },
            timeline,
            spacelike: vec![],
        }
    }

    fn step(op: Op) -> Step {
        Step { party: "alice".into(), op }
    }

    fn measure(m: &str, f: &str) -> Step {
        step(Op::Measure { measurement: m.into(), friend: f.into() })
    }

    fn reveal(regs: &[&str]) -> Step {
        step(Op::Reveal { registers: regs.iter().map(|s| s.to_string()).collect() })
    }

    #[test]
    fn reversal_then_remeasure() {
        let p = qubit_protocol(vec![measure("X", "F1"), step(Op::Undo { step: 0 }), measure("X", "F2"), reveal(&["F2"])]);
        let once = simulate_protocol(&qubit_protocol(vec![measure("X", "F1"), reveal(&["F1"])]), &ChoiceVector::new()).unwrap();
        let twice = simulate_protocol(&p, &ChoiceVector::new()).unwrap();
        assert!((once.probs[0] - twice.probs[0]).abs() < 1e-12);
        assert!((once.probs[0] - 0.5).abs() < 1e-12);
        let e = execute(&p, &ChoiceVector::new()).unwrap();
        assert!(e.max_drift < 1e-12);
        assert_eq!(e.state.probabilities(&[1]), vec![1.0, 0.0]);
    }

    #[test]
    fn reveal_terminates_party() {
        let opts = vec![ChoiceOption::Reveal { registers: vec!["F1".into()] }, ChoiceOption::Continue];
        let p = qubit_protocol(vec![
            measure("Z", "F1"),
            step(Op::Choice { id: "x".into(), options: opts }),
            step(Op::Undo { step: 0 }),
            measure("X", "F2"),
            reveal(&["F2"]),
        ]);
        let mut c = ChoiceVector::new();
        c.insert("x".into(), 1);
        let d = simulate_protocol(&p, &c).unwrap();
        assert_eq!(d.names, vec!["F1"]);
        assert!((d.prob(&[("F1", 1)]).unwrap() - 0.64).abs() < 1e-12);
        c.insert("x".into(), 2);
        let d = simulate_protocol(&p, &c).unwrap();
        assert_eq!(d.names, vec!["F2"]);
        assert!(simulate_protocol(&p, &ChoiceVector::new()).is_err());
        c.insert("nope".into(), 1);
        assert!(simulate_protocol(&p, &c).is_err());
    }

    #[test]
    fn invariants_are_checked() {
        let twice = qubit_protocol(vec![measure("Z", "F1"), measure("X", "F1")]);
        assert!(twice.validate().is_err());
        let dangling = qubit_protocol(vec![step(Op::Undo { step: 0 })]);
        assert!(dangling.validate().is_err());
        let undo_reveal = qubit_protocol(vec![measure("Z", "F1"), reveal(&["F1"]), step(Op::Undo { step: 0 })]);
        assert!(undo_reveal.validate().is_err());
        let mut bad_partition = qubit_protocol(vec![measure("Z", "F1")]);
        bad_partition.spacelike = vec![vec![1]];
        assert!(bad_partition.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = qubit_protocol(vec![measure("Z", "F1"), step(Op::Undo { step: 0 }), reveal(&["F1"])]);
        let q = ProtocolSpec::from_json(&p.to_json()).unwrap();
        assert_eq!(q.timeline, p.timeline);
        assert!(crate::ops::approx_eq(&q.measurements[1].pvm.projectors[0], &p.measurements[1].pvm.projectors[0], 1e-15));
    }

    #[test]
    fn conditioning() {
        let p = qubit_protocol(vec![measure("Z", "F1"), reveal(&["F1"])]);
        let d = simulate_protocol(&p, &ChoiceVector::new()).unwrap();
        assert!(d.conditional(&[("F1", 0)]).is_ok());
        let z = OutcomeDistribution { names: vec!["a".into(), "b".into()], cards: vec![2, 2], probs: vec![0.5, 0.0, 0.5, 0.0] };
        assert!(matches!(z.conditional(&[("b", 1)]), Err(QuantumError::ZeroProbability(_))));
        let m = z.marginal(&["b"]).unwrap();
        assert_eq!(m.probs, vec![1.0, 0.0]);
    }

    #[test]
    fn ci_checks() {
        let p = qubit_protocol(vec![measure("Z", "F1"), measure("X", "F2"), reveal(&["F1", "F2"])]);
        let id = Rearrangement { context: vec![], order: vec![0, 1], block_end: 2, readout: vec!["F1".into()] };
        let c = verify_commutation_irrelevance(&p, &id).unwrap();
        assert!(c.unitary_identity && c.distribution_equal);
        let swap = Rearrangement { order: vec![1, 0], ..id };
        let c = verify_commutation_irrelevance(&p, &swap).unwrap();
        assert!(!c.unitary_identity);
        let bad = Rearrangement { context: vec![], order: vec![0, 0], block_end: 0, readout: vec![] };
        assert!(verify_commutation_irrelevance(&p, &bad).is_err());
    }
}
