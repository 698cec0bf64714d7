//! Builders for LF and commutation-irrelevance protocols, and the two hand-built
//! LF fixtures on the KCBS and Peres–Mermin realizations.

use crate::fixtures::{kcbs_fixture, peres_mermin_fixture, Realization};
use crate::protocol::{
    Basis, ChoiceOption, Coupling, InitialState, MeasurementDef, Op, ProtocolSpec, Register, RegisterKind, StateBlock, Step,
};
use crate::state::StateVector;
use crate::QuantumError;
use lfpoly_core::scenario;
use nalgebra::DVector;
use std::collections::BTreeMap;

pub const ALICE: &str = "alice";

pub fn friend_register(label: &str) -> String {
    format!("F_{label}")
}

pub fn bob_register(label: &str) -> String {
    format!("T_{label}")
}

pub fn bob_choice(label: &str) -> String {
    format!("y_{label}")
}

/// Incremental construction of a protocol on a single system register `S`.
///
/// Every measurement gets its own friend register; Bobs get a remote register
/// coupled to one measurement and a computational/± choice.
pub struct ProtocolBuilder {
    spec: ProtocolSpec,
    bobs: Vec<String>,
    measured_at: BTreeMap<String, usize>,
    choices: usize,
}

impl ProtocolBuilder {
    pub fn new(real: &Realization, labels: &[String]) -> Result<Self, QuantumError> {
        let d = real.state.len();
        let mut measurements = Vec::new();
        for l in labels {
            let pvm = real.pvms.get(l).ok_or_else(|| QuantumError::Invalid(format!("no PVM for {l}")))?;
            if pvm.dim() != d {
                return Err(QuantumError::Dimension(format!("PVM {l} has dimension {}, state has {d}", pvm.dim())));
            }
            measurements.push(MeasurementDef { label: l.clone(), system: vec!["S".into()], pvm: pvm.clone() });
        }
        let mut registers = vec![Register { name: "S".into(), dim: d, kind: RegisterKind::System }];
        for m in &measurements {
            registers.push(Register { name: friend_register(&m.label), dim: m.pvm.n_outcomes(), kind: RegisterKind::Friend });
        }
        let block = StateBlock { registers: vec!["S".into()], amplitudes: real.state.amplitudes.iter().map(|z| [z.re, z.im]).collect() };
        Ok(ProtocolBuilder {
            spec: ProtocolSpec {
                registers,
                measurements,
                initial: InitialState { blocks: vec![block], couplings: vec![] },
                timeline: vec![],
                spacelike: vec![],
            },
            bobs: vec![],
            measured_at: BTreeMap::new(),
            choices: 0,
        })
    }

    fn push(&mut self, op: Op) {
        self.spec.timeline.push(Step { party: ALICE.into(), op });
    }

    /// Remote register entangled with `label` before the protocol starts.
    pub fn add_bob(&mut self, label: &str) -> Result<(), QuantumError> {
        let m = self.spec.measurement(label).ok_or_else(|| QuantumError::Invalid(format!("unknown measurement {label}")))?;
        let dim = m.pvm.n_outcomes();
        // remote registers sit between S and the friends
        let at = 1 + self.bobs.len();
        self.spec.registers.insert(at, Register { name: bob_register(label), dim, kind: RegisterKind::Remote });
        self.spec.initial.couplings.push(Coupling { measurement: label.into(), remote: bob_register(label) });
        self.bobs.push(label.into());
        Ok(())
    }

    pub fn measure(&mut self, label: &str) {
        self.measured_at.insert(label.into(), self.spec.timeline.len());
        self.push(Op::Measure { measurement: label.into(), friend: friend_register(label) });
    }

    pub fn undo(&mut self, label: &str) -> Result<(), QuantumError> {
        let step = *self.measured_at.get(label).ok_or_else(|| QuantumError::Invalid(format!("{label} was never measured")))?;
        self.push(Op::Undo { step });
        Ok(())
    }

    /// Choice x_n: option 1 reveals the friends of `labels`, option 2 continues.
    pub fn choice_reveal(&mut self, labels: &[String]) -> String {
        self.choices += 1;
        let id = format!("x{}", self.choices);
        let registers = labels.iter().map(|l| friend_register(l)).collect();
        self.push(Op::Choice { id: id.clone(), options: vec![ChoiceOption::Reveal { registers }, ChoiceOption::Continue] });
        id
    }

    pub fn reveal(&mut self, labels: &[String]) {
        self.push(Op::Reveal { registers: labels.iter().map(|l| friend_register(l)).collect() });
    }

    pub fn finish(mut self) -> Result<ProtocolSpec, QuantumError> {
        let alice: Vec<usize> = (0..self.spec.timeline.len()).collect();
        let mut groups = vec![alice];
        for b in &self.bobs {
            groups.push(vec![self.spec.timeline.len()]);
            self.spec.timeline.push(Step {
                party: format!("bob_{b}"),
                op: Op::Remote { choice: bob_choice(b), register: bob_register(b), bases: vec![Basis::Computational, Basis::PlusMinus] },
            });
        }
        self.spec.spacelike = groups;
        self.spec.validate()?;
        Ok(self.spec)
    }
}

fn labels(ls: &[&str]) -> Vec<String> {
    ls.iter().map(|s| s.to_string()).collect()
}

/// LF 5-cycle protocol on the KCBS realization, with one Bob entangled with A1.
///
/// Alice: A1, A2, x1, U1†, A3, x2, U2†, A4, x3, U3†, A5, reveal F4, F5.
pub fn lf_5cycle_protocol() -> ProtocolSpec {
    let k = kcbs_fixture();
    let ids = labels(&["A1", "A2", "A3", "A4", "A5"]);
    let mut b = ProtocolBuilder::new(&k.realization(), &ids).expect("fixture");
    b.add_bob("A1").expect("fixture");
    b.measure("A1");
    b.measure("A2");
    for i in 1..=3 {
        b.choice_reveal(&ids[i - 1..=i]);
        b.undo(&ids[i - 1]).expect("fixture");
        b.measure(&ids[i + 1]);
    }
    b.reveal(&ids[3..5]);
    b.finish().expect("fixture")
}

/// LF Peres–Mermin protocol: rows measured observable by observable, six Bobs
/// entangled with the first two rows. The argument is state independent; S starts in |00⟩.
pub fn lf_pm_protocol() -> ProtocolSpec {
    let pm = peres_mermin_fixture();
    let ids = labels(&crate::fixtures::PM_LABELS);
    let mut b = ProtocolBuilder::new(&pm.realization(StateVector::basis(vec![4], &[0])), &ids).expect("fixture");
    for l in &ids[..6] {
        b.add_bob(l).expect("fixture");
    }
    for row in 0..3 {
        let r = &ids[3 * row..3 * row + 3];
        for l in r {
            b.measure(l);
        }
        if row < 2 {
            b.choice_reveal(r);
            for l in r.iter().rev() {
                b.undo(l).expect("fixture");
            }
        } else {
            b.reveal(r);
        }
    }
    b.finish().expect("fixture")
}

/// The coupled initial state written out directly: Σ_k (P_{k_n} ⋯ P_{k_1} ψ) ⊗ |k_1 … k_n⟩
/// over the coupled remote registers, all other registers in |0⟩. Requires a single
/// system register holding the only initial block.
pub fn entangled_initial_state(p: &ProtocolSpec) -> Result<StateVector, QuantumError> {
    p.validate()?;
    let sys: Vec<usize> = (0..p.registers.len()).filter(|&k| p.registers[k].kind == RegisterKind::System).collect();
    let [s] = sys[..] else {
        return Err(QuantumError::Invalid("direct construction needs exactly one system register".into()));
    };
    let [block] = &p.initial.blocks[..] else {
        return Err(QuantumError::Invalid("direct construction needs exactly one initial block".into()));
    };
    if block.registers != [p.registers[s].name.clone()] {
        return Err(QuantumError::Invalid("the initial block must be the system register".into()));
    }
    let psi = DVector::from_iterator(block.amplitudes.len(), block.amplitudes.iter().map(|[re, im]| crate::C64::new(*re, *im)));
    let pvms: Vec<_> = p.initial.couplings.iter().map(|c| &p.measurement(&c.measurement).expect("validated").pvm).collect();
    let remotes: Vec<usize> = p.initial.couplings.iter().map(|c| p.register_index(&c.remote).expect("validated")).collect();
    let dims = p.dims();
    let mut out = StateVector::basis(dims.clone(), &vec![0; dims.len()]);
    out.amplitudes[0] = crate::C64::new(0.0, 0.0);
    let cards: Vec<usize> = pvms.iter().map(|m| m.n_outcomes()).collect();
    for ks in scenario::tuples(&cards) {
        let v = ks.iter().zip(&pvms).fold(psi.clone(), |v, (&k, m)| &m.projectors[k] * v);
        let mut digits = vec![0; dims.len()];
        for (&r, &k) in remotes.iter().zip(&ks) {
            digits[r] = k;
        }
        for (i, a) in v.iter().enumerate() {
            digits[s] = i;
            out.amplitudes[scenario::encode(&digits, &dims)] = *a;
        }
    }
    Ok(out)
}
