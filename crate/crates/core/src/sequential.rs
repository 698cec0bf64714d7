//! Membership for multipartite sequential LF experiments.
//!
//! The direct formulation has one joint distribution per choice
//! configuration, over every outcome the configuration brings into existence.
//! Each joint reproduces the revealed statistics, and joints of configurations
//! that differ in a single party agree on everything that party's choice cannot
//! influence: all other parties' outcomes and the part of its own sequence
//! performed before the two configurations diverge.

use crate::marginal::{
    self, agree, normalize_block, tie_block_to_context, LiftedPolytope, MarginalError,
    MembershipCore, MembershipResult, Witness,
};
use crate::scenario::{self, tuples, Behavior, Party, SequentialLfSpec};

/// Statement used when a query is reduced to the global-joint LP.
pub const ONE_MAVERICK: &str =
    "binary choices with at most one maverick: the LF polytope equals the Bell polytope of the product scenario";

/// One way a party can run: what it performs and which outcome it reveals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyConfig {
    /// Local measurement indices in performance order.
    pub performed: Vec<usize>,
    pub revealed: usize,
}

/// All configurations of a party, in choice order.
pub fn party_configs(p: &Party) -> Vec<PartyConfig> {
    match &p.maverick {
        None => (1..=p.sequence_length)
            .map(|s| PartyConfig {
                performed: (0..s).collect(),
                revealed: s - 1,
            })
            .collect(),
        Some(m) if m.friendless => (0..m.final_choice)
            .map(|a| PartyConfig {
                performed: vec![a],
                revealed: a,
            })
            .collect(),
        Some(m) => {
            let n = p.sequence_length;
            // earlier choices reveal as for a regular party, the last one picks among final_choice options
            let early = (1..n).map(|s| PartyConfig {
                performed: (0..s).collect(),
                revealed: s - 1,
            });
            early
                .chain((1..=m.final_choice).map(|a| {
                    let mut performed: Vec<usize> = (0..n).collect();
                    if a == 1 {
                        PartyConfig {
                            performed,
                            revealed: n - 1,
                        }
                    } else {
                        performed.push(n + a - 2);
                        PartyConfig {
                            performed,
                            revealed: n + a - 2,
                        }
                    }
                }))
                .collect()
        }
    }
}

/// Outcomes shared by two configurations of the same party: the sequence
/// performed before their choices diverge.
pub fn common_prefix(p: &Party, a: &PartyConfig, b: &PartyConfig) -> Vec<usize> {
    match &p.maverick {
        None => (0..a.performed.len().min(b.performed.len())).collect(),
        Some(m) if m.friendless => Vec::new(),
        Some(_) => (0..a
            .performed
            .len()
            .min(b.performed.len())
            .min(p.sequence_length))
            .collect(),
    }
}

/// Direct LF polytope of a sequential spec over the product-scenario behavior coordinates.
pub fn sequential_lf_polytope(spec: &SequentialLfSpec) -> Result<LiftedPolytope, MarginalError> {
    let s = scenario::build_sequential_scenario(spec)?;
    let mut starts = Vec::new();
    let mut acc = 0;
    for p in &spec.parties {
        starts.push(acc);
        acc += p.n_measurements();
    }
    let configs: Vec<Vec<PartyConfig>> = spec.parties.iter().map(party_configs).collect();
    let counts: Vec<usize> = configs.iter().map(|c| c.len()).collect();
    let cards: Vec<usize> = s.measurements().iter().map(|m| m.card).collect();
    let mut p = LiftedPolytope::new(s.n_coords());

    // global measurement indices of each configuration's block, in party order
    let mut blocks: Vec<(Vec<usize>, Vec<usize>, usize)> = Vec::new();
    let all: Vec<Vec<usize>> = tuples(&counts).collect();
    for choice in &all {
        let mut vars = Vec::new();
        let mut revealed = Vec::new();
        for (k, &c) in choice.iter().enumerate() {
            let cfg = &configs[k][c];
            let start = vars.len();
            vars.extend(cfg.performed.iter().map(|&l| starts[k] + l));
            revealed.push(
                start
                    + cfg
                        .performed
                        .iter()
                        .position(|&l| l == cfg.revealed)
                        .unwrap(),
            );
        }
        let bc: Vec<usize> = vars.iter().map(|&m| cards[m]).collect();
        let names = vars
            .iter()
            .map(|&m| s.measurements()[m].id.clone())
            .collect();
        let off = p.add_block(names, bc.clone());
        let ctx_members: Vec<usize> = revealed.iter().map(|&r| vars[r]).collect();
        let ctx = s.context_index(&ctx_members).expect("product context");
        tie_block_to_context(&mut p, &s, &bc, off, &revealed, ctx);
        normalize_block(&mut p, off, bc.iter().product());
        blocks.push((vars, bc, off));
    }

    let index_of = |choice: &[usize]| scenario::encode(choice, &counts);
    for (bi, choice) in all.iter().enumerate() {
        for k in 0..spec.parties.len() {
            for alt in choice[k] + 1..counts[k] {
                let mut other = choice.clone();
                other[k] = alt;
                let bj = index_of(&other);
                let prefix =
                    common_prefix(&spec.parties[k], &configs[k][choice[k]], &configs[k][alt]);
                let mut shared = Vec::new();
                for (q, &c) in choice.iter().enumerate() {
                    if q == k {
                        shared.extend(prefix.iter().map(|&l| starts[q] + l));
                    } else {
                        shared.extend(configs[q][c].performed.iter().map(|&l| starts[q] + l));
                    }
                }
                let (va, ca, oa) = &blocks[bi];
                let (vb, cb, ob) = &blocks[bj];
                let pa: Vec<usize> = shared
                    .iter()
                    .map(|m| va.iter().position(|x| x == m).unwrap())
                    .collect();
                let pb: Vec<usize> = shared
                    .iter()
                    .map(|m| vb.iter().position(|x| x == m).unwrap())
                    .collect();
                agree(&mut p, (ca, *oa, &pa), (cb, *ob, &pb));
            }
        }
    }
    Ok(p)
}

/// Membership via the direct per-configuration LP. Valid for any number of mavericks.
pub fn lf_membership_sequential_direct(
    spec: &SequentialLfSpec,
    b: &Behavior,
) -> Result<MembershipResult, MarginalError> {
    let s = scenario::build_sequential_scenario(spec)?;
    b.validate(&s)?;
    let p = sequential_lf_polytope(spec)?;
    Ok(match p.check_membership(&b.coords())? {
        MembershipCore::Member(y) => {
            MembershipResult::member(Witness::Family(p.block_distributions(&y)))
        }
        MembershipCore::Separated(i) => MembershipResult::separated(i),
    })
}

/// Membership for specs with at most one maverick, decided by the global-joint LP.
///
/// Specs with two or more mavericks are refused: the reduction does not apply
/// and the LF polytope may be strictly larger. Use
/// [`lf_membership_sequential_direct`] or, for bipartite specs,
/// [`marginal::lf_membership`] instead.
pub fn lf_membership_sequential(
    spec: &SequentialLfSpec,
    b: &Behavior,
) -> Result<MembershipResult, MarginalError> {
    spec.validate()?;
    if spec.maverick_count() > 1 {
        return Err(MarginalError::Invalid(format!(
            "{} mavericks: the global-joint reduction needs at most one; use the direct LP",
            spec.maverick_count()
        )));
    }
    let s = scenario::build_sequential_scenario(spec)?;
    Ok(marginal::bell_membership(&s, b)?.with_theorem(ONE_MAVERICK))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;
    use crate::scenario::{LfSpec, Maverick};

    fn pr_box_like(s: &scenario::Scenario) -> Behavior {
        let mut b = Behavior::zeros(s);
        for (c, members) in s.contexts().iter().enumerate() {
            let x = usize::from(members[0] != 0);
            let y = usize::from(members[1] == 3);
            for a in 0..2 {
                for bb in 0..2 {
                    if (a ^ bb) == (x & y) {
                        b.set(s, c, &[a, bb], frac(1, 2));
                    }
                }
            }
        }
        b
    }

    #[test]
    fn configs() {
        let r = Party::regular(vec![2, 2, 2]);
        let c = party_configs(&r);
        assert_eq!(c.len(), 3);
        assert_eq!(c[2].performed, vec![0, 1, 2]);
        assert_eq!(common_prefix(&r, &c[0], &c[2]), vec![0]);
        let m = Party {
            sequence_length: 2,
            outcome_cards: vec![2; 4],
            maverick: Some(Maverick {
                final_choice: 3,
                friendless: false,
            }),
        };
        let c = party_configs(&m);
        assert_eq!(c.len(), 4);
        assert_eq!(
            c[0],
            PartyConfig {
                performed: vec![0],
                revealed: 0
            }
        );
        assert_eq!(
            c[1],
            PartyConfig {
                performed: vec![0, 1],
                revealed: 1
            }
        );
        assert_eq!(common_prefix(&m, &c[0], &c[3]), vec![0]);
        assert_eq!(common_prefix(&m, &c[2], &c[3]), vec![0, 1]);
        assert_eq!(
            c[3],
            PartyConfig {
                performed: vec![0, 1, 3],
                revealed: 3
            }
        );
        let f = SequentialLfSpec::minimal().parties[1].clone();
        let c = party_configs(&f);
        assert!(common_prefix(&f, &c[0], &c[1]).is_empty());
    }

    #[test]
    fn from_lf_mavericks() {
        assert_eq!(
            SequentialLfSpec::from_lf(&LfSpec::binary(2, 2)).maverick_count(),
            0
        );
        assert_eq!(
            SequentialLfSpec::from_lf(&LfSpec::binary(3, 2)).maverick_count(),
            1
        );
        assert_eq!(
            SequentialLfSpec::from_lf(&LfSpec::binary(3, 3)).maverick_count(),
            2
        );
    }

    #[test]
    fn pr_box_rejected_both_ways() {
        let spec = SequentialLfSpec::from_lf(&LfSpec::binary(2, 2));
        let s = scenario::build_sequential_scenario(&spec).unwrap();
        let b = pr_box_like(&s);
        assert!(!lf_membership_sequential(&spec, &b).unwrap().feasible);
        assert!(!lf_membership_sequential_direct(&spec, &b).unwrap().feasible);
        let u = Behavior::uniform(&s);
        let r = lf_membership_sequential(&spec, &u).unwrap();
        assert!(r.feasible);
        assert_eq!(r.theorem.as_deref(), Some(ONE_MAVERICK));
        assert!(lf_membership_sequential_direct(&spec, &u).unwrap().feasible);
    }

    #[test]
    fn two_mavericks_refused() {
        let spec = SequentialLfSpec::from_lf(&LfSpec::binary(3, 3));
        let s = scenario::build_sequential_scenario(&spec).unwrap();
        assert!(lf_membership_sequential(&spec, &Behavior::uniform(&s)).is_err());
        assert!(
            lf_membership_sequential_direct(&spec, &Behavior::uniform(&s))
                .unwrap()
                .feasible
        );
    }
}
