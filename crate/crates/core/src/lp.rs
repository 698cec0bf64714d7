//! Exact rational simplex with Farkas and unboundedness certificates.
//!
//! Two-phase tableau method over [`Rational`], Bland's pivoting rule. Every
//! certificate returned by [`solve_feasibility`] and [`optimize`] is re-checked
//! by [`check_certificate`] before it leaves this module.

use crate::qnum::Q;
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Row {
    #[serde(with = "rational::serde_str::vec")]
    pub coeffs: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub rhs: Rational,
}

impl Row {
    pub fn new(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Row { coeffs, rhs }
    }
}

/// `equalities`: row·x = rhs. `inequalities`: row·x ≤ rhs. Variables listed in
/// `nonneg` are constrained to be ≥ 0, the others are free.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub equalities: Vec<Row>,
    pub inequalities: Vec<Row>,
    pub nonneg: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_vec")]
    pub objective: Option<Vec<Rational>>,
}

mod opt_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => rational::serde_str::vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
        let v = Option::<Vec<String>>::deserialize(d)?;
        match v {
            None => Ok(None),
            Some(v) => v
                .iter()
                .map(|s| rational::parse(s).map_err(serde::de::Error::custom))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Feasible {
        point: Vec<Rational>,
    },
    /// One multiplier per equality row followed by one per inequality row.
    Infeasible {
        farkas: Vec<Rational>,
    },
    Unbounded {
        point: Vec<Rational>,
        ray: Vec<Rational>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub value: Rational,
    pub argmax: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptOutcome {
    Optimal(Optimum),
    Unbounded {
        point: Vec<Rational>,
        ray: Vec<Rational>,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("program is infeasible")]
    Infeasible { farkas: Vec<Rational> },
    #[error("program has no objective")]
    NoObjective,
    #[error("certificate check failed: {0}")]
    BadCertificate(String),
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            ..Default::default()
        }
    }

    pub fn all_nonneg(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            nonneg: (0..n_vars).collect(),
            ..Default::default()
        }
    }

    pub fn add_eq(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.equalities.push(Row::new(coeffs, rhs));
    }

    pub fn add_le(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.inequalities.push(Row::new(coeffs, rhs));
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for (k, r) in self.equalities.iter().chain(&self.inequalities).enumerate() {
            if r.coeffs.len() != self.n_vars {
                return Err(LpError::Malformed(format!(
                    "row {k} has {} coefficients, expected {}",
                    r.coeffs.len(),
                    self.n_vars
                )));
            }
        }
        if let Some(c) = &self.objective {
            if c.len() != self.n_vars {
                return Err(LpError::Malformed("objective length mismatch".into()));
            }
        }
        if let Some(&j) = self.nonneg.iter().find(|&&j| j >= self.n_vars) {
            return Err(LpError::Malformed(format!("nonneg index {j} out of range")));
        }
        Ok(())
    }

    fn nonneg_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_vars];
        for &j in &self.nonneg {
            m[j] = true;
        }
        m
    }

    /// Plain-text dump, one constraint per line, readable by [`LinearProgram::from_rows`].
    pub fn to_rows(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars {}", self.n_vars);
        let nn: Vec<String> = self.nonneg.iter().map(|j| j.to_string()).collect();
        let _ = writeln!(s, "nonneg {}", nn.join(" "));
        let line = |c: &[Rational]| c.iter().map(rational::fmt).collect::<Vec<_>>().join(" ");
        if let Some(c) = &self.objective {
            let _ = writeln!(s, "max {}", line(c));
        }
        for r in &self.equalities {
            let _ = writeln!(s, "eq {} = {}", line(&r.coeffs), rational::fmt(&r.rhs));
        }
        for r in &self.inequalities {
            let _ = writeln!(s, "le {} <= {}", line(&r.coeffs), rational::fmt(&r.rhs));
        }
        s
    }

    pub fn from_rows(text: &str) -> Result<Self, LpError> {
        let bad = |m: &str| LpError::Malformed(m.to_string());
        let mut lp: Option<LinearProgram> = None;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kw, rest) = line.split_once(' ').unwrap_or((line, ""));
            if kw == "vars" {
                let n: usize = rest.trim().parse().map_err(|_| bad("bad vars line"))?;
                if n > 1_000_000 {
                    return Err(bad("too many variables"));
                }
                lp = Some(LinearProgram::new(n));
                continue;
            }
            let p = lp.as_mut().ok_or_else(|| bad("missing vars line"))?;
            let nums = |t: &str| -> Result<Vec<Rational>, LpError> {
                t.split_whitespace()
                    .map(|x| rational::parse(x).map_err(|e| bad(&e.to_string())))
                    .collect()
            };
            match kw {
                "nonneg" => {
                    p.nonneg = rest
                        .split_whitespace()
                        .map(|x| x.parse::<usize>().map_err(|_| bad("bad nonneg index")))
                        .collect::<Result<_, _>>()?;
                }
                "max" => p.objective = Some(nums(rest)?),
                "eq" => {
                    let (l, r) = rest
                        .split_once('=')
                        .ok_or_else(|| bad("eq row without '='"))?;
                    let rhs = rational::parse(r).map_err(|e| bad(&e.to_string()))?;
                    p.equalities.push(Row::new(nums(l)?, rhs));
                }
                "le" => {
                    let (l, r) = rest
                        .split_once("<=")
                        .ok_or_else(|| bad("le row without '<='"))?;
                    let rhs = rational::parse(r).map_err(|e| bad(&e.to_string()))?;
                    p.inequalities.push(Row::new(nums(l)?, rhs));
                }
                _ => return Err(bad("unknown keyword")),
            }
        }
        let p = lp.ok_or_else(|| bad("empty program"))?;
        p.validate()?;
        Ok(p)
    }
}

/// Independent evaluator for certificates. Uses only the original program data.
pub fn check_certificate(lp: &LinearProgram, cert: &Certificate) -> Result<(), String> {
    let nn = lp.nonneg_mask();
    match cert {
        Certificate::Feasible { point } => check_point(lp, point, &nn),
        Certificate::Infeasible { farkas } => {
            let ne = lp.equalities.len();
            if farkas.len() != ne + lp.inequalities.len() {
                return Err("farkas length mismatch".into());
            }
            if farkas[ne..].iter().any(|m| m.is_negative()) {
                return Err("negative multiplier on an inequality row".into());
            }
            let mut comb = vec![Rational::zero(); lp.n_vars];
            let mut rhs = Rational::zero();
            for (m, r) in farkas
                .iter()
                .zip(lp.equalities.iter().chain(&lp.inequalities))
            {
                if m.is_zero() {
                    continue;
                }
                for (c, a) in comb.iter_mut().zip(&r.coeffs) {
                    if !a.is_zero() {
                        *c += m * a;
                    }
                }
                rhs += m * &r.rhs;
            }
            for (j, c) in comb.iter().enumerate() {
                if nn[j] {
                    if c.is_negative() {
                        return Err(format!(
                            "combined coefficient {j} negative on a nonneg variable"
                        ));
                    }
                } else if !c.is_zero() {
                    return Err(format!(
                        "combined coefficient {j} nonzero on a free variable"
                    ));
                }
            }
            if !rhs.is_negative() {
                return Err("combined right-hand side is not negative".into());
            }
            Ok(())
        }
        Certificate::Unbounded { point, ray } => {
            check_point(lp, point, &nn)?;
            let obj = lp
                .objective
                .as_ref()
                .ok_or("unbounded certificate without objective")?;
            if ray.len() != lp.n_vars {
                return Err("ray length mismatch".into());
            }
            for r in &lp.equalities {
                if !rational::dot(&r.coeffs, ray).is_zero() {
                    return Err("ray leaves an equality".into());
                }
            }
            for r in &lp.inequalities {
                if rational::dot(&r.coeffs, ray).is_positive() {
                    return Err("ray violates an inequality".into());
                }
            }
            for (j, v) in ray.iter().enumerate() {
                if nn[j] && v.is_negative() {
                    return Err("ray decreases a nonneg variable".into());
                }
            }
            if !rational::dot(obj, ray).is_positive() {
                return Err("ray does not improve the objective".into());
            }
            Ok(())
        }
    }
}

fn check_point(lp: &LinearProgram, point: &[Rational], nn: &[bool]) -> Result<(), String> {
    if point.len() != lp.n_vars {
        return Err("point length mismatch".into());
    }
    for (j, v) in point.iter().enumerate() {
        if nn[j] && v.is_negative() {
            return Err(format!("variable {j} negative"));
        }
    }
    for (k, r) in lp.equalities.iter().enumerate() {
        if rational::dot(&r.coeffs, point) != r.rhs {
            return Err(format!("equality {k} violated"));
        }
    }
    for (k, r) in lp.inequalities.iter().enumerate() {
        if rational::dot(&r.coeffs, point) > r.rhs {
            return Err(format!("inequality {k} violated"));
        }
    }
    Ok(())
}

pub fn solve_feasibility(lp: &LinearProgram) -> Result<Certificate, LpError> {
    lp.validate()?;
    let mut t = Tableau::build(lp);
    let cert = match t.phase1() {
        Phase1::Infeasible(farkas) => Certificate::Infeasible { farkas },
        Phase1::Feasible => Certificate::Feasible { point: t.point() },
    };
    check_certificate(lp, &cert).map_err(LpError::BadCertificate)?;
    Ok(cert)
}

pub fn optimize(lp: &LinearProgram) -> Result<OptOutcome, LpError> {
    lp.validate()?;
    let obj = lp.objective.as_ref().ok_or(LpError::NoObjective)?;
    let mut t = Tableau::build(lp);
    if let Phase1::Infeasible(farkas) = t.phase1() {
        let cert = Certificate::Infeasible { farkas };
        check_certificate(lp, &cert).map_err(LpError::BadCertificate)?;
        let Certificate::Infeasible { farkas } = cert else {
            unreachable!()
        };
        return Err(LpError::Infeasible { farkas });
    }
    t.enter_phase2(obj);
    match t.run() {
        None => {
            let argmax = t.point();
            let value = rational::dot(obj, &argmax);
            check_point(lp, &argmax, &lp.nonneg_mask()).map_err(LpError::BadCertificate)?;
            Ok(OptOutcome::Optimal(Optimum { value, argmax }))
        }
        Some(col) => {
            let point = t.point();
            let ray = t.ray(col);
            let cert = Certificate::Unbounded { point, ray };
            check_certificate(lp, &cert).map_err(LpError::BadCertificate)?;
            let Certificate::Unbounded { point, ray } = cert else {
                unreachable!()
            };
            Ok(OptOutcome::Unbounded { point, ray })
        }
    }
}

/// Convenience: maximize `objective` over the feasible set of `lp`.
pub fn maximize(lp: &LinearProgram, objective: Vec<Rational>) -> Result<OptOutcome, LpError> {
    let mut p = lp.clone();
    p.objective = Some(objective);
    optimize(&p)
}

enum Phase1 {
    Feasible,
    Infeasible(Vec<Rational>),
}

/// Column kinds of the standard-form program.
#[derive(Clone, Copy)]
enum Col {
    Pos(usize),
    Neg(usize),
    Slack,
    Art,
}

struct Tableau {
    n_orig: usize,
    cols: Vec<Col>,
    /// rows[r] has `cols.len() + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    /// Reduced costs for maximization; entering requires a positive entry.
    obj: Vec<Q>,
    allowed: Vec<bool>,
    /// Column that formed the initial identity for original row i, and its sign.
    init_col: Vec<usize>,
    sign: Vec<bool>,
    /// Standard-form row index for original row i (None once dropped as redundant).
    row_of: Vec<Option<usize>>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let nn = lp.nonneg_mask();
        let mut cols = Vec::new();
        let mut var_col = vec![(0usize, None::<usize>); lp.n_vars];
        for j in 0..lp.n_vars {
            let p = cols.len();
            cols.push(Col::Pos(j));
            let n = if nn[j] {
                None
            } else {
                cols.push(Col::Neg(j));
                Some(p + 1)
            };
            var_col[j] = (p, n);
        }
        let ne = lp.equalities.len();
        let all_rows: Vec<&Row> = lp.equalities.iter().chain(&lp.inequalities).collect();
        let m = all_rows.len();
        let mut slack_col = vec![None; m];
        for slot in slack_col.iter_mut().skip(ne) {
            *slot = Some(cols.len());
            cols.push(Col::Slack);
        }
        let mut init_col = vec![0; m];
        let mut sign = vec![false; m];
        for i in 0..m {
            sign[i] = all_rows[i].rhs.is_negative();
            let slack_ok = i >= ne && !sign[i];
            if slack_ok {
                init_col[i] = slack_col[i].unwrap();
            } else {
                init_col[i] = cols.len();
                cols.push(Col::Art);
            }
        }
        let width = cols.len() + 1;
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = vec![Q::ZERO; width];
            let r = all_rows[i];
            for (j, a) in r.coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let a = Q::from_rational(&if sign[i] { -a } else { a.clone() });
                let (p, n) = var_col[j];
                if let Some(n) = n {
                    row[n] = a.neg();
                }
                row[p] = a;
            }
            if let Some(s) = slack_col[i] {
                row[s] = if sign[i] { Q::ONE.neg() } else { Q::ONE };
            }
            if matches!(cols[init_col[i]], Col::Art) {
                row[init_col[i]] = Q::ONE;
            }
            row[width - 1] = Q::from_rational(&if sign[i] {
                -r.rhs.clone()
            } else {
                r.rhs.clone()
            });
            rows.push(row);
        }
        let basis = init_col.clone();
        let allowed = vec![true; cols.len()];
        Tableau {
            n_orig: lp.n_vars,
            cols,
            rows,
            basis,
            obj: vec![Q::ZERO; width],
            allowed,
            init_col,
            sign,
            row_of: (0..m).map(Some).collect(),
        }
    }

    fn width(&self) -> usize {
        self.cols.len() + 1
    }

    fn is_art(&self, j: usize) -> bool {
        matches!(self.cols[j], Col::Art)
    }

    /// Recomputes reduced costs for column costs `c` (maximization). The last entry holds −value.
    fn set_costs(&mut self, c: &[Q]) {
        let w = self.width();
        let mut obj = vec![Q::ZERO; w];
        for (j, v) in c.iter().enumerate() {
            obj[j] = v.clone();
        }
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(&self.rows[r]) {
                if !a.is_zero() {
                    o.sub_mul(cb, a);
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = Q::ONE.div(&self.rows[pr][pc]);
        if !inv.is_one() {
            for a in self.rows[pr].iter_mut() {
                if !a.is_zero() {
                    *a = a.mul(&inv);
                }
            }
        }
        let nz: Vec<usize> = (0..w).filter(|&j| !self.rows[pr][j].is_zero()).collect();
        let prow = std::mem::take(&mut self.rows[pr]);
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pr || row[pc].is_zero() {
                continue;
            }
            let f = row[pc].clone();
            for &j in &nz {
                row[j].sub_mul(&f, &prow[j]);
            }
        }
        if !self.obj[pc].is_zero() {
            let f = self.obj[pc].clone();
            for &j in &nz {
                self.obj[j].sub_mul(&f, &prow[j]);
            }
        }
        self.rows[pr] = prow;
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations with Bland's rule. Returns Some(column) if
    /// unbounded along that column.
    fn run(&mut self) -> Option<usize> {
        let rhs = self.width() - 1;
        loop {
            let enter =
                (0..self.cols.len()).find(|&j| self.allowed[j] && self.obj[j].is_positive());
            let Some(pc) = enter else { return None };
            let mut best: Option<(usize, Q)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[pc].is_positive() {
                    continue;
                }
                let ratio = row[rhs].div(&row[pc]);
                let better = match &best {
                    None => true,
                    Some((br, bv)) => match ratio.cmp(bv) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[r] < self.basis[*br],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                None => return Some(pc),
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
    }

    fn phase1(&mut self) -> Phase1 {
        let c: Vec<Q> = (0..self.cols.len())
            .map(|j| {
                if self.is_art(j) {
                    Q::ONE.neg()
                } else {
                    Q::ZERO
                }
            })
            .collect();
        self.set_costs(&c);
        let unbounded = self.run();
        debug_assert!(unbounded.is_none());
        let rhs = self.width() - 1;
        let infeasible = self
            .basis
            .iter()
            .enumerate()
            .any(|(r, &b)| self.is_art(b) && self.rows[r][rhs].is_positive());
        if infeasible {
            return Phase1::Infeasible(self.duals(&c));
        }
        Phase1::Feasible
    }

    /// y_i = c_B · B⁻¹ e_i, mapped back to the original row orientation.
    fn duals(&self, c: &[Q]) -> Vec<Rational> {
        let m = self.init_col.len();
        let mut y = vec![Rational::zero(); m];
        for i in 0..m {
            let Some(_) = self.row_of[i] else { continue };
            let col = self.init_col[i];
            let mut s = Q::ZERO;
            for (r, &b) in self.basis.iter().enumerate() {
                let a = &self.rows[r][col];
                if !a.is_zero() && !c[b].is_zero() {
                    s = s.add(&c[b].mul(a));
                }
            }
            // The initial column was an identity column, so B⁻¹e_i is read off it.
            let s = s.to_rational();
            y[i] = if self.sign[i] { -s } else { s };
        }
        y
    }

    fn enter_phase2(&mut self, objective: &[Rational]) {
        let rhs = self.width() - 1;
        // Drive artificial variables out of the basis or drop redundant rows.
        let mut r = 0;
        while r < self.rows.len() {
            if self.is_art(self.basis[r]) {
                debug_assert!(self.rows[r][rhs].is_zero());
                let pc =
                    (0..self.cols.len()).find(|&j| !self.is_art(j) && !self.rows[r][j].is_zero());
                match pc {
                    Some(pc) => self.pivot(r, pc),
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        for slot in self.row_of.iter_mut() {
                            if let Some(k) = *slot {
                                if k == r {
                                    *slot = None;
                                } else if k > r {
                                    *slot = Some(k - 1);
                                }
                            }
                        }
                        continue;
                    }
                }
            }
            r += 1;
        }
        for j in 0..self.cols.len() {
            if self.is_art(j) {
                self.allowed[j] = false;
            }
        }
        let mut c = vec![Q::ZERO; self.cols.len()];
        for (j, col) in self.cols.iter().enumerate() {
            match *col {
                Col::Pos(v) => c[j] = Q::from_rational(&objective[v]),
                Col::Neg(v) => c[j] = Q::from_rational(&-objective[v].clone()),
                _ => {}
            }
        }
        self.set_costs(&c);
    }

    fn point(&self) -> Vec<Rational> {
        let rhs = self.width() - 1;
        let mut x = vec![Rational::zero(); self.n_orig];
        for (r, &b) in self.basis.iter().enumerate() {
            match self.cols[b] {
                Col::Pos(v) => x[v] += self.rows[r][rhs].to_rational(),
                Col::Neg(v) => x[v] -= self.rows[r][rhs].to_rational(),
                _ => {}
            }
        }
        x
    }

    fn ray(&self, col: usize) -> Vec<Rational> {
        let mut d = vec![Rational::zero(); self.n_orig];
        let mut add = |c: Col, v: Rational| match c {
            Col::Pos(k) => d[k] += v,
            Col::Neg(k) => d[k] -= v,
            _ => {}
        };
        add(self.cols[col], Rational::one());
        for (r, &b) in self.basis.iter().enumerate() {
            let a = &self.rows[r][col];
            if !a.is_zero() {
                add(self.cols[b], -a.to_rational());
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn single_var_feasible() {
        let mut lp = LinearProgram::all_nonneg(1);
        lp.add_eq(v(&[1]), int(1));
        assert_eq!(
            solve_feasibility(&lp).unwrap(),
            Certificate::Feasible { point: v(&[1]) }
        );
    }

    #[test]
    fn single_var_infeasible() {
        let mut lp = LinearProgram::all_nonneg(1);
        lp.add_eq(v(&[1]), int(-1));
        let c = solve_feasibility(&lp).unwrap();
        assert!(matches!(c, Certificate::Infeasible { .. }));
        check_certificate(&lp, &c).unwrap();
    }

    #[test]
    fn box_max() {
        let mut lp = LinearProgram::all_nonneg(1);
        lp.add_le(v(&[1]), int(3));
        lp.objective = Some(v(&[1]));
        match optimize(&lp).unwrap() {
            OptOutcome::Optimal(o) => assert_eq!(o.value, int(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(2);
        lp.add_le(v(&[1, -1]), int(1));
        lp.objective = Some(v(&[1, 1]));
        assert!(matches!(
            optimize(&lp).unwrap(),
            OptOutcome::Unbounded { .. }
        ));
    }

    #[test]
    fn free_variables_and_negative_rhs() {
        // x free, y ≥ 0: x + y = -2, x ≥ -5 (−x ≤ 5); max y → 3
        let mut lp = LinearProgram::new(2);
        lp.nonneg = vec![1];
        lp.add_eq(v(&[1, 1]), int(-2));
        lp.add_le(v(&[-1, 0]), int(5));
        lp.objective = Some(v(&[0, 1]));
        match optimize(&lp).unwrap() {
            OptOutcome::Optimal(o) => {
                assert_eq!(o.value, int(3));
                assert_eq!(o.argmax, v(&[-5, 3]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_inequalities() {
        // x ≤ 1, -x ≤ -2 with x free
        let mut lp = LinearProgram::new(1);
        lp.add_le(v(&[1]), int(1));
        lp.add_le(v(&[-1]), int(-2));
        let c = solve_feasibility(&lp).unwrap();
        let Certificate::Infeasible { farkas } = c else {
            panic!()
        };
        assert!(farkas.iter().all(|m| !m.is_negative()));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::all_nonneg(3);
        lp.add_eq(v(&[1, 1, 1]), int(1));
        lp.add_eq(v(&[2, 2, 2]), int(2));
        lp.add_eq(v(&[1, 0, 0]), frac(1, 3));
        lp.objective = Some(v(&[0, 1, 0]));
        match optimize(&lp).unwrap() {
            OptOutcome::Optimal(o) => assert_eq!(o.value, frac(2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_optimize_reports_farkas() {
        let mut lp = LinearProgram::all_nonneg(2);
        lp.add_eq(v(&[1, 1]), int(1));
        lp.add_eq(v(&[1, 1]), int(2));
        lp.objective = Some(v(&[1, 0]));
        assert!(matches!(optimize(&lp), Err(LpError::Infeasible { .. })));
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut lp = LinearProgram::all_nonneg(2);
        lp.add_eq(v(&[1]), int(1));
        assert!(matches!(solve_feasibility(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn rows_round_trip() {
        let mut lp = LinearProgram::new(2);
        lp.nonneg = vec![0];
        lp.add_eq(vec![frac(1, 2), int(-3)], frac(7, 3));
        lp.add_le(v(&[0, 1]), int(4));
        lp.objective = Some(v(&[1, 1]));
        assert_eq!(LinearProgram::from_rows(&lp.to_rows()).unwrap(), lp);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::all_nonneg(4);
        lp.add_le(vec![frac(1, 4), int(-60), frac(-1, 25), int(9)], int(0));
        lp.add_le(vec![frac(1, 2), int(-90), frac(-1, 50), int(3)], int(0));
        lp.add_le(v(&[0, 0, 1, 0]), int(1));
        lp.objective = Some(vec![frac(3, 4), int(-150), frac(1, 50), int(-6)]);
        match optimize(&lp).unwrap() {
            OptOutcome::Optimal(o) => assert_eq!(o.value, frac(1, 20)),
            other => panic!("{other:?}"),
        }
    }
}
