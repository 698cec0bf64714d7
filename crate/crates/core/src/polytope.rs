//! H- and V-representations, LP-backed polyhedral queries.

use crate::linalg;
use crate::lp::{self, LinearProgram, LpError, OptOutcome};
use crate::rational::{self, Rational};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolytopeError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{0}")]
    Other(String),
}

/// coeffs · x ≤ bound
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct Inequality {
    #[serde(with = "rational::serde_str::vec")]
    pub coeffs: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
}

/// coeffs · x = rhs
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Equality {
    #[serde(with = "rational::serde_str::vec")]
    pub coeffs: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub rhs: Rational,
}

impl Inequality {
    pub fn new(coeffs: Vec<Rational>, bound: Rational) -> Self {
        Inequality { coeffs, bound }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        rational::dot(&self.coeffs, x)
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        self.eval(x) <= self.bound
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Positive rescaling to coprime integers.
    pub fn normalized(&self) -> Self {
        let mut all = self.coeffs.clone();
        all.push(self.bound.clone());
        let ints = rational::integerize(&all);
        let n = ints.len() - 1;
        Inequality {
            coeffs: ints[..n]
                .iter()
                .map(|i| Rational::from_integer(i.clone()))
                .collect(),
            bound: Rational::from_integer(ints[n].clone()),
        }
    }
}

impl Equality {
    pub fn new(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Equality { coeffs, rhs }
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        rational::dot(&self.coeffs, x) == self.rhs
    }

    /// Coprime integers with positive leading nonzero coefficient.
    pub fn normalized(&self) -> Self {
        let mut all = self.coeffs.clone();
        all.push(self.rhs.clone());
        let mut ints = rational::integerize(&all);
        if ints
            .iter()
            .find(|i| !i.is_zero())
            .is_some_and(|i| i.is_negative())
        {
            ints.iter_mut().for_each(|i| *i = -i.clone());
        }
        let n = ints.len() - 1;
        Equality {
            coeffs: ints[..n]
                .iter()
                .map(|i| Rational::from_integer(i.clone()))
                .collect(),
            rhs: Rational::from_integer(ints[n].clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct HPolytope {
    pub dim: usize,
    pub inequalities: Vec<Inequality>,
    pub equalities: Vec<Equality>,
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct VPolytope {
    pub dim: usize,
    #[serde(with = "rational::serde_str::vecvec")]
    pub vertices: Vec<Vec<Rational>>,
    #[serde(default, with = "rational::serde_str::vecvec")]
    pub rays: Vec<Vec<Rational>>,
}

impl HPolytope {
    pub fn new(dim: usize) -> Self {
        HPolytope {
            dim,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<(), PolytopeError> {
        for i in &self.inequalities {
            if i.coeffs.len() != self.dim {
                return Err(PolytopeError::DimensionMismatch(i.coeffs.len(), self.dim));
            }
        }
        for e in &self.equalities {
            if e.coeffs.len() != self.dim {
                return Err(PolytopeError::DimensionMismatch(e.coeffs.len(), self.dim));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.inequalities.iter().all(|i| i.holds(x)) && self.equalities.iter().all(|e| e.holds(x))
    }

    /// LP over free variables x with these constraints.
    pub fn lp(&self) -> LinearProgram {
        let mut p = LinearProgram::new(self.dim);
        for e in &self.equalities {
            p.add_eq(e.coeffs.clone(), e.rhs.clone());
        }
        for i in &self.inequalities {
            p.add_le(i.coeffs.clone(), i.bound.clone());
        }
        p
    }

    /// Unit hypercube [0,1]^n.
    pub fn cube(n: usize) -> Self {
        let mut h = HPolytope::new(n);
        for k in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[k] = rational::one();
            h.inequalities
                .push(Inequality::new(e.clone(), rational::one()));
            e[k] = -rational::one();
            h.inequalities.push(Inequality::new(e, rational::zero()));
        }
        h
    }
}

impl VPolytope {
    pub fn new(dim: usize, vertices: Vec<Vec<Rational>>) -> Self {
        VPolytope {
            dim,
            vertices,
            rays: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Result of maximizing a linear functional.
#[derive(Debug, Clone, PartialEq)]
pub enum Extremum {
    Empty,
    Unbounded {
        point: Vec<Rational>,
        ray: Vec<Rational>,
    },
    Optimal {
        value: Rational,
        point: Vec<Rational>,
    },
}

/// A polyhedron that can be optimized over with exact LPs.
pub trait Polyhedron {
    fn ambient_dim(&self) -> usize;
    fn maximize(&self, c: &[Rational]) -> Result<Extremum, PolytopeError>;
}

impl Polyhedron for HPolytope {
    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn maximize(&self, c: &[Rational]) -> Result<Extremum, PolytopeError> {
        if c.len() != self.dim {
            return Err(PolytopeError::DimensionMismatch(c.len(), self.dim));
        }
        from_outcome(lp::maximize(&self.lp(), c.to_vec()), |x| x.to_vec())
    }
}

/// Maps an LP outcome to an [`Extremum`], projecting points with `proj`.
pub fn from_outcome(
    r: Result<OptOutcome, LpError>,
    proj: impl Fn(&[Rational]) -> Vec<Rational>,
) -> Result<Extremum, PolytopeError> {
    match r {
        Ok(OptOutcome::Optimal(o)) => Ok(Extremum::Optimal {
            value: o.value,
            point: proj(&o.argmax),
        }),
        Ok(OptOutcome::Unbounded { point, ray }) => Ok(Extremum::Unbounded {
            point: proj(&point),
            ray: proj(&ray),
        }),
        Err(LpError::Infeasible { .. }) => Ok(Extremum::Empty),
        Err(e) => Err(e.into()),
    }
}

/// Dimension of the affine hull, by LP probes; −1 for the empty set.
///
/// Grows a set of affinely independent points and a set of implicit equality
/// directions until together they span the ambient space.
pub fn affine_dimension<P: Polyhedron + ?Sized>(p: &P) -> Result<i64, PolytopeError> {
    Ok(affine_hull(p)?.map_or(-1, |h| h.directions.len() as i64))
}

#[derive(Debug, Clone)]
pub struct AffineHull {
    pub base: Vec<Rational>,
    pub directions: Vec<Vec<Rational>>,
    /// Normals c such that c·x is constant on the set.
    pub normals: Vec<Vec<Rational>>,
}

pub fn affine_hull<P: Polyhedron + ?Sized>(p: &P) -> Result<Option<AffineHull>, PolytopeError> {
    let n = p.ambient_dim();
    let zero = vec![Rational::zero(); n];
    let base = match p.maximize(&zero)? {
        Extremum::Empty => return Ok(None),
        Extremum::Optimal { point, .. } | Extremum::Unbounded { point, .. } => point,
    };
    let mut dirs: Vec<Vec<Rational>> = Vec::new();
    let mut normals: Vec<Vec<Rational>> = Vec::new();
    loop {
        let mut known = dirs.clone();
        known.extend(normals.iter().cloned());
        let ns = linalg::nullspace(&known, n);
        let Some(c) = ns.into_iter().next() else {
            break;
        };
        let c0 = rational::dot(&c, &base);
        let mut found = None;
        for sign in [1i64, -1] {
            let cs: Vec<Rational> = c.iter().map(|x| x * rational::int(sign)).collect();
            match p.maximize(&cs)? {
                Extremum::Empty => return Ok(None),
                Extremum::Unbounded { point, ray } => {
                    let q = if rational::dot(&c, &point) != c0 {
                        point
                    } else {
                        point.iter().zip(&ray).map(|(a, b)| a + b).collect()
                    };
                    found = Some(q);
                    break;
                }
                Extremum::Optimal { point, .. } => {
                    if rational::dot(&c, &point) != c0 {
                        found = Some(point);
                        break;
                    }
                }
            }
        }
        match found {
            Some(q) => dirs.push(q.iter().zip(&base).map(|(a, b)| a - b).collect()),
            None => normals.push(c),
        }
    }
    Ok(Some(AffineHull {
        base,
        directions: dirs,
        normals,
    }))
}

/// Canonical form of an inequality modulo the span of the given equalities:
/// orthogonal projection of (coeffs, bound) away from the equality rows,
/// followed by positive rescaling to coprime integers.
pub fn canonical_modulo(ineq: &Inequality, equalities: &[Equality]) -> Inequality {
    let n = ineq.coeffs.len();
    let basis = orthogonal_basis(equalities.iter().map(|e| {
        let mut v = e.coeffs.clone();
        v.push(e.rhs.clone());
        v
    }));
    let mut v = ineq.coeffs.clone();
    v.push(ineq.bound.clone());
    for b in &basis {
        let f = rational::dot(&v, b) / rational::dot(b, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= &f * y;
        }
    }
    Inequality::new(v[..n].to_vec(), v[n].clone()).normalized()
}

fn orthogonal_basis(vs: impl Iterator<Item = Vec<Rational>>) -> Vec<Vec<Rational>> {
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    for mut v in vs {
        for b in &basis {
            let f = rational::dot(&v, b) / rational::dot(b, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= &f * y;
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            let ints = rational::integerize(&v);
            basis.push(ints.into_iter().map(Rational::from_integer).collect());
        }
    }
    basis
}

/// Whether `a` equals a positive multiple of `b` plus a combination of equalities.
pub fn equivalent_modulo(a: &Inequality, b: &Inequality, equalities: &[Equality]) -> bool {
    canonical_modulo(a, equalities) == canonical_modulo(b, equalities)
}

/// Drops duplicate and redundant inequalities. An inequality is kept only if
/// an LP finds a point satisfying all other kept constraints that violates it.
pub fn remove_redundant(h: &HPolytope) -> Result<HPolytope, PolytopeError> {
    h.check()?;
    let mut eqs: Vec<Equality> = Vec::new();
    {
        let rows: Vec<Vec<Rational>> = h
            .equalities
            .iter()
            .map(|e| {
                let mut v = e.coeffs.clone();
                v.push(e.rhs.clone());
                v
            })
            .collect();
        let mut m = rows;
        let piv = linalg::rref(&mut m, h.dim + 1);
        if piv.contains(&h.dim) {
            // inconsistent equalities: keep a single contradiction
            let c = vec![Rational::zero(); h.dim];
            return Ok(HPolytope {
                dim: h.dim,
                inequalities: vec![Inequality::new(c, rational::int(-1))],
                equalities: Vec::new(),
            });
        }
        for row in m {
            eqs.push(Equality::new(row[..h.dim].to_vec(), row[h.dim].clone()).normalized());
        }
    }
    let mut ineqs: Vec<Inequality> = Vec::new();
    for i in &h.inequalities {
        let n = i.normalized();
        if n.is_trivial() {
            if n.bound.is_negative() && !ineqs.contains(&n) {
                ineqs.push(n);
            }
            continue;
        }
        if !ineqs.contains(&n) {
            ineqs.push(n);
        }
    }
    let mut k = 0;
    while k < ineqs.len() {
        if ineqs[k].is_trivial() {
            k += 1;
            continue;
        }
        let mut rest = HPolytope {
            dim: h.dim,
            inequalities: Vec::new(),
            equalities: eqs.clone(),
        };
        for (j, q) in ineqs.iter().enumerate() {
            if j != k {
                rest.inequalities.push(q.clone());
            }
        }
        let target = &ineqs[k];
        rest.inequalities.push(Inequality::new(
            target.coeffs.clone(),
            &target.bound + rational::one(),
        ));
        let redundant = match rest.maximize(&target.coeffs)? {
            Extremum::Empty => true,
            Extremum::Optimal { value, .. } => value <= target.bound,
            Extremum::Unbounded { .. } => false,
        };
        if redundant {
            ineqs.remove(k);
        } else {
            k += 1;
        }
    }
    Ok(HPolytope {
        dim: h.dim,
        inequalities: ineqs,
        equalities: eqs,
    })
}

pub fn intersect(h1: &HPolytope, h2: &HPolytope) -> Result<HPolytope, PolytopeError> {
    if h1.dim != h2.dim {
        return Err(PolytopeError::DimensionMismatch(h1.dim, h2.dim));
    }
    let mut h = h1.clone();
    h.inequalities.extend(h2.inequalities.iter().cloned());
    h.equalities.extend(h2.equalities.iter().cloned());
    remove_redundant(&h)
}

/// Inner set for containment queries.
pub enum Inner<'a> {
    Vertices(&'a VPolytope),
    Lp(&'a dyn Polyhedron),
}

/// Outer set: either explicit constraints or a membership oracle with probe directions.
pub trait Membership {
    fn ambient(&self) -> usize;
    fn is_member(&self, x: &[Rational]) -> Result<bool, PolytopeError>;
}

impl Membership for HPolytope {
    fn ambient(&self) -> usize {
        self.dim
    }

    fn is_member(&self, x: &[Rational]) -> Result<bool, PolytopeError> {
        Ok(self.contains(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetResult {
    pub subset: bool,
    pub witness: Option<Vec<Rational>>,
}

fn inner_dim(inner: &Inner) -> usize {
    match inner {
        Inner::Vertices(v) => v.dim,
        Inner::Lp(p) => p.ambient_dim(),
    }
}

/// Containment in an explicit H-polytope. Exact for both kinds of inner set.
pub fn is_subset(inner: Inner, outer: &HPolytope) -> Result<SubsetResult, PolytopeError> {
    let d = inner_dim(&inner);
    if d != outer.dim {
        return Err(PolytopeError::DimensionMismatch(d, outer.dim));
    }
    match inner {
        Inner::Vertices(v) => {
            for x in &v.vertices {
                if !outer.contains(x) {
                    return Ok(SubsetResult {
                        subset: false,
                        witness: Some(x.clone()),
                    });
                }
            }
            if let Some(x0) = v.vertices.first() {
                for r in &v.rays {
                    let bad = outer.inequalities.iter().any(|i| i.eval(r).is_positive())
                        || outer
                            .equalities
                            .iter()
                            .any(|e| !rational::dot(&e.coeffs, r).is_zero());
                    if bad {
                        let w = escape_along(outer, x0, r);
                        return Ok(SubsetResult {
                            subset: false,
                            witness: Some(w),
                        });
                    }
                }
            }
            Ok(SubsetResult {
                subset: true,
                witness: None,
            })
        }
        Inner::Lp(p) => {
            let mut probes: Vec<(Vec<Rational>, Rational)> = outer
                .inequalities
                .iter()
                .map(|i| (i.coeffs.clone(), i.bound.clone()))
                .collect();
            for e in &outer.equalities {
                probes.push((e.coeffs.clone(), e.rhs.clone()));
                probes.push((e.coeffs.iter().map(|c| -c).collect(), -e.rhs.clone()));
            }
            for (c, b) in probes {
                match p.maximize(&c)? {
                    Extremum::Empty => {
                        return Ok(SubsetResult {
                            subset: true,
                            witness: None,
                        })
                    }
                    Extremum::Optimal { value, point } => {
                        if value > b {
                            return Ok(SubsetResult {
                                subset: false,
                                witness: Some(point),
                            });
                        }
                    }
                    Extremum::Unbounded { point, ray } => {
                        return Ok(SubsetResult {
                            subset: false,
                            witness: Some(escape_along(outer, &point, &ray)),
                        });
                    }
                }
            }
            Ok(SubsetResult {
                subset: true,
                witness: None,
            })
        }
    }
}

fn escape_along(outer: &HPolytope, x0: &[Rational], r: &[Rational]) -> Vec<Rational> {
    let mut t = rational::one();
    loop {
        let w: Vec<Rational> = x0.iter().zip(r).map(|(a, b)| a + &t * b).collect();
        if !outer.contains(&w) {
            return w;
        }
        t = &t * rational::int(2);
    }
}

/// Containment in a set given by a membership oracle. Vertices are checked
/// exactly; for an LP inner set, the maximizers of the given probe directions
/// are tested.
pub fn is_subset_probed(
    inner: Inner,
    outer: &dyn Membership,
    probes: &[Vec<Rational>],
) -> Result<SubsetResult, PolytopeError> {
    let d = inner_dim(&inner);
    if d != outer.ambient() {
        return Err(PolytopeError::DimensionMismatch(d, outer.ambient()));
    }
    match inner {
        Inner::Vertices(v) => {
            for x in &v.vertices {
                if !outer.is_member(x)? {
                    return Ok(SubsetResult {
                        subset: false,
                        witness: Some(x.clone()),
                    });
                }
            }
            Ok(SubsetResult {
                subset: true,
                witness: None,
            })
        }
        Inner::Lp(p) => {
            for c in probes {
                if let Extremum::Optimal { point, .. } = p.maximize(c)? {
                    if !outer.is_member(&point)? {
                        return Ok(SubsetResult {
                            subset: false,
                            witness: Some(point),
                        });
                    }
                }
            }
            Ok(SubsetResult {
                subset: true,
                witness: None,
            })
        }
    }
}

/// Integer vector helper for callers that need canonical integer facets.
pub fn integer_coeffs(i: &Inequality) -> (Vec<BigInt>, BigInt) {
    let n = i.normalized();
    (
        n.coeffs.iter().map(|c| c.to_integer()).collect(),
        n.bound.to_integer(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    fn square_at(x0: i64, y0: i64, side: i64) -> HPolytope {
        let mut h = HPolytope::new(2);
        h.inequalities
            .push(Inequality::new(v(&[1, 0]), int(x0 + side)));
        h.inequalities.push(Inequality::new(v(&[-1, 0]), int(-x0)));
        h.inequalities
            .push(Inequality::new(v(&[0, 1]), int(y0 + side)));
        h.inequalities.push(Inequality::new(v(&[0, -1]), int(-y0)));
        h
    }

    #[test]
    fn dimension_examples() {
        let mut h = HPolytope::cube(3);
        h.equalities.push(Equality::new(v(&[0, 0, 1]), frac(1, 2)));
        assert_eq!(affine_dimension(&h).unwrap(), 2);
        let mut pt = HPolytope::new(2);
        pt.equalities.push(Equality::new(v(&[1, 0]), int(1)));
        pt.equalities.push(Equality::new(v(&[0, 1]), int(2)));
        assert_eq!(affine_dimension(&pt).unwrap(), 0);
        let mut empty = HPolytope::cube(2);
        empty
            .inequalities
            .push(Inequality::new(v(&[1, 1]), int(-1)));
        assert_eq!(affine_dimension(&empty).unwrap(), -1);
        assert_eq!(affine_dimension(&HPolytope::cube(4)).unwrap(), 4);
    }

    #[test]
    fn redundancy() {
        let mut h = square_at(0, 0, 1);
        h.inequalities.push(h.inequalities[0].clone());
        h.inequalities.push(Inequality::new(v(&[2, 0]), int(2)));
        // an enclosing octagon-like cut
        h.inequalities.push(Inequality::new(v(&[1, 1]), int(3)));
        h.inequalities.push(Inequality::new(v(&[-1, 1]), int(2)));
        let r = remove_redundant(&h).unwrap();
        assert_eq!(r.inequalities.len(), 4);
    }

    #[test]
    fn intersections() {
        let p = square_at(0, 0, 2);
        assert_eq!(remove_redundant(&p).unwrap(), intersect(&p, &p).unwrap());
        let q = square_at(1, 0, 2);
        let r = intersect(&p, &q).unwrap();
        assert_eq!(r.inequalities.len(), 4);
        assert!(r.contains(&v(&[1, 0])) && r.contains(&v(&[2, 2])) && !r.contains(&v(&[0, 0])));
        assert!(intersect(&p, &HPolytope::cube(3)).is_err());
    }

    #[test]
    fn subsets() {
        let p = square_at(0, 0, 2);
        assert!(is_subset(Inner::Lp(&p), &p).unwrap().subset);
        let small = square_at(0, 0, 1);
        assert!(is_subset(Inner::Lp(&small), &p).unwrap().subset);
        let r = is_subset(Inner::Lp(&p), &small).unwrap();
        assert!(!r.subset && !small.contains(r.witness.as_ref().unwrap()));
        let vp = VPolytope::new(2, vec![v(&[0, 0]), v(&[3, 0])]);
        assert!(!is_subset(Inner::Vertices(&vp), &p).unwrap().subset);
    }

    #[test]
    fn canonical_forms() {
        let eqs = vec![Equality::new(v(&[1, 1]), int(1))];
        let a = Inequality::new(v(&[1, 0]), int(1));
        // x ≤ 1 is the same as x + 2(x+y) ≤ 3 on the line x+y=1, and as 2x ≤ 2
        let b = Inequality::new(v(&[3, 2]), int(3));
        let c = Inequality::new(v(&[2, 0]), int(2));
        assert!(equivalent_modulo(&a, &b, &eqs));
        assert!(equivalent_modulo(&a, &c, &[]));
        let d = Inequality::new(v(&[-1, 0]), int(-1));
        assert!(!equivalent_modulo(&a, &d, &[]));
    }
}
