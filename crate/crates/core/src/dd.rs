//! Double description method for vertex and facet enumeration.
//!
//! Works on homogenized cones over integer vectors. Constraints are inserted
//! in index order; adjacency of extreme rays uses the combinatorial test on
//! zero sets after a rank-based cardinality filter.

use crate::linalg;
use crate::polytope::{
    canonical_modulo, Equality, HPolytope, Inequality, PolytopeError, VPolytope,
};
use crate::rational::{self, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;

type IVec = Vec<BigInt>;

fn idot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let mut s = BigInt::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

fn primitive(mut v: IVec) -> IVec {
    let mut g = BigInt::zero();
    for x in &v {
        g = g.gcd(x);
    }
    if !g.is_zero() && g != BigInt::from(1) {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
    v
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }
    fn contains(&self, o: &Bits) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a & b == *b)
    }
}

/// Extreme rays and lineality basis of {z : A z ≥ 0} in dimension `d`.
pub struct ConeGenerators {
    pub rays: Vec<IVec>,
    pub lines: Vec<IVec>,
}

/// Cone double description for constraints rows·z ≥ 0.
pub fn cone_dd(rows: &[IVec], d: usize) -> ConeGenerators {
    let m = rows.len();
    let mut lines: Vec<IVec> = (0..d)
        .map(|k| {
            let mut e = vec![BigInt::zero(); d];
            e[k] = BigInt::from(1);
            e
        })
        .collect();
    let mut rays: Vec<(IVec, Bits)> = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        if let Some(li) = lines.iter().position(|l| !idot(a, l).is_zero()) {
            let mut l = lines.remove(li);
            let mut al = idot(a, &l);
            if al.is_negative() {
                l.iter_mut().for_each(|x| *x = -x.clone());
                al = -al;
            }
            for other in lines.iter_mut() {
                let ao = idot(a, other);
                if !ao.is_zero() {
                    let v: IVec = other
                        .iter()
                        .zip(&l)
                        .map(|(o, lv)| &al * o - &ao * lv)
                        .collect();
                    *other = primitive(v);
                }
            }
            for (r, z) in rays.iter_mut() {
                let ar = idot(a, r);
                if !ar.is_zero() {
                    let v: IVec = r.iter().zip(&l).map(|(o, lv)| &al * o - &ar * lv).collect();
                    *r = primitive(v);
                }
                z.set(i);
            }
            let mut z = Bits::new(m);
            for j in 0..i {
                z.set(j);
            }
            rays.push((primitive(l), z));
            continue;
        }
        let vals: Vec<BigInt> = rays.iter().map(|(r, _)| idot(a, r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_negative()).collect();
        if neg.is_empty() {
            for (k, (_, z)) in rays.iter_mut().enumerate() {
                if vals[k].is_zero() {
                    z.set(i);
                }
            }
            continue;
        }
        let threshold = (d - lines.len()).saturating_sub(2) as u32;
        let mut new_rays = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].1.and(&rays[n].1);
                if common.count() < threshold {
                    continue;
                }
                let blocked = rays
                    .iter()
                    .enumerate()
                    .any(|(k, (_, z))| k != p && k != n && z.contains(&common));
                if blocked {
                    continue;
                }
                let (rp, rn) = (&rays[p].0, &rays[n].0);
                let (vp, vn) = (&vals[p], &vals[n]);
                let v: IVec = rp.iter().zip(rn).map(|(x, y)| vp * y - vn * x).collect();
                let mut z = common;
                z.set(i);
                new_rays.push((primitive(v), z));
            }
        }
        let mut kept: Vec<(IVec, Bits)> = Vec::new();
        for (k, (r, mut z)) in rays.into_iter().enumerate() {
            if vals[k].is_negative() {
                continue;
            }
            if vals[k].is_zero() {
                z.set(i);
            }
            kept.push((r, z));
        }
        kept.extend(new_rays);
        rays = kept;
    }
    ConeGenerators {
        rays: rays.into_iter().map(|(r, _)| r).collect(),
        lines,
    }
}

fn to_ivec(v: &[Rational]) -> IVec {
    rational::integerize(v)
}

fn from_ivec(v: &[BigInt]) -> Vec<Rational> {
    v.iter()
        .map(|x| Rational::from_integer(x.clone()))
        .collect()
}

/// Cone DD with equalities: substitutes a nullspace basis first.
fn cone_dd_eq(
    ineq: &[Vec<Rational>],
    eq: &[Vec<Rational>],
    d: usize,
) -> (Vec<Vec<Rational>>, Vec<Vec<Rational>>) {
    let basis: Vec<Vec<Rational>> = if eq.is_empty() {
        (0..d)
            .map(|k| {
                let mut e = vec![Rational::zero(); d];
                e[k] = rational::one();
                e
            })
            .collect()
    } else {
        linalg::nullspace(eq, d)
    };
    let k = basis.len();
    let lift = |y: &[BigInt]| -> Vec<Rational> {
        let mut z = vec![Rational::zero(); d];
        for (c, b) in y.iter().zip(&basis) {
            if c.is_zero() {
                continue;
            }
            let c = Rational::from_integer(c.clone());
            for (zi, bi) in z.iter_mut().zip(b) {
                if !bi.is_zero() {
                    *zi += &c * bi;
                }
            }
        }
        z
    };
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let rows: Vec<IVec> = ineq
        .iter()
        .map(|a| {
            let r: Vec<Rational> = basis.iter().map(|b| rational::dot(a, b)).collect();
            to_ivec(&r)
        })
        .collect();
    let g = cone_dd(&rows, k);
    (
        g.rays.iter().map(|y| lift(y)).collect(),
        g.lines.iter().map(|y| lift(y)).collect(),
    )
}

/// Vertices and rays of an H-polytope. Lines are reported as opposite ray pairs.
pub fn dd_h_to_v(h: &HPolytope) -> Result<VPolytope, PolytopeError> {
    h.check()?;
    let n = h.dim;
    let d = n + 1;
    // z = (t, x); c·x ≤ β  ⇔  β t − c·x ≥ 0; t ≥ 0
    let mut ineq: Vec<Vec<Rational>> = Vec::new();
    let mut t = vec![Rational::zero(); d];
    t[0] = rational::one();
    ineq.push(t);
    for i in &h.inequalities {
        let mut r = vec![i.bound.clone()];
        r.extend(i.coeffs.iter().map(|c| -c));
        ineq.push(r);
    }
    let eq: Vec<Vec<Rational>> = h
        .equalities
        .iter()
        .map(|e| {
            let mut r = vec![-e.rhs.clone()];
            r.extend(e.coeffs.iter().cloned());
            r
        })
        .collect();
    let (rays, lines) = cone_dd_eq(&ineq, &eq, d);
    let mut vertices: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut out_rays: Vec<Vec<Rational>> = Vec::new();
    for r in &rays {
        if r[0].is_positive() {
            vertices.insert(r[1..].iter().map(|x| x / &r[0]).collect());
        } else {
            out_rays.push(from_ivec(&to_ivec(&r[1..])));
        }
    }
    if vertices.is_empty() {
        return Ok(VPolytope {
            dim: n,
            vertices: Vec::new(),
            rays: Vec::new(),
        });
    }
    for l in &lines {
        let p = from_ivec(&to_ivec(&l[1..]));
        out_rays.push(p.iter().map(|x| -x).collect());
        out_rays.push(p);
    }
    Ok(VPolytope {
        dim: n,
        vertices: vertices.into_iter().collect(),
        rays: out_rays,
    })
}

/// Facets and affine-hull equalities of a V-polytope.
///
/// Facets are returned in canonical form: projected away from the equality
/// span, then scaled to coprime integers.
pub fn dd_v_to_h(v: &VPolytope) -> Result<HPolytope, PolytopeError> {
    let n = v.dim;
    for p in v.vertices.iter().chain(&v.rays) {
        if p.len() != n {
            return Err(PolytopeError::DimensionMismatch(p.len(), n));
        }
    }
    if v.vertices.is_empty() {
        return Ok(HPolytope {
            dim: n,
            inequalities: vec![Inequality::new(
                vec![Rational::zero(); n],
                rational::int(-1),
            )],
            equalities: Vec::new(),
        });
    }
    // w = (β, c): β − c·v ≥ 0 for vertices, −c·r ≥ 0 for rays
    let mut ineq = Vec::new();
    for p in &v.vertices {
        let mut r = vec![rational::one()];
        r.extend(p.iter().map(|x| -x));
        ineq.push(r);
    }
    for p in &v.rays {
        let mut r = vec![Rational::zero()];
        r.extend(p.iter().map(|x| -x));
        ineq.push(r);
    }
    let (rays, lines) = cone_dd_eq(&ineq, &[], n + 1);
    let equalities: Vec<Equality> = lines
        .iter()
        .map(|l| Equality::new(l[1..].to_vec(), l[0].clone()))
        .collect();
    let equalities = reduce_equalities(&equalities, n);
    let eq_rows: Vec<Vec<Rational>> = equalities.iter().map(|e| e.coeffs.clone()).collect();
    let eq_rank = linalg::rank(&eq_rows);
    let mut seen = BTreeSet::new();
    let mut inequalities = Vec::new();
    for r in &rays {
        let mut with = eq_rows.clone();
        with.push(r[1..].to_vec());
        if linalg::rank(&with) == eq_rank {
            continue;
        }
        let ineq = canonical_modulo(&Inequality::new(r[1..].to_vec(), r[0].clone()), &equalities);
        if seen.insert(ineq.clone()) {
            inequalities.push(ineq);
        }
    }
    Ok(HPolytope {
        dim: n,
        inequalities,
        equalities,
    })
}

fn reduce_equalities(eqs: &[Equality], n: usize) -> Vec<Equality> {
    let mut m: Vec<Vec<Rational>> = eqs
        .iter()
        .map(|e| {
            let mut r = e.coeffs.clone();
            r.push(e.rhs.clone());
            r
        })
        .collect();
    linalg::rref(&mut m, n + 1);
    m.into_iter()
        .map(|r| Equality::new(r[..n].to_vec(), r[n].clone()).normalized())
        .collect()
}
