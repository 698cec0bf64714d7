//! Exact Gaussian elimination over the rationals.

use crate::rational::Rational;
use num_traits::{One, Zero};

/// Reduced row echelon form in place. Returns the pivot columns.
pub fn rref(m: &mut Vec<Vec<Rational>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::one() / &m[r][c];
        for x in m[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let piv = m[r].clone();
        let nz: Vec<usize> = (0..piv.len()).filter(|&j| !piv[j].is_zero()).collect();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] -= &f * &piv[j];
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r.max(0));
    pivots
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let n = rows[0].len();
    let mut m = rows.to_vec();
    rref(&mut m, n).len()
}

/// Basis of {x : rows·x = 0} in `n` dimensions.
pub fn nullspace(rows: &[Vec<Rational>], n: usize) -> Vec<Vec<Rational>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, n);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); n];
            v[f] = Rational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Solves A x = b for one particular solution, or None if inconsistent.
pub fn solve(a: &[Vec<Rational>], b: &[Rational], n: usize) -> Option<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m, n + 1);
    if pivots.contains(&n) {
        return None;
    }
    let mut x = vec![Rational::zero(); n];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = m[r][n].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let rows = vec![v(&[1, 2, 3]), v(&[2, 4, 6]), v(&[0, 1, 1])];
        assert_eq!(rank(&rows), 2);
        let ns = nullspace(&rows, 3);
        assert_eq!(ns.len(), 1);
        for r in &rows {
            assert!(crate::rational::dot(r, &ns[0]).is_zero());
        }
    }

    #[test]
    fn solve_system() {
        let a = vec![v(&[1, 1]), v(&[1, -1])];
        assert_eq!(solve(&a, &v(&[3, 1]), 2).unwrap(), v(&[2, 1]));
        let a = vec![v(&[1, 1]), v(&[2, 2])];
        assert!(solve(&a, &v(&[1, 3]), 2).is_none());
    }
}
