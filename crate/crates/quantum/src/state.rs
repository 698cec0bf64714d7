//! Pure states of a register product, stored as a dense amplitude vector.
//!
//! Register 0 is the most significant digit of the amplitude index.

use crate::ops::{Mat, C64};
use crate::QuantumError;

/// Norm drift above this is an error.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub dims: Vec<usize>,
    pub amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self, QuantumError> {
        let n: usize = dims.iter().product();
        if dims.iter().any(|&d| d == 0) || amplitudes.len() != n {
            return Err(QuantumError::Dimension(format!("{} amplitudes for dimensions {dims:?}", amplitudes.len())));
        }
        Ok(StateVector { dims, amplitudes })
    }

    /// Computational basis state with the given digit per register.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        let mut amplitudes = vec![C64::new(0.0, 0.0); n];
        amplitudes[lfpoly_core::scenario::encode(digits, &dims)] = C64::new(1.0, 0.0);
        StateVector { dims, amplitudes }
    }

    /// Normalized copy of `v` on a single register.
    pub fn normalized(v: &[C64]) -> Self {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        StateVector { dims: vec![v.len()], amplitudes: v.iter().map(|z| z / n).collect() }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check_norm(&self) -> Result<(), QuantumError> {
        let drift = (self.norm_sqr() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(QuantumError::NormDrift(drift));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.len() * other.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend(&other.dims);
        StateVector { dims, amplitudes }
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    /// Offsets of every local index of `regs` and the base indices where all
    /// of `regs` are zero.
    fn layout(&self, regs: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let strides = self.strides();
        let local_dims: Vec<usize> = regs.iter().map(|&r| self.dims[r]).collect();
        let offsets: Vec<usize> = lfpoly_core::scenario::tuples(&local_dims)
            .map(|t| t.iter().zip(regs).map(|(&d, &r)| d * strides[r]).sum())
            .collect();
        let mut bases = vec![0usize];
        for r in (0..self.dims.len()).filter(|r| !regs.contains(r)) {
            let (dim, stride) = (self.dims[r], strides[r]);
            bases = bases.iter().flat_map(|&b| (0..dim).map(move |d| b + d * stride)).collect();
        }
        (offsets, bases)
    }

    /// Applies `op` to the listed registers, in that order (first is most significant).
    pub fn apply(&mut self, op: &Mat, regs: &[usize]) -> Result<(), QuantumError> {
        let d: usize = regs.iter().map(|&r| self.dims.get(r).copied().unwrap_or(0)).product();
        if op.nrows() != d || op.ncols() != d || regs.is_empty() {
            return Err(QuantumError::Dimension(format!(
                "{}x{} operator on registers {regs:?} of dimension {d}",
                op.nrows(),
                op.ncols()
            )));
        }
        let mut seen = regs.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != regs.len() {
            return Err(QuantumError::Dimension("repeated register".into()));
        }
        let rows: Vec<Vec<(usize, C64)>> = (0..d)
            .map(|i| (0..d).filter_map(|j| { let m = op[(i, j)]; (m.norm_sqr() > 0.0).then_some((j, m)) }).collect())
            .collect();
        let (offsets, bases) = self.layout(regs);
        let mut buf = vec![C64::new(0.0, 0.0); d];
        for b in bases {
            let mut any = false;
            for (k, o) in offsets.iter().enumerate() {
                buf[k] = self.amplitudes[b + o];
                any |= buf[k].re != 0.0 || buf[k].im != 0.0;
            }
            if !any {
                continue;
            }
            for (row, o) in rows.iter().zip(&offsets) {
                self.amplitudes[b + o] = row.iter().map(|&(j, m)| m * buf[j]).sum();
            }
        }
        Ok(())
    }

    /// Joint computational-basis distribution of the listed registers.
    pub fn probabilities(&self, regs: &[usize]) -> Vec<f64> {
        let strides = self.strides();
        let local: Vec<usize> = regs.iter().map(|&r| self.dims[r]).collect();
        let mut out = vec![0.0; local.iter().product()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut k = 0;
            for (&r, &d) in regs.iter().zip(&local) {
                k = k * d + (i / strides[r]) % self.dims[r];
            }
            out[k] += p;
        }
        out
    }
}
