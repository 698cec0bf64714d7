//! Dense complex matrices and projective measurements.

use crate::QuantumError;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

/// Default tolerance for operator identities.
pub const OP_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn pauli_x() -> Mat {
    Mat::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)])
}

pub fn pauli_y() -> Mat {
    Mat::from_row_slice(2, 2, &[r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)])
}

pub fn pauli_z() -> Mat {
    Mat::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(-1.0)])
}

pub fn hadamard() -> Mat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_row_slice(2, 2, &[r(h), r(h), r(h), r(-h)])
}

/// Discrete Fourier transform on a d-level register. For d = 2 this is the Hadamard.
pub fn fourier(d: usize) -> Mat {
    let s = 1.0 / (d as f64).sqrt();
    Mat::from_fn(d, d, |j, k| C64::from_polar(s, 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64))
}

/// Cyclic shift |j⟩ ↦ |j + k mod d⟩.
pub fn shift(d: usize, k: usize) -> Mat {
    Mat::from_fn(d, d, |i, j| if i == (j + k) % d { r(1.0) } else { r(0.0) })
}

/// |v⟩⟨v| for a vector that is normalized here.
pub fn projector(v: &[C64]) -> Mat {
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let u: Vec<C64> = v.iter().map(|z| z / n).collect();
    Mat::from_fn(u.len(), u.len(), |i, j| u[i] * u[j].conj())
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn approx_eq(a: &Mat, b: &Mat, tol: f64) -> bool {
    max_abs_diff(a, b) <= tol
}

pub fn commutes(a: &Mat, b: &Mat, tol: f64) -> bool {
    approx_eq(&(a * b), &(b * a), tol)
}

pub fn is_hermitian(a: &Mat, tol: f64) -> bool {
    approx_eq(a, &a.adjoint(), tol)
}

/// Projective measurement; outcome k corresponds to `projectors[k]`.
///
/// JSON form: `{"projectors": [[[[re, im], ...], ...], ...]}`, one row-major
/// matrix per outcome. Deserialization validates.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "PvmDoc", into = "PvmDoc")]
pub struct Pvm {
    pub projectors: Vec<Mat>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct PvmDoc {
    projectors: Vec<Vec<Vec<[f64; 2]>>>,
}

impl TryFrom<PvmDoc> for Pvm {
    type Error = QuantumError;

    fn try_from(doc: PvmDoc) -> Result<Self, QuantumError> {
        let mut ps = Vec::new();
        for rows in doc.projectors {
            let n = rows.len();
            if n == 0 || n > 1 << 12 || rows.iter().any(|row| row.len() != n) {
                return Err(QuantumError::Dimension("projector is not a square matrix".into()));
            }
            ps.push(Mat::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])));
        }
        Pvm::new(ps)
    }
}

impl From<Pvm> for PvmDoc {
    fn from(p: Pvm) -> Self {
        PvmDoc {
            projectors: p
                .projectors
                .iter()
                .map(|m| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
                .collect(),
        }
    }
}

impl Pvm {
    /// Checks hermiticity, idempotence, mutual orthogonality and completeness.
    pub fn new(projectors: Vec<Mat>) -> Result<Self, QuantumError> {
        let bad = |m: String| Err(QuantumError::Invalid(m));
        let Some(first) = projectors.first() else { return bad("PVM without projectors".into()) };
        let d = first.nrows();
        if projectors.iter().any(|p| p.nrows() != d || p.ncols() != d) {
            return bad("PVM projectors have different shapes".into());
        }
        for (k, p) in projectors.iter().enumerate() {
            if !is_hermitian(p, OP_TOL) {
                return bad(format!("projector {k} is not Hermitian"));
            }
            if !approx_eq(&(p * p), p, OP_TOL) {
                return bad(format!("projector {k} is not idempotent"));
            }
            for (l, q) in projectors.iter().enumerate().skip(k + 1) {
                if (p * q).iter().any(|z| z.norm() > OP_TOL) {
                    return bad(format!("projectors {k} and {l} are not orthogonal"));
                }
            }
        }
        let sum = projectors.iter().fold(Mat::zeros(d, d), |acc, p| acc + p);
        if !approx_eq(&sum, &identity(d), OP_TOL) {
            return bad("projectors do not sum to the identity".into());
        }
        Ok(Pvm { projectors })
    }

    /// {1 − |v⟩⟨v|, |v⟩⟨v|}: outcome 1 is the ray of `v`.
    pub fn from_vector(v: &[C64]) -> Self {
        let p = projector(v);
        Pvm { projectors: vec![identity(v.len()) - &p, p] }
    }

    /// Eigenprojectors of a ±1-valued observable: outcome 0 is −1, outcome 1 is +1.
    pub fn from_observable(o: &Mat) -> Result<Self, QuantumError> {
        let id = identity(o.nrows());
        let half = r(0.5);
        Pvm::new(vec![(&id - o) * half, (&id + o) * half])
    }

    /// Measurement in the computational basis of a d-level system.
    pub fn computational(d: usize) -> Self {
        Pvm { projectors: (0..d).map(|k| Mat::from_fn(d, d, |i, j| r((i == k && j == k) as u8 as f64))).collect() }
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn n_outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn commutes_with(&self, other: &Pvm, tol: f64) -> bool {
        self.projectors.iter().all(|p| other.projectors.iter().all(|q| commutes(p, q, tol)))
    }

    /// Σ_k P_k ⊗ X^k on system ⊗ record, with a record register of dimension `n_outcomes`.
    /// Acting on |ψ⟩|0⟩ it writes the outcome into the record without disturbing
    /// the post-measurement system state.
    pub fn isometry(&self) -> Mat {
        let d = self.n_outcomes();
        self.projectors.iter().enumerate().fold(Mat::zeros(self.dim() * d, self.dim() * d), |acc, (k, p)| {
            acc + kron(p, &shift(d, k))
        })
    }
}
