//! Small dense complex linear algebra.
//!
//! Everything here is sized for antenna arrays (a handful of rows), so the
//! routines favour simplicity: cyclic Jacobi for Hermitian eigenproblems,
//! partial-pivot elimination for determinants.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix of shape {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    /// Frobenius norm of `self - other`, divided by the norm of `other`
    /// (or taken as absolute when `other` is zero).
    pub fn rel_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let diff: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale = other.frobenius_norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>12.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Spectral decomposition `A = V diag(λ) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        &scaled * &v.adjoint()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("empty spectrum")
    }
}

fn require_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(invalid(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
    if !a.is_hermitian(HERMITIAN_TOL * scale) {
        return Err(invalid("matrix is not Hermitian"));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn herm_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    require_hermitian(a)?;
    let n = a.rows();
    // Work on an exactly Hermitian copy.
    let mut w = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(a[(i, i)].re, 0.0)
        } else {
            0.5 * (a[(i, j)] + a[(j, i)].conj())
        }
    });
    let mut v = ComplexMatrix::identity(n);

    let mut converged = n <= 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let (off, diag) = off_and_diag_norms(&w);
        if off <= JACOBI_TOL * diag || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }
    if !converged {
        let (off, diag) = off_and_diag_norms(&w);
        if off > JACOBI_TOL * diag && off > 0.0 {
            return Err(Error::Convergence(format!(
                "Jacobi eigensolver: off-diagonal norm {off:e} after {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].re.total_cmp(&w[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| w[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

fn off_and_diag_norms(w: &ComplexMatrix) -> (f64, f64) {
    let n = w.rows();
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag += w[(i, i)].norm_sqr();
            } else {
                off += w[(i, j)].norm_sqr();
            }
        }
    }
    (off.sqrt(), diag.sqrt())
}

/// One Jacobi step annihilating `w[p][q]`: a phase change on column `q`
/// makes the pivot real, then a real plane rotation zeroes it.
fn rotate(w: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = w.rows();
    let g = w[(p, q)];
    let mag = g.norm();
    if mag == 0.0 {
        return;
    }
    let phase = g / mag;
    let phase_conj = phase.conj();
    for k in 0..n {
        w[(k, q)] *= phase_conj;
        v[(k, q)] *= phase_conj;
    }
    for k in 0..n {
        w[(q, k)] *= phase;
    }

    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = wkp * c - wkq * s;
        w[(k, q)] = wkp * s + wkq * c;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * s;
        v[(k, q)] = vkp * s + vkq * c;
    }
    for k in 0..n {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = wpk * c - wqk * s;
        w[(q, k)] = wpk * s + wqk * c;
    }
    w[(p, q)] = Complex64::new(0.0, 0.0);
    w[(q, p)] = Complex64::new(0.0, 0.0);
    w[(p, p)].im = 0.0;
    w[(q, q)].im = 0.0;
}

/// Hermitian square root `V diag(√λ) V†` of a positive-definite matrix.
pub fn herm_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    if let Some(&min) = eig.eigenvalues.first() {
        if min <= 0.0 {
            return Err(invalid(format!(
                "matrix is not positive-definite (smallest eigenvalue {min:e})"
            )));
        }
    }
    let roots = HermitianEig {
        eigenvalues: eig.eigenvalues.iter().map(|l| l.sqrt()).collect(),
        eigenvectors: eig.eigenvectors,
    };
    let b = roots.reconstruct();
    // Symmetrize away rounding so the root is exactly Hermitian.
    let n = b.rows();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(b[(i, i)].re, 0.0)
        } else {
            0.5 * (b[(i, j)] + b[(j, i)].conj())
        }
    }))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(invalid(format!(
            "determinant needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    match n {
        0 => return Ok(Complex64::new(1.0, 0.0)),
        1 => return Ok(a[(0, 0)]),
        2 => return Ok(a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]),
        _ => {}
    }
    let mut m = a.data.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].norm().total_cmp(&m[j * n + col].norm()))
            .expect("non-empty range");
        if m[pivot * n + col].norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        for i in (col + 1)..n {
            let f = m[i * n + col] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in (col + 1)..n {
                let sub = f * m[col * n + k];
                m[i * n + k] -= sub;
            }
        }
    }
    Ok(det)
}

/// Determinant of a real `n x n` row-major matrix; the buffer is consumed
/// as elimination workspace.
pub fn det_real(mut m: Vec<f64>, n: usize) -> f64 {
    assert_eq!(m.len(), n * n, "buffer is not n x n");
    match n {
        0 => return 1.0,
        1 => return m[0],
        2 => return m[0] * m[3] - m[1] * m[2],
        _ => {}
    }
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .expect("non-empty range");
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        for i in (col + 1)..n {
            let f = m[i * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in (col + 1)..n {
                m[i * n + k] -= f * m[col * n + k];
            }
        }
    }
    det
}

/// Vandermonde product `∏_{i<j} (v_j - v_i)`; 1 for a single value.
pub fn vandermonde(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("Vandermonde product of an empty list"));
    }
    let mut prod = 1.0;
    for (i, &vi) in values.iter().enumerate() {
        for &vj in &values[i + 1..] {
            prod *= vj - vi;
        }
    }
    Ok(prod)
}
