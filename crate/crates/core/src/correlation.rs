//! Kronecker correlation matrices and the Ω/Σ role assignment.
//!
//! For an `N_r x N_t` link with receive correlation `R` and transmit
//! correlation `S`, the smaller array's matrix plays the role of Ω
//! (`n = min(N_r, N_t)`) and the larger one plays Σ (`m = max(N_r, N_t)`).
//! When the arrays have equal size, Ω is the receive matrix.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{det, herm_eig, ComplexMatrix};

const UNIT_DIAGONAL_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;

/// Exponential correlation model: entry `(i, j)` is `ρ^{|i−j|}`.
pub fn exp_correlation(rho: f64, size: usize) -> Result<ComplexMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!(
            "correlation coefficient must lie in [0, 1), got {rho}"
        )));
    }
    if size == 0 {
        return Err(invalid("correlation matrix size must be at least 1"));
    }
    Ok(ComplexMatrix::from_fn(size, size, |i, j| {
        Complex64::new(rho.powi(i.abs_diff(j) as i32), 0.0)
    }))
}

/// Which physical array a correlation matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Receive,
    Transmit,
}

impl Side {
    fn label(self) -> &'static str {
        match self {
            Side::Receive => "receive",
            Side::Transmit => "transmit",
        }
    }
}

/// Validated receive/transmit correlation matrices with their spectra.
#[derive(Debug, Clone)]
pub struct CorrelationPair {
    rx: ComplexMatrix,
    tx: ComplexMatrix,
    omega_eigs: Vec<f64>,
    sigma_eigs: Vec<f64>,
    det_omega: f64,
    det_sigma: f64,
}

impl CorrelationPair {
    /// Validates `rx` (`N_r x N_t`'s receive side) and `tx`, and assigns roles.
    pub fn new(rx: ComplexMatrix, tx: ComplexMatrix) -> Result<Self> {
        let rx_eigs = validate(&rx, Side::Receive)?;
        let tx_eigs = validate(&tx, Side::Transmit)?;
        let rx_det = det(&rx)?.re;
        let tx_det = det(&tx)?.re;
        let (omega_eigs, sigma_eigs, det_omega, det_sigma) = if rx.rows() <= tx.rows() {
            (rx_eigs, tx_eigs, rx_det, tx_det)
        } else {
            (tx_eigs, rx_eigs, tx_det, rx_det)
        };
        Ok(Self {
            rx,
            tx,
            omega_eigs,
            sigma_eigs,
            det_omega,
            det_sigma,
        })
    }

    /// Exponential-model pair for an `n_r x n_t` link.
    pub fn exponential(n_r: usize, n_t: usize, rho_rx: f64, rho_tx: f64) -> Result<Self> {
        Self::new(exp_correlation(rho_rx, n_r)?, exp_correlation(rho_tx, n_t)?)
    }

    pub fn uncorrelated(n_r: usize, n_t: usize) -> Result<Self> {
        Self::exponential(n_r, n_t, 0.0, 0.0)
    }

    pub fn rx(&self) -> &ComplexMatrix {
        &self.rx
    }

    pub fn tx(&self) -> &ComplexMatrix {
        &self.tx
    }

    pub fn n_r(&self) -> usize {
        self.rx.rows()
    }

    pub fn n_t(&self) -> usize {
        self.tx.rows()
    }

    /// `min(N_r, N_t)`.
    pub fn n(&self) -> usize {
        self.omega_eigs.len()
    }

    /// `max(N_r, N_t)`.
    pub fn m(&self) -> usize {
        self.sigma_eigs.len()
    }

    pub fn tau(&self) -> usize {
        self.m() - self.n()
    }

    /// Which side plays the role of Ω.
    pub fn omega_side(&self) -> Side {
        if self.n_r() <= self.n_t() {
            Side::Receive
        } else {
            Side::Transmit
        }
    }

    pub fn omega(&self) -> &ComplexMatrix {
        match self.omega_side() {
            Side::Receive => &self.rx,
            Side::Transmit => &self.tx,
        }
    }

    pub fn sigma(&self) -> &ComplexMatrix {
        match self.omega_side() {
            Side::Receive => &self.tx,
            Side::Transmit => &self.rx,
        }
    }

    /// Eigenvalues of Ω, ascending.
    pub fn omega_eigs(&self) -> &[f64] {
        &self.omega_eigs
    }

    /// Eigenvalues of Σ, ascending.
    pub fn sigma_eigs(&self) -> &[f64] {
        &self.sigma_eigs
    }

    pub fn det_omega(&self) -> f64 {
        self.det_omega
    }

    pub fn det_sigma(&self) -> f64 {
        self.det_sigma
    }
}

fn validate(a: &ComplexMatrix, side: Side) -> Result<Vec<f64>> {
    let name = side.label();
    if !a.is_square() || a.rows() == 0 {
        return Err(invalid(format!(
            "{name} correlation matrix must be square and non-empty"
        )));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(invalid(format!("{name} correlation matrix is not Hermitian")));
    }
    if let Some((i, d)) = a
        .diagonal()
        .into_iter()
        .enumerate()
        .find(|(_, d)| (d - Complex64::new(1.0, 0.0)).norm() > UNIT_DIAGONAL_TOL)
    {
        return Err(invalid(format!(
            "{name} correlation matrix has diagonal entry {d} at index {i}, expected 1"
        )));
    }
    let eig = herm_eig(a).map_err(|e| match e {
        Error::Validation(msg) => invalid(format!("{name} correlation matrix: {msg}")),
        other => other,
    })?;
    if eig.eigenvalues[0] <= 0.0 {
        return Err(invalid(format!(
            "{name} correlation matrix is not positive-definite (smallest eigenvalue {:e})",
            eig.eigenvalues[0]
        )));
    }
    Ok(eig.eigenvalues)
}

/// Factor `det(Ω)^{1/n} det(Σ)^{1/m}` by which correlation shrinks the array gain.
pub fn correlation_penalty(pair: &CorrelationPair) -> f64 {
    let n = pair.n() as f64;
    let m = pair.m() as f64;
    (pair.det_omega().ln() / n + pair.det_sigma().ln() / m).exp()
}

/// Parses a square matrix from text: one row per line, comma-separated
/// entries written as plain reals or as `re+imj` / `re-imj`.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_matrix_csv(text: &str) -> Result<ComplexMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                parse_complex(tok.trim()).ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad entry {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "no rows".into(),
        });
    }
    if rows[0].len() != n {
        return Err(Error::Parse {
            line: 0,
            msg: format!("matrix is {}x{}, expected square", n, rows[0].len()),
        });
    }
    ComplexMatrix::new(n, n, rows.into_iter().flatten().collect())
}

fn parse_complex(tok: &str) -> Option<Complex64> {
    if tok.is_empty() {
        return None;
    }
    let Some(body) = tok.strip_suffix(['j', 'i']) else {
        return tok.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].trim().parse::<f64>().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im.trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().ok()?,
    };
    Some(Complex64::new(re, im))
}

/// Formats a real with 17 significant digits.
pub fn fmt_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a matrix in the format accepted by [`read_matrix_csv`].
pub fn write_matrix_csv(a: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..a.rows() {
        let row: Vec<String> = (0..a.cols())
            .map(|j| {
                let z = a[(i, j)];
                if z.im == 0.0 {
                    fmt_sig17(z.re)
                } else {
                    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                    format!("{}{}{}j", fmt_sig17(z.re), sign, fmt_sig17(z.im.abs()))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
