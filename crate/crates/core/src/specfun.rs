//! Special functions with integer orders, as needed by the eigenvalue
//! distributions and the SER template.

use std::f64::consts::SQRT_2;

use crate::error::{invalid, Result};

/// `k!` as a float. Exact up to `22!`.
pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

pub fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| f64::from(i).ln()).sum()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Regularized lower incomplete gamma `P(l; y) = 1 − e^{−y} Σ_{k<l} y^k/k!`
/// for integer order `l ≥ 1` and `y ≥ 0`.
pub fn reg_lower_gamma(l: u32, y: f64) -> Result<f64> {
    if l == 0 {
        return Err(invalid("incomplete gamma order must be at least 1"));
    }
    if y.is_nan() || y < 0.0 {
        return Err(invalid(format!(
            "incomplete gamma argument must be nonnegative, got {y}"
        )));
    }
    if y == f64::INFINITY {
        return Ok(1.0);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..l {
        term *= y / f64::from(k);
        sum += term;
    }
    Ok((1.0 - (-y).exp() * sum).clamp(0.0, 1.0))
}

/// Normalized complex multivariate gamma `Γ_n(m) = ∏_{i=1}^{n} Γ(m − i + 1)`
/// for integer arguments, i.e. `∏_{i=1}^{n} (m − i)!`.
pub fn multivariate_gamma_norm(n: u32, m: u32) -> Result<f64> {
    check_mvgamma_args(n, m)?;
    Ok((1..=n).map(|i| factorial(m - i)).product())
}

/// `ln Γ_n(m)`, for arguments where the product itself would overflow.
pub fn ln_multivariate_gamma_norm(n: u32, m: u32) -> Result<f64> {
    check_mvgamma_args(n, m)?;
    Ok((1..=n).map(|i| ln_factorial(m - i)).sum())
}

fn check_mvgamma_args(n: u32, m: u32) -> Result<()> {
    if n == 0 {
        return Err(invalid("multivariate gamma dimension must be at least 1"));
    }
    if m < n {
        return Err(invalid(format!(
            "multivariate gamma Γ_{n}({m}) has a nonpositive factor"
        )));
    }
    Ok(())
}

/// `(2k − 1)!! = 1·3·5···(2k − 1)` for `k ≥ 1`.
pub fn double_factorial_odd(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(invalid("(2k-1)!! is only defined here for k >= 1"));
    }
    Ok((1..=k).map(|i| f64::from(2 * i - 1)).product())
}

/// Gaussian tail probability `Q(x) = ½ erfc(x/√2)`.
pub fn gauss_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}
