//! Exact and high-SNR performance of MIMO maximum-ratio combining
//! (transmit beamforming with receive MRC) over Rayleigh channels with
//! Kronecker transmit/receive correlation.
//!
//! The output SNR of the link is `γ̄ λ_max(H†H)`, so everything reduces to
//! the distribution of the largest eigenvalue ([`eigdist`]). On top of that
//! [`performance`] computes symbol error rate and outage probability, both
//! exactly and through their first-order high-SNR forms, and [`montecarlo`]
//! simulates the channel directly as an independent check.

pub mod correlation;
pub mod eigdist;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod performance;
mod quadrature;
pub mod specfun;

pub use correlation::{correlation_penalty, exp_correlation, CorrelationPair};
pub use eigdist::{alpha_coefficient, EigDistModel};
pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use montecarlo::{McConfig, McResult};
pub use performance::{HighSnrSer, Modulation};

/// Converts an SNR in dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
