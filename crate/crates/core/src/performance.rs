//! Symbol error rate and outage probability of the MRC link.
//!
//! SER follows the template `P_s = E[a Q(√(2bγ))]` with `γ = γ̄ λ_max`.
//! Integrating by parts against the c.d.f. and substituting `u = v²`:
//!
//! ```text
//! P_s = a √b / √π ∫₀^∞ e^{−b v²} F(v²/γ̄) dv
//! ```
//!
//! All SNR arguments are in dB.

use std::f64::consts::PI;

use crate::db_to_linear;
use crate::eigdist::EigDistModel;
use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;
use crate::specfun::{ln_multivariate_gamma_norm, multivariate_gamma_norm};

/// Accuracy aimed for by [`exact_ser`].
const SER_REL_TARGET: f64 = 1e-10;
/// A result missing the target is still accepted within these bounds.
const SER_ABS_ACCEPT: f64 = 1e-12;
const SER_REL_ACCEPT: f64 = 1e-8;

/// Constants of `SER = E[a Q(√(2bγ))]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    pub name: String,
    pub a: f64,
    pub b: f64,
}

impl Modulation {
    pub fn new(name: impl Into<String>, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(invalid(format!(
                "modulation constants must be positive, got a = {a}, b = {b}"
            )));
        }
        Ok(Self {
            name: name.into(),
            a,
            b,
        })
    }

    pub fn bpsk() -> Self {
        Self {
            name: "bpsk".into(),
            a: 1.0,
            b: 1.0,
        }
    }

    pub fn qpsk() -> Self {
        Self {
            name: "qpsk".into(),
            a: 2.0,
            b: 0.5,
        }
    }

    pub fn psk8() -> Self {
        Self {
            name: "8psk".into(),
            a: 2.0,
            b: 0.146,
        }
    }

    /// Looks up `bpsk`, `qpsk` or `8psk` (case-insensitive).
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::bpsk()),
            "qpsk" => Ok(Self::qpsk()),
            "8psk" => Ok(Self::psk8()),
            other => Err(invalid(format!("unknown modulation '{other}'"))),
        }
    }
}

/// High-SNR SER `(G_a γ̄)^{−G_d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrSer {
    pub diversity_order: u32,
    pub array_gain: f64,
}

fn check_snr(snr_db: f64) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(invalid(format!("SNR must be finite, got {snr_db} dB")));
    }
    Ok(db_to_linear(snr_db))
}

/// Exact SER by adaptive quadrature.
pub fn exact_ser(model: &EigDistModel, modulation: &Modulation, snr_db: f64) -> Result<f64> {
    let snr = check_snr(snr_db)?;
    let (a, b) = (modulation.a, modulation.b);
    let order = f64::from(model.order());

    // e^{−bv²} v^{2mn} has decayed by e^{−(mn+80)} from its peak here.
    let v_max = ((2.0 * order + 80.0) / b).sqrt();
    let mut breaks = vec![0.0, v_max];
    for x in [model.x_star(), 1.0, order] {
        let v = (x * snr).sqrt();
        if v > 0.0 && v < v_max {
            breaks.push(v);
        }
    }
    let peak = (order / b).sqrt();
    if peak < v_max {
        breaks.push(peak);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let scale = a * b.sqrt() / PI.sqrt();
    let integrand = |v: f64| (-b * v * v).exp() * model.exact_cdf_stable(v * v / snr);
    // Beyond v_max the integrand is at most e^{−bv²}.
    let tail = 0.5 * libm::erfc(b.sqrt() * v_max) / scale;

    let (value, error) = match integrate(integrand, &breaks, 0.0, SER_REL_TARGET) {
        Ok(r) => r,
        Err(Error::Quadrature { estimate, error }) => (estimate, error),
        Err(e) => return Err(e),
    };
    let (value, error) = (scale * value, scale * (error + tail));
    if !(value.is_finite() && error <= SER_ABS_ACCEPT.max(SER_REL_ACCEPT * value.abs())) {
        return Err(Error::Quadrature { estimate: value, error });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Diversity order `mn` and array gain of the high-SNR SER.
pub fn high_snr_ser(model: &EigDistModel, modulation: &Modulation) -> HighSnrSer {
    let (n, m) = (model.n() as u32, model.m() as u32);
    let mn = n * m;
    let ln_gamma_ratio =
        ln_multivariate_gamma_norm(n, n).expect("n >= 1") - ln_multivariate_gamma_norm(n, m + n).expect("m + n >= n");
    let ln_double_factorial: f64 = (1..=mn).map(|i| f64::from(2 * i - 1).ln()).sum();
    let inner = modulation.a.ln() + ln_gamma_ratio - 2f64.ln() + ln_double_factorial;
    let ln_ga =
        model.det_omega().ln() / f64::from(n) + model.det_sigma().ln() / f64::from(m) + (2.0 * modulation.b).ln()
            - inner / f64::from(mn);
    HighSnrSer {
        diversity_order: mn,
        array_gain: ln_ga.exp(),
    }
}

/// `(G_a γ̄)^{−G_d}`.
pub fn ser_asymptote_eval(hs: &HighSnrSer, snr_db: f64) -> f64 {
    let ln_snr = snr_db / 10.0 * std::f64::consts::LN_10;
    (-f64::from(hs.diversity_order) * (hs.array_gain.ln() + ln_snr)).exp()
}

fn outage_arg(snr_db: f64, gamma_th_db: f64) -> Result<f64> {
    check_snr(snr_db)?;
    if gamma_th_db.is_nan() || gamma_th_db == f64::INFINITY {
        return Err(invalid(format!(
            "outage threshold must be finite, got {gamma_th_db} dB"
        )));
    }
    Ok(db_to_linear(gamma_th_db - snr_db))
}

/// `Pr(γ ≤ γ_th) = F(γ_th/γ̄)`.
pub fn exact_outage(model: &EigDistModel, snr_db: f64, gamma_th_db: f64) -> Result<f64> {
    Ok(model.exact_cdf_stable(outage_arg(snr_db, gamma_th_db)?))
}

/// `α (γ_th/γ̄)^{mn}`.
pub fn asymptotic_outage(model: &EigDistModel, snr_db: f64, gamma_th_db: f64) -> Result<f64> {
    Ok(model.asymptotic_cdf(outage_arg(snr_db, gamma_th_db)?))
}

/// `Γ_n(n)/Γ_n(m+n)` in direct (non-log) form, for small arrays.
pub fn gamma_ratio(n: u32, m: u32) -> f64 {
    multivariate_gamma_norm(n, n).unwrap_or(f64::NAN) / multivariate_gamma_norm(n, m + n).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{correlation_penalty, CorrelationPair};
    use approx::assert_relative_eq;

    fn model(n_r: usize, n_t: usize, rx: f64, tx: f64) -> EigDistModel {
        EigDistModel::new(CorrelationPair::exponential(n_r, n_t, rx, tx).unwrap()).unwrap()
    }

    fn siso_bpsk(snr: f64) -> f64 {
        0.5 * (1.0 - (snr / (1.0 + snr)).sqrt())
    }

    #[test]
    fn modulation_validation() {
        assert!(Modulation::new("x", 0.0, 1.0).is_err());
        assert!(Modulation::new("x", 1.0, -1.0).is_err());
        assert!(Modulation::new("x", f64::NAN, 1.0).is_err());
        assert_eq!(Modulation::preset("8PSK").unwrap(), Modulation::psk8());
        assert_eq!(Modulation::psk8().b, 0.146);
        assert!(Modulation::preset("16qam").is_err());
    }

    #[test]
    fn siso_bpsk_closed_form() {
        let m = model(1, 1, 0.0, 0.0);
        for db in [-10.0, 0.0, 10.0, 20.0, 30.0, 40.0] {
            let exact = siso_bpsk(db_to_linear(db));
            assert_relative_eq!(
                exact_ser(&m, &Modulation::bpsk(), db).unwrap(),
                exact,
                max_relative = 1e-9
            );
        }
        assert_relative_eq!(siso_bpsk(10.0), 0.02327, epsilon = 1e-5);
    }

    #[test]
    fn ser_decreases_and_stays_positive() {
        let m = model(2, 2, 0.5, 0.5);
        let mut prev = 1.0;
        for i in 0..=30 {
            let db = 2.0 * f64::from(i);
            let s = exact_ser(&m, &Modulation::psk8(), db).unwrap();
            assert!(s < prev && s > 0.0, "{db} dB: {s}");
            prev = s;
        }
        let hi = exact_ser(&model(2, 2, 0.0, 0.0), &Modulation::psk8(), 60.0).unwrap();
        assert!(hi > 0.0 && hi < 1e-9);
        let lo = exact_ser(&m, &Modulation::psk8(), -60.0).unwrap();
        assert!((lo - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_non_finite_snr() {
        let m = model(1, 1, 0.0, 0.0);
        assert!(exact_ser(&m, &Modulation::bpsk(), f64::NAN).is_err());
        assert!(exact_outage(&m, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn siso_array_gain() {
        let hs = high_snr_ser(&model(1, 1, 0.0, 0.0), &Modulation::bpsk());
        assert_eq!(hs.diversity_order, 1);
        assert_relative_eq!(hs.array_gain, 4.0, max_relative = 1e-14);
        assert_relative_eq!(ser_asymptote_eval(&hs, 30.0), 2.5e-4, max_relative = 1e-12);
    }

    #[test]
    fn array_gain_closed_form() {
        // direct product form for a small array
        let m = model(2, 3, 0.4, 0.7);
        let modu = Modulation::psk8();
        let (n, mm) = (2u32, 3u32);
        let df: f64 = (1..=6u32).map(|i| f64::from(2 * i - 1)).product();
        let inner = modu.a * gamma_ratio(n, mm) / 2.0 * df;
        let ga = m.det_omega().powf(0.5) * m.det_sigma().powf(1.0 / 3.0) * 2.0 * modu.b * inner.powf(-1.0 / 6.0);
        assert_relative_eq!(high_snr_ser(&m, &modu).array_gain, ga, max_relative = 1e-12);
    }

    #[test]
    fn diversity_order_ignores_correlation() {
        for rho in [0.0, 0.3, 0.5, 0.9] {
            assert_eq!(
                high_snr_ser(&model(2, 2, rho, rho), &Modulation::psk8()).diversity_order,
                4
            );
        }
    }

    #[test]
    fn array_gain_penalty() {
        let modu = Modulation::psk8();
        let base = high_snr_ser(&model(2, 3, 0.0, 0.0), &modu).array_gain;
        for (rx, tx) in [(0.5, 0.5), (0.9, 0.2), (0.1, 0.9)] {
            let pair = CorrelationPair::exponential(2, 3, rx, tx).unwrap();
            let penalty = correlation_penalty(&pair);
            let ga = high_snr_ser(&EigDistModel::new(pair).unwrap(), &modu).array_gain;
            assert_relative_eq!(ga / base, penalty, max_relative = 1e-12);
        }
    }

    #[test]
    fn asymptote_power_law_and_shift() {
        let modu = Modulation::psk8();
        let hs = high_snr_ser(&model(2, 2, 0.5, 0.5), &modu);
        let step = 10.0 * 2f64.log10();
        let ratio = ser_asymptote_eval(&hs, 20.0) / ser_asymptote_eval(&hs, 20.0 + step);
        assert_relative_eq!(ratio, 16.0, max_relative = 1e-12);

        let pair = CorrelationPair::exponential(2, 2, 0.5, 0.5).unwrap();
        let shift = 10.0 * (1.0 / correlation_penalty(&pair)).log10();
        let flat = high_snr_ser(&model(2, 2, 0.0, 0.0), &modu);
        assert_relative_eq!(
            ser_asymptote_eval(&hs, 25.0 + shift),
            ser_asymptote_eval(&flat, 25.0),
            max_relative = 1e-10
        );
    }

    #[test]
    fn outage_examples() {
        let siso = model(1, 1, 0.0, 0.0);
        assert_relative_eq!(
            exact_outage(&siso, 0.0, 0.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-12
        );
        assert!(exact_outage(&siso, 0.0, -400.0).unwrap() < 1e-30);
        assert_eq!(exact_outage(&siso, 0.0, f64::NEG_INFINITY).unwrap(), 0.0);

        let m = model(3, 3, 0.5, 0.5);
        for th in [-20.0, -10.0, 0.0, 5.0] {
            let x = db_to_linear(th - 3.0);
            assert_eq!(asymptotic_outage(&m, 3.0, th).unwrap(), m.asymptotic_cdf(x));
            assert_eq!(exact_outage(&m, 3.0, th).unwrap(), m.exact_cdf_stable(x));
        }
    }

    #[test]
    fn asymptotic_outage_correlation_factor() {
        let flat = model(2, 3, 0.0, 0.0);
        let pair = CorrelationPair::exponential(2, 3, 0.6, 0.3).unwrap();
        let factor = pair.det_omega().powi(-3) * pair.det_sigma().powi(-2);
        let corr = EigDistModel::new(pair).unwrap();
        let r = asymptotic_outage(&corr, 0.0, -15.0).unwrap() / asymptotic_outage(&flat, 0.0, -15.0).unwrap();
        assert_relative_eq!(r, factor, max_relative = 1e-12);
    }

    #[test]
    fn ser_matches_direct_expectation() {
        // E[a Q(√(2bγ̄λ))] integrated against the density, by finite differences of F
        let m = model(2, 2, 0.5, 0.5);
        let modu = Modulation::psk8();
        let snr = db_to_linear(10.0);
        let (value, _) = integrate(
            |x: f64| {
                let h = 1e-5 * x.max(1e-3);
                let pdf =
                    (m.exact_cdf_stable(x + h) - m.exact_cdf_stable((x - h).max(0.0))) / (x + h - (x - h).max(0.0));
                modu.a * crate::specfun::gauss_q((2.0 * modu.b * snr * x).sqrt()) * pdf
            },
            &[0.0, 0.5, 2.0, 8.0, 40.0],
            1e-12,
            1e-9,
        )
        .unwrap();
        assert_relative_eq!(exact_ser(&m, &modu, 10.0).unwrap(), value, max_relative = 1e-6);
    }
}
