use mrc_core::montecarlo::{ks_distance, mc_outage, mc_ser, sample_lambda_max};
use mrc_core::performance::{exact_outage, exact_ser};
use mrc_core::{CorrelationPair, EigDistModel, McConfig, Modulation};

const DKW_99: f64 = 1.63;

fn model(n_r: usize, n_t: usize, rho_rx: f64, rho_tx: f64) -> EigDistModel {
    EigDistModel::new(CorrelationPair::exponential(n_r, n_t, rho_rx, rho_tx).unwrap()).unwrap()
}

#[test]
fn exact_cdf_within_dkw_band() {
    for (n_r, n_t, rho) in [(2, 2, 0.0), (2, 3, 0.7), (1, 3, 0.5)] {
        let cfg = McConfig::exponential(n_r, n_t, rho, rho, 1_000_000, 2024).unwrap();
        let mut samples = sample_lambda_max(&cfg).unwrap();
        samples.sort_by(f64::total_cmp);
        let m = model(n_r, n_t, rho, rho);
        let d = ks_distance(&samples, |x| m.exact_cdf_stable(x));
        let bound = DKW_99 / (samples.len() as f64).sqrt();
        assert!(d < bound, "{n_r}x{n_t} rho={rho}: KS {d} >= {bound}");
    }
}

#[test]
fn exact_ser_matches_semi_analytic_simulation() {
    let cfg = McConfig::exponential(2, 2, 0.5, 0.5, 1_000_000, 77).unwrap();
    let m = model(2, 2, 0.5, 0.5);
    let modu = Modulation::psk8();
    let mc = mc_ser(&cfg, &modu, 20.0).unwrap();
    let exact = exact_ser(&m, &modu, 20.0).unwrap();
    assert!((mc.estimate - exact).abs() < 3.0 * mc.std_error, "{exact} vs {mc:?}");
}

#[test]
fn median_outage_is_one_half() {
    let m = model(3, 3, 0.0, 0.0);
    // bisection on the threshold in dB
    let (mut lo, mut hi) = (-20.0, 20.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if exact_outage(&m, 0.0, mid).unwrap() < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let median_db = 0.5 * (lo + hi);
    assert!((exact_outage(&m, 0.0, median_db).unwrap() - 0.5).abs() < 1e-9);
    let cfg = McConfig::exponential(3, 3, 0.0, 0.0, 200_000, 3).unwrap();
    let mc = mc_outage(&cfg, 0.0, median_db).unwrap();
    assert!((mc.estimate - 0.5).abs() < 3.0 * mc.std_error, "{mc:?}");
}
