//! Exact c.d.f. against high-precision reference values and against a
//! direct evaluation of the determinant formula in the eigenvalues.

#![allow(clippy::excessive_precision)]

use mrc_core::linalg::vandermonde;
use mrc_core::specfun::multivariate_gamma_norm;
use mrc_core::{CorrelationPair, EigDistModel};

fn model(n_r: usize, n_t: usize, rho_rx: f64, rho_tx: f64) -> EigDistModel {
    EigDistModel::new(CorrelationPair::exponential(n_r, n_t, rho_rx, rho_tx).unwrap()).unwrap()
}

type Case = ((usize, usize, f64, f64), &'static [(f64, f64)]);

/// (n_r, n_t, ρ_rx, ρ_tx) → [(x, F(x))], from 200-digit arithmetic with
/// tied eigenvalues split by 1e-40.
#[rustfmt::skip]
const REFERENCE: &[Case] = &[
    ((2, 2, 0.0, 0.0), &[(0.0589, 9.4569307811551931e-7), (0.331, 0.00072105023019964594), (1.0, 0.031696959722285727), (3.0, 0.45482100013016299), (8.0, 0.97785957909360894), (20.0, 0.99999917141624378)]),
    ((3, 3, 0.0, 0.0), &[(0.59, 4.1846897070464586e-7), (1.27, 0.00015592254243395061), (1.0, 2.6668947505884876e-5), (3.0, 0.033810856290552834), (8.0, 0.76302272042261182), (20.0, 0.9999315635164832)]),
    ((1, 3, 0.0, 0.0), &[(0.0182, 9.9114568346624109e-7), (0.182, 0.00087711022863545688), (1.0, 0.080301397071394196), (3.0, 0.57680991887315648), (8.0, 0.98624603225599701), (20.0, 0.99999954448504944)]),
    ((2, 3, 0.5, 0.3), &[(0.186, 7.1275598643150318e-7), (0.589, 0.00035994957937666398), (1.0, 0.0044309601938811954), (3.0, 0.20929305848395163), (8.0, 0.85491985347958804), (20.0, 0.99924550886365432)]),
    ((3, 2, 0.5, 0.3), &[(0.18, 7.0650016684744068e-7), (0.57, 0.00035379046378344862), (1.0, 0.0050053802089281391), (3.0, 0.22070863059562622), (8.0, 0.85538116199723586), (20.0, 0.99893407657179608)]),
    ((3, 3, 0.9, 0.9), &[(0.0644, 4.217659107750261e-8), (0.139, 4.597868923372689e-6), (1.0, 0.020136715783006558), (3.0, 0.20377354216932294), (8.0, 0.58462163891976403), (20.0, 0.91550733725102872)]),
    ((2, 4, 0.9, 0.0), &[(0.21, 2.4815973181155756e-7), (0.498, 4.6765184720437797e-5), (1.0, 0.0013123031392282836), (3.0, 0.068423274023889225), (8.0, 0.59628682807101407), (20.0, 0.99270141764357683)]),
    ((4, 4, 0.5, 0.5), &[(0.992, 1.6981695530727775e-8), (1.53, 2.5167448049923119e-6), (1.0, 1.8738488689544513e-8), (3.0, 0.0013035738739497769), (8.0, 0.23679054367101648), (20.0, 0.91826553826661544)]),
    ((3, 3, 0.5, 0.0), &[(0.487, 3.577734908006513e-7), (1.05, 0.00011658273421360501), (1.0, 8.2846940703969803e-5), (3.0, 0.048381566569064375), (8.0, 0.67707226636556575), (20.0, 0.99734260818353286)]),
];

#[test]
fn exact_cdf_matches_reference() {
    let mut worst: f64 = 0.0;
    for &((n_r, n_t, rr, rt), points) in REFERENCE {
        let m = model(n_r, n_t, rr, rt);
        for &(x, want) in points {
            let got = m.exact_cdf(x).unwrap();
            let rel = (got - want).abs() / want;
            worst = worst.max(rel);
            eprintln!("{n_r}x{n_t} ({rr},{rt}) x={x}: got {got:e} want {want:e} rel {rel:.2e}");
            let tol = if want < 1e-5 { 1e-6 } else { 1e-9 };
            assert!(rel < tol, "{n_r}x{n_t} ({rr},{rt}) x={x}: {got:e} vs {want:e}");
        }
    }
    eprintln!("worst relative error {worst:.2e}");
}

/// Direct evaluation in the correlation eigenvalues, valid when they are
/// pairwise distinct:
/// F(x) = (−1)^n Γ_n(n) det(Ω)^{n−1} det(Σ)^{m−1} det Ψ(x) / (Δ_n(ω) Δ_m(σ) (−x)^{n(n−1)/2}).
fn literal_cdf(m: &EigDistModel, x: f64) -> f64 {
    let n = m.n();
    let mm = m.m();
    let omega = m.pair().omega_eigs();
    let sigma = m.pair().sigma_eigs();
    let det_o: f64 = omega.iter().product();
    let det_s: f64 = sigma.iter().product();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let num = sign
        * multivariate_gamma_norm(n as u32, n as u32).unwrap()
        * det_o.powi(n as i32 - 1)
        * det_s.powi(mm as i32 - 1)
        * m.psi(x).det();
    let den = vandermonde(omega).unwrap() * vandermonde(sigma).unwrap() * (-x).powi((n * (n - 1) / 2) as i32);
    num / den
}

#[test]
fn confluent_form_agrees_with_literal_form_for_distinct_eigenvalues() {
    for (n_r, n_t, rr, rt) in [
        (2, 3, 0.5, 0.3),
        (3, 2, 0.7, 0.2),
        (3, 3, 0.9, 0.5),
        (2, 4, 0.6, 0.6),
        (1, 3, 0.0, 0.8),
    ] {
        let m = model(n_r, n_t, rr, rt);
        assert!(!m.has_merged_eigenvalues());
        for &x in &[0.5, 1.0, 2.0, 5.0, 12.0] {
            let a = m.exact_cdf_unclamped(x);
            let b = literal_cdf(&m, x);
            assert!(
                (a - b).abs() <= 1e-9 * b.abs().max(1e-3),
                "{n_r}x{n_t} x={x}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn uncorrelated_special_cases_match_closed_forms() {
    // λ_max for a single-antenna side is a sum of m unit exponentials (Erlang-m).
    for m_ant in 1..=3usize {
        let m = model(1, m_ant, 0.0, 0.0);
        for i in 1..=40 {
            let x = 0.25 * f64::from(i);
            let tail: f64 = (0..m_ant as i32)
                .map(|k| x.powi(k) / (1..=k).product::<i32>().max(1) as f64)
                .sum();
            let want = 1.0 - (-x).exp() * tail;
            let got = m.exact_cdf(x).unwrap();
            assert!(
                (got - want).abs() <= 1e-8 * want.max(1e-300),
                "1x{m_ant} x={x}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn swapping_sides_swaps_roles_not_distribution() {
    let a = model(2, 3, 0.6, 0.2);
    let b = model(3, 2, 0.2, 0.6);
    for &x in &[0.3, 1.0, 4.0] {
        assert!((a.exact_cdf(x).unwrap() - b.exact_cdf(x).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn stable_cdf_is_monotone() {
    for (n_r, n_t) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (2, 4), (3, 4), (4, 4)] {
        for &rho in &[0.0, 0.3, 0.5, 0.9] {
            let m = model(n_r, n_t, rho, rho);
            let top = 20.0 * (n_r * n_t) as f64;
            let mut prev = 0.0;
            for i in 0..2000 {
                let x = top * f64::from(i) / 1999.0;
                let f = m.exact_cdf_stable(x);
                assert!((0.0..=1.0).contains(&f));
                assert!(f >= prev, "{n_r}x{n_t} rho={rho}: F({x}) = {f} < {prev}");
                prev = f;
            }
        }
    }
}

#[test]
fn exact_and_first_order_agree_near_origin() {
    for (n_r, n_t) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)] {
        for &rho in &[0.0, 0.5, 0.9] {
            let m = model(n_r, n_t, rho, rho);
            let at = |level: f64| ((level.ln() - m.log_alpha()) / f64::from(m.order())).exp();
            let mut prev = (f64::INFINITY, f64::INFINITY);
            for level in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8] {
                let x = at(level);
                if x < m.x_star() {
                    break;
                }
                let dev = (m.exact_cdf_unclamped(x) / m.asymptotic_cdf(x) - 1.0).abs();
                assert!(
                    dev < prev.1,
                    "{n_r}x{n_t} rho={rho}: deviation {dev} at level {level} not below {}",
                    prev.1
                );
                if prev.1 < 0.2 {
                    // once in the asymptotic regime the gap closes linearly in x
                    let order = (dev / prev.1).ln() / (x / prev.0).ln();
                    assert!(
                        order > 0.6,
                        "{n_r}x{n_t} rho={rho}: convergence order {order} at level {level}"
                    );
                }
                prev = (x, dev);
            }
        }
    }
}
