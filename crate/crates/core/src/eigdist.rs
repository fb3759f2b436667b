//! Distribution of the largest eigenvalue `λ_max` of `H†H` for the
//! Kronecker-correlated Rayleigh channel.
//!
//! Two evaluations are provided:
//!
//! * the exact c.d.f., a determinant of an `m x m` matrix `Ψ(x)` normalised
//!   by Vandermonde products of the correlation eigenvalues, and
//! * the first-order expansion `F(x) ≈ α x^{mn}` around the origin.
//!
//! The exact form divides by Vandermonde products, which vanish when
//! eigenvalues repeat (always the case for uncorrelated arrays). Instead of
//! perturbing eigenvalues apart, eigenvalues closer than a relative `1e-6`
//! are merged into clusters and the determinant is evaluated in its
//! confluent limit: within a cluster of multiplicity `k`, columns (or rows)
//! are replaced by the scaled derivatives `∂^r/r!`, `r < k`, and the
//! Vandermonde product by `∏_{a<b} (U_b − U_a)^{k_a k_b}`.
//!
//! Internally the determinant is written in the reciprocal eigenvalues
//! `u = 1/σ`, `v = 1/ω`, where every entry depends on `x v u` only:
//!
//! ```text
//! F(x) = (−1)^n Γ_n(n) det Ψ(x) / ((−1)^{m(m−1)/2 + n(n−1)/2} Δ(v) Δ(u) (−x)^{n(n−1)/2})
//! ```
//!
//! with rows `i ≤ τ` equal to `u_j^{m−i}` and the remaining rows equal to
//! `T_m(x v_i u_j)`, `T_m(c) = e^{−c} − Σ_{k<m} (−c)^k/k!`.

use crate::correlation::CorrelationPair;
use crate::error::{invalid, Result};
use crate::linalg::{det_real, vandermonde};
use crate::specfun::{binomial, factorial, ln_multivariate_gamma_norm, multivariate_gamma_norm};

/// Relative gap below which two eigenvalues are treated as equal.
pub const DEGENERACY_REL_TOL: f64 = 1e-6;

/// Tolerance on `|F/(αx^{mn}) − 1|` used to place the small-x crossover.
const CROSSOVER_TOL: f64 = 0.02;
/// Asymptotic c.d.f. value at which the crossover scan starts.
const CROSSOVER_START: f64 = 1e-3;
const CROSSOVER_POINTS_PER_DECADE: f64 = 20.0;

/// Largest-eigenvalue distribution for one correlation pair.
#[derive(Debug, Clone)]
pub struct EigDistModel {
    pair: CorrelationPair,
    alpha: f64,
    log_alpha: f64,
    vand_omega: f64,
    vand_sigma: f64,
    kernel: ConfluentKernel,
    x_star: f64,
}

impl EigDistModel {
    pub fn new(pair: CorrelationPair) -> Result<Self> {
        let log_alpha = log_alpha(&pair)?;
        let kernel = ConfluentKernel::new(&pair)?;
        let vand_omega = vandermonde(pair.omega_eigs())?;
        let vand_sigma = vandermonde(pair.sigma_eigs())?;
        let mut model = Self {
            alpha: log_alpha.exp(),
            log_alpha,
            vand_omega,
            vand_sigma,
            kernel,
            x_star: 0.0,
            pair,
        };
        model.x_star = model.find_crossover();
        Ok(model)
    }

    pub fn pair(&self) -> &CorrelationPair {
        &self.pair
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }

    pub fn m(&self) -> usize {
        self.pair.m()
    }

    /// Exponent `mn` of the leading term.
    pub fn order(&self) -> u32 {
        (self.n() * self.m()) as u32
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    pub fn det_omega(&self) -> f64 {
        self.pair.det_omega()
    }

    pub fn det_sigma(&self) -> f64 {
        self.pair.det_sigma()
    }

    /// `∏_{i<j} (ω_j − ω_i)` over the unmerged eigenvalues; zero under ties.
    pub fn vand_omega(&self) -> f64 {
        self.vand_omega
    }

    pub fn vand_sigma(&self) -> f64 {
        self.vand_sigma
    }

    /// Below this point [`Self::exact_cdf_stable`] returns the first-order term.
    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    /// Whether any eigenvalues were merged for the determinant evaluation.
    pub fn has_merged_eigenvalues(&self) -> bool {
        self.kernel.u_clusters.len() < self.m() || self.kernel.v_clusters.len() < self.n()
    }

    /// Exact c.d.f. `Pr(λ_max ≤ x)`, clamped to `[0, 1]`.
    pub fn exact_cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(invalid(format!("c.d.f. argument must be nonnegative, got {x}")));
        }
        let raw = self.exact_cdf_unclamped(x);
        let clamped = raw.clamp(0.0, 1.0);
        debug_assert!(
            x < self.x_star || (raw - clamped).abs() <= 1e-6,
            "exact c.d.f. {raw} at x = {x} is outside [0, 1]"
        );
        Ok(clamped)
    }

    /// The determinant formula before clamping; exposed for diagnostics.
    pub fn exact_cdf_unclamped(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        self.kernel.cdf(x)
    }

    /// `α x^{mn}`, unclamped. Zero for `x ≤ 0`.
    pub fn asymptotic_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (self.log_alpha + f64::from(self.order()) * x.ln()).exp()
    }

    /// `mn α x^{mn−1}`; equals `α` everywhere when `mn = 1`.
    pub fn asymptotic_pdf(&self, x: f64) -> f64 {
        let order = self.order();
        if order == 1 {
            return self.alpha;
        }
        if x <= 0.0 {
            return 0.0;
        }
        f64::from(order) * (self.log_alpha + f64::from(order - 1) * x.ln()).exp()
    }

    /// Exact c.d.f. above the crossover `x*`, first-order term below it.
    pub fn exact_cdf_stable(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 {
            return 0.0;
        }
        if x < self.x_star {
            self.asymptotic_cdf(x)
        } else {
            self.exact_cdf_unclamped(x).clamp(0.0, 1.0)
        }
    }

    /// The literal `m x m` matrix `Ψ(x)` in the correlation eigenvalues.
    pub fn psi(&self, x: f64) -> PsiMatrix {
        let m = self.m();
        let tau = self.pair.tau();
        let omega = self.pair.omega_eigs();
        let sigma = self.pair.sigma_eigs();
        let mut entries = Vec::with_capacity(m * m);
        for i in 1..=m {
            for &s in sigma {
                entries.push(if i <= tau {
                    (1.0 / s).powi((m - i) as i32)
                } else {
                    tail_kernel(m as u32, 0, 0, x / (omega[i - tau - 1] * s))
                });
            }
        }
        PsiMatrix { x, size: m, entries }
    }

    /// Scans downward from where `αx^{mn} = 1e-3`. While the exact form and
    /// the first-order term agree within 2%, the crossover sits at the point
    /// of closest agreement; the scan stops once they diverge again, which
    /// is where the determinant loses precision to cancellation.
    fn find_crossover(&self) -> f64 {
        let order = f64::from(self.order());
        let x0 = ((CROSSOVER_START.ln() - self.log_alpha) / order).exp();
        let step = (-std::f64::consts::LN_10 / CROSSOVER_POINTS_PER_DECADE).exp();
        let x_floor = ((-690.0 - self.log_alpha) / order).exp().max(1e-300);

        let mut best_in_run: Option<(f64, f64)> = None;
        let mut best_overall: (f64, f64) = (f64::INFINITY, x0);
        let mut x = x0;
        while x > x_floor {
            let ratio = self.kernel.cdf(x) / self.asymptotic_cdf(x);
            let dev = if ratio.is_finite() {
                (ratio - 1.0).abs()
            } else {
                f64::INFINITY
            };
            if dev < best_overall.0 {
                best_overall = (dev, x);
            }
            if dev <= CROSSOVER_TOL {
                if best_in_run.is_none_or(|(d, _)| dev < d) {
                    best_in_run = Some((dev, x));
                }
            } else if best_in_run.is_some() {
                break;
            }
            x *= step;
        }
        best_in_run.unwrap_or(best_overall).1
    }
}

/// Coefficient `α = Γ_n(n) / (det(Ω)^m det(Σ)^n Γ_n(m+n))`, evaluated in the
/// log domain.
pub fn alpha_coefficient(pair: &CorrelationPair) -> Result<f64> {
    Ok(log_alpha(pair)?.exp())
}

fn log_alpha(pair: &CorrelationPair) -> Result<f64> {
    let n = pair.n() as u32;
    let m = pair.m() as u32;
    Ok(ln_multivariate_gamma_norm(n, n)?
        - f64::from(m) * pair.det_omega().ln()
        - f64::from(n) * pair.det_sigma().ln()
        - ln_multivariate_gamma_norm(n, m + n)?)
}

/// `Ψ(x)` with the literal row/column layout: rows `i ≤ τ` hold
/// `σ_j^{−(m−i)}`, the others `e^{−c} P(m; −c)` with `c = x/(ω_{i−τ} σ_j)`.
#[derive(Debug, Clone)]
pub struct PsiMatrix {
    pub x: f64,
    pub size: usize,
    /// Row-major.
    pub entries: Vec<f64>,
}

impl PsiMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn det(&self) -> f64 {
        det_real(self.entries.clone(), self.size)
    }
}

/// `G_{m,r,s}(c) = Σ_{k≥m} C(k,r) C(k,s) (−c)^k / k!`.
///
/// This is `(∂_u^r/r!)(∂_v^s/s!) T_m(x v u)` scaled by `u^r v^s`; with
/// `r = s = 0` it is `T_m(c) = e^{−c} − Σ_{k<m} (−c)^k/k!`. Summed directly
/// for `c ≤ m`, otherwise from the closed form
/// `e^{−c} Σ_t C(r,t) (−c)^{r+s−t} / (r! (s−t)!)` minus the first `m` terms.
pub fn tail_kernel(m: u32, r: u32, s: u32, c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    if c <= f64::from(m) {
        // (−c)^m / m!
        let mut term = (1..=m).fold(1.0, |acc, k| acc * (-c) / f64::from(k));
        let mut k = m;
        let mut sum = 0.0;
        loop {
            let t = binomial(k, r) * binomial(k, s) * term;
            sum += t;
            if t.abs() <= 1e-17 * sum.abs() && f64::from(k) > 2.0 * c {
                break;
            }
            if k > m + 400 {
                break;
            }
            k += 1;
            term *= -c / f64::from(k);
        }
        sum
    } else {
        exp_part(r, s, c) - head_part(m, r, s, c)
    }
}

/// Full series `Σ_{k≥0} C(k,r) C(k,s) (−c)^k / k!` in closed form.
fn exp_part(r: u32, s: u32, c: f64) -> f64 {
    let z = -c;
    let poly: f64 = (0..=r.min(s))
        .map(|t| binomial(r, t) / (factorial(r) * factorial(s - t)) * z.powi((r + s - t) as i32))
        .sum();
    poly * (-c).exp()
}

/// First `m` terms `Σ_{k<m} C(k,r) C(k,s) (−c)^k / k!`.
fn head_part(m: u32, r: u32, s: u32, c: f64) -> f64 {
    let mut head = 0.0;
    let mut term = 1.0;
    for k in 0..m {
        if k > 0 {
            term *= -c / f64::from(k);
        }
        head += binomial(k, r) * binomial(k, s) * term;
    }
    head
}

#[derive(Debug, Clone, Copy)]
struct Cluster {
    /// Reciprocal of the (geometric-mean) eigenvalue.
    recip: f64,
    mult: usize,
}

/// Determinant evaluation with repeated eigenvalues merged.
#[derive(Debug, Clone)]
struct ConfluentKernel {
    m: usize,
    n: usize,
    u_clusters: Vec<Cluster>,
    v_clusters: Vec<Cluster>,
    prefactor: f64,
}

fn cluster(eigs: &[f64]) -> Vec<Cluster> {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &e in eigs {
        match groups.last_mut() {
            Some(g) if (e - g[g.len() - 1]).abs() <= DEGENERACY_REL_TOL * e.abs() => g.push(e),
            _ => groups.push(vec![e]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let mean_log = g.iter().map(|e| e.ln()).sum::<f64>() / g.len() as f64;
            Cluster {
                recip: (-mean_log).exp(),
                mult: g.len(),
            }
        })
        .collect()
}

fn confluent_vandermonde(clusters: &[Cluster]) -> f64 {
    let mut prod = 1.0;
    for (a, ca) in clusters.iter().enumerate() {
        for cb in &clusters[a + 1..] {
            prod *= (cb.recip - ca.recip).powi((ca.mult * cb.mult) as i32);
        }
    }
    prod
}

impl ConfluentKernel {
    fn new(pair: &CorrelationPair) -> Result<Self> {
        let n = pair.n();
        let m = pair.m();
        let u_clusters = cluster(pair.sigma_eigs());
        let v_clusters = cluster(pair.omega_eigs());
        let sign_exp = n + m * (m - 1) / 2 + n * (n - 1) / 2;
        let sign = if sign_exp.is_multiple_of(2) { 1.0 } else { -1.0 };
        let gamma_nn = multivariate_gamma_norm(n as u32, n as u32)?;
        let prefactor = sign * gamma_nn / (confluent_vandermonde(&u_clusters) * confluent_vandermonde(&v_clusters));
        Ok(Self {
            m,
            n,
            u_clusters,
            v_clusters,
            prefactor,
        })
    }

    fn columns(&self) -> Vec<(f64, u32)> {
        self.u_clusters
            .iter()
            .flat_map(|c| (0..c.mult as u32).map(move |r| (c.recip, r)))
            .collect()
    }

    /// `(v, s)` per row below the first `τ`.
    fn derivative_rows(&self) -> Vec<(f64, u32)> {
        self.v_clusters
            .iter()
            .flat_map(|c| (0..c.mult as u32).map(move |s| (c.recip, s)))
            .collect()
    }

    fn power_rows(&self, columns: &[(f64, u32)]) -> Vec<f64> {
        let m = self.m;
        let tau = m - self.n;
        let mut entries = Vec::with_capacity(tau * m);
        for i in 1..=tau {
            let p = (m - i) as u32;
            for &(u, r) in columns {
                entries.push(if r > p {
                    0.0
                } else {
                    binomial(p, r) * u.powi((p - r) as i32)
                });
            }
        }
        entries
    }

    fn matrix(&self, x: f64) -> Vec<f64> {
        let m = self.m as u32;
        let columns = self.columns();
        let mut entries = self.power_rows(&columns);
        for (v, s) in self.derivative_rows() {
            for &(u, r) in &columns {
                let g = tail_kernel(m, r, s, x * v * u);
                entries.push(g / (v.powi(s as i32) * u.powi(r as i32)));
            }
        }
        entries
    }

    fn scale(&self, x: f64) -> f64 {
        self.prefactor / (-x).powi((self.n * (self.n - 1) / 2) as i32)
    }

    fn cdf(&self, x: f64) -> f64 {
        let f = self.scale(x) * det_real(self.matrix(x), self.m);
        if f > 0.5 {
            1.0 - self.complement(x)
        } else {
            f
        }
    }

    /// `1 − F(x)` without forming `F`. Each lower row splits as
    /// `exp_part − head_part`; the determinant with every row replaced by
    /// `−head_part` is exactly the `x → ∞` limit (F = 1), so the complement
    /// is minus the sum over the remaining row selections.
    fn complement(&self, x: f64) -> f64 {
        let m = self.m;
        let columns = self.columns();
        let power = self.power_rows(&columns);
        let rows = self.derivative_rows();
        let mut heads = Vec::with_capacity(rows.len());
        let mut exps = Vec::with_capacity(rows.len());
        for &(v, s) in &rows {
            let mut h = Vec::with_capacity(m);
            let mut e = Vec::with_capacity(m);
            for &(u, r) in &columns {
                let c = x * v * u;
                let denom = v.powi(s as i32) * u.powi(r as i32);
                h.push(-head_part(m as u32, r, s, c) / denom);
                e.push(exp_part(r, s, c) / denom);
            }
            heads.push(h);
            exps.push(e);
        }
        let mut total = 0.0;
        for mask in 1u32..(1 << rows.len()) {
            let mut entries = power.clone();
            for (k, (h, e)) in heads.iter().zip(&exps).enumerate() {
                entries.extend_from_slice(if mask & (1 << k) != 0 { e } else { h });
            }
            total += det_real(entries, m);
        }
        -self.scale(x) * total
    }

    /// Value of the all-polynomial determinant; identically 1.
    #[cfg(test)]
    fn polynomial_limit(&self, x: f64) -> f64 {
        let m = self.m;
        let columns = self.columns();
        let mut entries = self.power_rows(&columns);
        for (v, s) in self.derivative_rows() {
            for &(u, r) in &columns {
                entries.push(-head_part(m as u32, r, s, x * v * u) / (v.powi(s as i32) * u.powi(r as i32)));
            }
        }
        self.scale(x) * det_real(entries, m)
    }
}
