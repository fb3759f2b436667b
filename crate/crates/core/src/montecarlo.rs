//! Monte-Carlo simulation of the correlated channel, used as an
//! independent check on the analytic results.
//!
//! Trials are split into fixed-size batches. Batch `k` draws from a ChaCha8
//! generator seeded with the configured seed on stream `k`, so results are
//! identical for any number of worker threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::correlation::CorrelationPair;
use crate::db_to_linear;
use crate::error::{invalid, Result};
use crate::linalg::{herm_eig, herm_sqrt, ComplexMatrix};
use crate::performance::Modulation;
use crate::specfun::gauss_q;

/// Trials per independently seeded batch.
pub const BATCH_SIZE: u64 = 8192;

#[derive(Debug, Clone)]
pub struct McConfig {
    pub pair: CorrelationPair,
    pub trials: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(pair: CorrelationPair, trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(invalid("Monte-Carlo run needs at least one trial"));
        }
        Ok(Self { pair, trials, seed })
    }

    /// Exponential correlation on both sides.
    pub fn exponential(n_r: usize, n_t: usize, rho_rx: f64, rho_tx: f64, trials: u64, seed: u64) -> Result<Self> {
        Self::new(CorrelationPair::exponential(n_r, n_t, rho_rx, rho_tx)?, trials, seed)
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Draws `R^{1/2} H_w S^{1/2}` with precomputed square roots.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    rx_sqrt: ComplexMatrix,
    tx_sqrt: ComplexMatrix,
}

impl ChannelSampler {
    pub fn new(pair: &CorrelationPair) -> Result<Self> {
        Ok(Self {
            rx_sqrt: herm_sqrt(pair.rx())?,
            tx_sqrt: herm_sqrt(pair.tx())?,
        })
    }

    pub fn n_r(&self) -> usize {
        self.rx_sqrt.rows()
    }

    pub fn n_t(&self) -> usize {
        self.tx_sqrt.rows()
    }
}

/// Standard normal variate by the Marsaglia polar method. The second value
/// of each accepted pair is returned through `spare`.
fn normal<R: Rng>(rng: &mut R, spare: &mut Option<f64>) -> f64 {
    if let Some(z) = spare.take() {
        return z;
    }
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let k = (-2.0 * s.ln() / s).sqrt();
            *spare = Some(v * k);
            return u * k;
        }
    }
}

/// `H_w` entries have real and imaginary parts of variance 1/2.
fn draw_white<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let mut spare = None;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re = normal(rng, &mut spare);
        let im = normal(rng, &mut spare);
        Complex64::new(s * re, s * im)
    })
}

pub fn draw_channel<R: Rng>(sampler: &ChannelSampler, rng: &mut R) -> ComplexMatrix {
    let hw = draw_white(rng, sampler.n_r(), sampler.n_t());
    &(&sampler.rx_sqrt * &hw) * &sampler.tx_sqrt
}

/// `(λ_max(H†H), γ̄ λ_max)`. The eigenproblem is solved on the smaller of
/// `H†H` and `HH†`.
pub fn max_eig_snr(h: &ComplexMatrix, snr_db: f64) -> Result<(f64, f64)> {
    let hh = h.adjoint();
    let tall = h.rows() >= h.cols();
    let gram = if tall { &hh * h } else { h * &hh };
    let gram = (&gram + &gram.adjoint()).scale(0.5);
    let eig = herm_eig(&gram)?;
    let lambda = eig.max_eigenvalue().max(0.0);

    #[cfg(debug_assertions)]
    check_beamformer(h, &eig, tall, lambda);

    Ok((lambda, db_to_linear(snr_db) * lambda))
}

/// `w_opt` attains the Rayleigh quotient `λ_max`; a fixed other unit vector
/// does not exceed it.
#[cfg(debug_assertions)]
fn check_beamformer(h: &ComplexMatrix, eig: &crate::linalg::HermitianEig, tall: bool, lambda: f64) {
    let k = eig.eigenvalues.len() - 1;
    let top = ComplexMatrix::from_fn(eig.eigenvectors.rows(), 1, |i, _| eig.eigenvectors[(i, k)]);
    let w = if tall { top } else { &h.adjoint() * &top };
    let quotient = |w: &ComplexMatrix| {
        let hw = h * w;
        let num: f64 = hw.as_slice().iter().map(|z| z.norm_sqr()).sum();
        let den: f64 = w.as_slice().iter().map(|z| z.norm_sqr()).sum();
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    let scale = lambda.max(f64::MIN_POSITIVE);
    debug_assert!(
        (quotient(&w) - lambda).abs() <= 1e-10 * scale.max(1.0),
        "beamformer misses λ_max"
    );
    let other = ComplexMatrix::from_fn(h.cols(), 1, |i, _| Complex64::new(1.0, i as f64));
    debug_assert!(
        quotient(&other) <= lambda * (1.0 + 1e-10) + 1e-300,
        "λ_max is not the maximum"
    );
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn batches(trials: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let count = trials.div_ceil(BATCH_SIZE) as usize;
    (0..count).into_par_iter().map(move |k| {
        let k = k as u64;
        (k, BATCH_SIZE.min(trials - k * BATCH_SIZE))
    })
}

/// Simulated `λ_max` values in trial order.
pub fn sample_lambda_max(cfg: &McConfig) -> Result<Vec<f64>> {
    let sampler = ChannelSampler::new(&cfg.pair)?;
    let per_batch: Result<Vec<Vec<f64>>> = batches(cfg.trials)
        .map(|(k, len)| {
            let mut rng = batch_rng(cfg.seed, k);
            (0..len)
                .map(|_| max_eig_snr(&draw_channel(&sampler, &mut rng), 0.0).map(|r| r.0))
                .collect()
        })
        .collect();
    Ok(per_batch?.into_iter().flatten().collect())
}

/// Fraction of simulated `λ_max` at or below each grid point.
pub fn empirical_cdf(cfg: &McConfig, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.iter().any(|x| x.is_nan()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("empirical c.d.f. grid must be ascending"));
    }
    let mut samples = sample_lambda_max(cfg)?;
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    Ok(grid
        .iter()
        .map(|&x| samples.partition_point(|&s| s <= x) as f64 / n)
        .collect())
}

/// `sup_x |F_N(x) − F(x)|` over sorted samples.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Running `(count, mean, M2)`.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Self, b: Self) -> Self {
        let count = a.count + b.count;
        if count == 0.0 {
            return a;
        }
        let d = b.mean - a.mean;
        Self {
            count,
            mean: a.mean + d * b.count / count,
            m2: a.m2 + b.m2 + d * d * a.count * b.count / count,
        }
    }

    /// Pairwise reduction in a fixed tree shape.
    fn merge_all(mut parts: Vec<Self>) -> Self {
        while parts.len() > 1 {
            parts = parts
                .chunks(2)
                .map(|c| if c.len() == 2 { Self::merge(c[0], c[1]) } else { c[0] })
                .collect();
        }
        parts.pop().unwrap_or_default()
    }

    fn result(&self) -> McResult {
        let var = if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        };
        McResult {
            estimate: self.mean,
            std_error: (var / self.count).sqrt(),
            trials: self.count as u64,
        }
    }
}

/// Per-trial statistics `f(λ_max) -> [values]`, one `McResult` per output.
fn simulate<F>(cfg: &McConfig, outputs: usize, f: F) -> Result<Vec<McResult>>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    let sampler = ChannelSampler::new(&cfg.pair)?;
    let per_batch: Result<Vec<Vec<Moments>>> = batches(cfg.trials)
        .map(|(k, len)| {
            let mut rng = batch_rng(cfg.seed, k);
            let mut acc = vec![Moments::default(); outputs];
            let mut values = vec![0.0; outputs];
            for _ in 0..len {
                let (lambda, _) = max_eig_snr(&draw_channel(&sampler, &mut rng), 0.0)?;
                f(lambda, &mut values);
                for (a, &v) in acc.iter_mut().zip(&values) {
                    a.push(v);
                }
            }
            Ok(acc)
        })
        .collect();
    let per_batch = per_batch?;
    Ok((0..outputs)
        .map(|j| Moments::merge_all(per_batch.iter().map(|b| b[j]).collect()).result())
        .collect())
}

/// Semi-analytic SER: mean of `a Q(√(2b γ̄ λ_max))`.
pub fn mc_ser(cfg: &McConfig, modulation: &Modulation, snr_db: f64) -> Result<McResult> {
    Ok(mc_ser_sweep(cfg, modulation, &[snr_db])?[0])
}

/// [`mc_ser`] at several SNRs from one set of channel draws.
pub fn mc_ser_sweep(cfg: &McConfig, modulation: &Modulation, snr_db: &[f64]) -> Result<Vec<McResult>> {
    check_finite(snr_db, "SNR")?;
    let snrs: Vec<f64> = snr_db.iter().map(|&d| db_to_linear(d)).collect();
    let (a, b) = (modulation.a, modulation.b);
    simulate(cfg, snrs.len(), |lambda, out| {
        for (o, &s) in out.iter_mut().zip(&snrs) {
            *o = a * gauss_q((2.0 * b * s * lambda).sqrt());
        }
    })
}

/// Fraction of trials with `γ̄ λ_max ≤ γ_th`, with binomial standard error.
pub fn mc_outage(cfg: &McConfig, snr_db: f64, gamma_th_db: f64) -> Result<McResult> {
    Ok(mc_outage_sweep(cfg, snr_db, &[gamma_th_db])?[0])
}

pub fn mc_outage_sweep(cfg: &McConfig, snr_db: f64, gamma_th_db: &[f64]) -> Result<Vec<McResult>> {
    check_finite(&[snr_db], "SNR")?;
    if gamma_th_db.iter().any(|g| g.is_nan() || *g == f64::INFINITY) {
        return Err(invalid("outage thresholds must be finite"));
    }
    let snr = db_to_linear(snr_db);
    let thresholds: Vec<f64> = gamma_th_db.iter().map(|&g| db_to_linear(g)).collect();
    simulate(cfg, thresholds.len(), |lambda, out| {
        for (o, &t) in out.iter_mut().zip(&thresholds) {
            *o = if snr * lambda <= t { 1.0 } else { 0.0 };
        }
    })
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(invalid(format!("{what} must be finite, got {v}"))),
        None => Ok(()),
    }
}
