//! Command-line front end: c.d.f., SER and outage curves as CSV, plus a
//! key=value summary of the high-SNR parameters.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use mrc_core::correlation::{fmt_sig17, read_matrix_csv};
use mrc_core::montecarlo::{empirical_cdf, mc_outage_sweep, mc_ser_sweep};
use mrc_core::performance::{asymptotic_outage, exact_outage, exact_ser, high_snr_ser, ser_asymptote_eval};
use mrc_core::{correlation_penalty, CorrelationPair, EigDistModel, Error, McConfig, Modulation};

#[derive(Debug, Parser)]
#[command(
    name = "mimo-mrc",
    version,
    about = "Performance of MIMO-MRC over correlated Rayleigh channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// λ_max c.d.f.: columns x, exact, asymptotic
    Cdf {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Single evaluation point (instead of --sweep)
        #[arg(long, allow_hyphen_values = true, conflicts_with = "sweep")]
        x: Option<f64>,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Symbol error rate against SNR: columns snr_db, exact, asymptote
    Ser {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        modulation: ModulationArgs,
        /// Single SNR in dB (instead of --sweep)
        #[arg(long, allow_hyphen_values = true, conflicts_with = "sweep")]
        snr_db: Option<f64>,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Outage probability against threshold: columns gamma_th_db, exact, asymptotic
    Outage {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Average SNR in dB
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        snr_db: f64,
        /// Single threshold in dB (instead of --sweep)
        #[arg(long, allow_hyphen_values = true, conflicts_with = "sweep")]
        gamma_th_db: Option<f64>,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Diversity order, array gain and related constants as key=value lines
    Summary {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        modulation: ModulationArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Receive antennas
    #[arg(long)]
    pub nr: Option<usize>,
    /// Transmit antennas
    #[arg(long)]
    pub nt: Option<usize>,
    /// Exponential receive correlation coefficient
    #[arg(long, conflicts_with = "corr_rx_file")]
    pub rho_rx: Option<f64>,
    /// Exponential transmit correlation coefficient
    #[arg(long, conflicts_with = "corr_tx_file")]
    pub rho_tx: Option<f64>,
    /// Receive correlation matrix as CSV
    #[arg(long, conflicts_with_all = ["rho_rx", "rho_tx"])]
    pub corr_rx_file: Option<PathBuf>,
    /// Transmit correlation matrix as CSV
    #[arg(long, conflicts_with_all = ["rho_rx", "rho_tx"])]
    pub corr_tx_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModulationArgs {
    /// Preset: bpsk, qpsk or 8psk
    #[arg(long = "mod", conflicts_with_all = ["a", "b"])]
    pub preset: Option<String>,
    /// SER constant a (with --b)
    #[arg(long, requires = "b")]
    pub a: Option<f64>,
    /// SER constant b (with --a)
    #[arg(long, requires = "a")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Inclusive linear grid start:stop:points
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Add Monte-Carlo columns mc, mc_stderr
    #[arg(long)]
    pub mc: bool,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Parse { .. } => CliError::Usage(e.to_string()),
            Error::Convergence(_) | Error::Quadrature { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

/// Inclusive linear grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self, CliError> {
        if !(start.is_finite() && stop.is_finite()) || start >= stop {
            return Err(CliError::Usage(format!(
                "sweep needs finite start < stop, got {start}:{stop}"
            )));
        }
        if points < 2 {
            return Err(CliError::Usage(format!("sweep needs at least 2 points, got {points}")));
        }
        Ok(Self { start, stop, points })
    }

    /// A one-point "grid", for the single-value flags.
    fn single(x: f64) -> Result<Vec<f64>, CliError> {
        if x.is_nan() {
            return Err(CliError::Usage("evaluation point is NaN".into()));
        }
        Ok(vec![x])
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for SweepSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("sweep must look like start:stop:points, got '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, points] = parts[..] else {
            return Err(bad());
        };
        let start = start.trim().parse().map_err(|_| bad())?;
        let stop = stop.trim().parse().map_err(|_| bad())?;
        let points = points.trim().parse().map_err(|_| bad())?;
        Self::new(start, stop, points)
    }
}

/// One CSV row. `mc` holds `(estimate, std_error)` when simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub exact: f64,
    pub asymptotic: f64,
    pub mc: Option<(f64, f64)>,
}

/// Monte-Carlo settings for a curve command.
#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub trials: u64,
    pub seed: u64,
}

impl McArgs {
    fn options(&self) -> Result<Option<McOptions>, CliError> {
        if !self.mc {
            return Ok(None);
        }
        if self.trials == 0 {
            return Err(CliError::Usage("--trials must be positive".into()));
        }
        Ok(Some(McOptions {
            trials: self.trials,
            seed: self.seed,
        }))
    }
}

fn read_matrix(path: &PathBuf) -> Result<mrc_core::ComplexMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    read_matrix_csv(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl ChannelArgs {
    pub fn pair(&self) -> Result<CorrelationPair, CliError> {
        if self.corr_rx_file.is_some() || self.corr_tx_file.is_some() {
            let (Some(rx), Some(tx)) = (&self.corr_rx_file, &self.corr_tx_file) else {
                return Err(CliError::Usage(
                    "--corr-rx-file and --corr-tx-file must be given together".into(),
                ));
            };
            let (rx, tx) = (read_matrix(rx)?, read_matrix(tx)?);
            for (flag, given, actual) in [("--nr", self.nr, rx.rows()), ("--nt", self.nt, tx.rows())] {
                if given.is_some_and(|g| g != actual) {
                    return Err(CliError::Usage(format!(
                        "{flag} does not match the correlation file size {actual}"
                    )));
                }
            }
            return Ok(CorrelationPair::new(rx, tx)?);
        }
        let (Some(nr), Some(nt)) = (self.nr, self.nt) else {
            return Err(CliError::Usage(
                "--nr and --nt are required without correlation files".into(),
            ));
        };
        Ok(CorrelationPair::exponential(
            nr,
            nt,
            self.rho_rx.unwrap_or(0.0),
            self.rho_tx.unwrap_or(0.0),
        )?)
    }
}

impl ModulationArgs {
    pub fn modulation(&self) -> Result<Modulation, CliError> {
        match (&self.preset, self.a, self.b) {
            (_, Some(a), Some(b)) => Ok(Modulation::new("custom", a, b)?),
            (Some(name), _, _) => Ok(Modulation::preset(name)?),
            _ => Ok(Modulation::psk8()),
        }
    }
}

fn grid(sweep: &SweepArgs, single: Option<f64>, single_flag: &str) -> Result<Vec<f64>, CliError> {
    match (&sweep.sweep, single) {
        (Some(s), _) => Ok(s.parse::<SweepSpec>()?.grid()),
        (None, Some(x)) => SweepSpec::single(x),
        (None, None) => Err(CliError::Usage(format!("either --sweep or {single_flag} is required"))),
    }
}

/// Evaluates `f` at every grid point in parallel, keeping grid order.
fn evaluate<F>(grid: &[f64], f: F) -> Result<Vec<(f64, f64)>, CliError>
where
    F: Fn(f64) -> Result<(f64, f64), Error> + Sync,
{
    grid.par_iter().map(|&x| f(x).map_err(CliError::from)).collect()
}

fn assemble(grid: &[f64], values: Vec<(f64, f64)>, mc: Option<Vec<(f64, f64)>>) -> Vec<CurvePoint> {
    grid.iter()
        .zip(values)
        .enumerate()
        .map(|(i, (&x, (exact, asymptotic)))| CurvePoint {
            x,
            exact,
            asymptotic,
            mc: mc.as_ref().map(|m| m[i]),
        })
        .collect()
}

/// `λ_max` c.d.f. at each `x`.
pub fn cmd_cdf(pair: &CorrelationPair, grid: &[f64], mc: Option<McOptions>) -> Result<Vec<CurvePoint>, CliError> {
    if grid.iter().any(|&x| x < 0.0) {
        return Err(CliError::Usage("c.d.f. points must be nonnegative".into()));
    }
    let model = EigDistModel::new(pair.clone())?;
    let values = evaluate(grid, |x| Ok((model.exact_cdf_stable(x), model.asymptotic_cdf(x))))?;
    let mc = match mc {
        Some(o) => {
            let cfg = McConfig::new(pair.clone(), o.trials, o.seed)?;
            let mut order: Vec<usize> = (0..grid.len()).collect();
            order.sort_by(|&i, &j| grid[i].total_cmp(&grid[j]));
            let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();
            let f = empirical_cdf(&cfg, &sorted)?;
            let n = o.trials as f64;
            let mut out = vec![(0.0, 0.0); grid.len()];
            for (k, &i) in order.iter().enumerate() {
                out[i] = (f[k], (f[k] * (1.0 - f[k]) / n).sqrt());
            }
            Some(out)
        }
        None => None,
    };
    Ok(assemble(grid, values, mc))
}

/// Exact and high-SNR SER at each SNR in dB.
pub fn cmd_ser(
    pair: &CorrelationPair,
    modulation: &Modulation,
    snr_db: &[f64],
    mc: Option<McOptions>,
) -> Result<Vec<CurvePoint>, CliError> {
    let model = EigDistModel::new(pair.clone())?;
    let hs = high_snr_ser(&model, modulation);
    let values = evaluate(snr_db, |s| {
        Ok((exact_ser(&model, modulation, s)?, ser_asymptote_eval(&hs, s)))
    })?;
    let mc = match mc {
        Some(o) => {
            let cfg = McConfig::new(pair.clone(), o.trials, o.seed)?;
            Some(
                mc_ser_sweep(&cfg, modulation, snr_db)?
                    .iter()
                    .map(|r| (r.estimate, r.std_error))
                    .collect(),
            )
        }
        None => None,
    };
    Ok(assemble(snr_db, values, mc))
}

/// Exact and first-order outage at each threshold in dB, for a fixed SNR.
pub fn cmd_outage(
    pair: &CorrelationPair,
    snr_db: f64,
    gamma_th_db: &[f64],
    mc: Option<McOptions>,
) -> Result<Vec<CurvePoint>, CliError> {
    let model = EigDistModel::new(pair.clone())?;
    let values = evaluate(gamma_th_db, |g| {
        Ok((exact_outage(&model, snr_db, g)?, asymptotic_outage(&model, snr_db, g)?))
    })?;
    let mc = match mc {
        Some(o) => {
            let cfg = McConfig::new(pair.clone(), o.trials, o.seed)?;
            Some(
                mc_outage_sweep(&cfg, snr_db, gamma_th_db)?
                    .iter()
                    .map(|r| (r.estimate, r.std_error))
                    .collect(),
            )
        }
        None => None,
    };
    Ok(assemble(gamma_th_db, values, mc))
}

/// `(key, value)` pairs of the summary command.
pub fn cmd_summary(pair: &CorrelationPair, modulation: &Modulation) -> Result<Vec<(&'static str, String)>, CliError> {
    let model = EigDistModel::new(pair.clone())?;
    let hs = high_snr_ser(&model, modulation);
    Ok(vec![
        ("n", model.n().to_string()),
        ("m", model.m().to_string()),
        ("G_d", hs.diversity_order.to_string()),
        ("G_a", fmt_sig17(hs.array_gain)),
        ("alpha", fmt_sig17(model.alpha())),
        ("det_omega", fmt_sig17(model.det_omega())),
        ("det_sigma", fmt_sig17(model.det_sigma())),
        ("penalty", fmt_sig17(correlation_penalty(pair))),
        ("x_star", fmt_sig17(model.x_star())),
    ])
}

pub fn header(axis: &str, second: &str, third: &str, mc: bool) -> String {
    let mut h = format!("{axis},{second},{third}");
    if mc {
        h.push_str(",mc,mc_stderr");
    }
    h
}

pub fn format_row(p: &CurvePoint) -> String {
    let mut row = format!("{},{},{}", fmt_sig17(p.x), fmt_sig17(p.exact), fmt_sig17(p.asymptotic));
    if let Some((est, se)) = p.mc {
        row.push(',');
        row.push_str(&fmt_sig17(est));
        row.push(',');
        row.push_str(&fmt_sig17(se));
    }
    row
}

fn open_output(output: &OutputArgs) -> Result<Box<dyn Write>, CliError> {
    Ok(match &output.out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn write_curve(
    out: &mut dyn Write,
    head: String,
    body: impl FnOnce() -> Result<Vec<CurvePoint>, CliError>,
) -> Result<(), CliError> {
    writeln!(out, "{head}")?;
    out.flush()?;
    let rows = body()?;
    for r in &rows {
        writeln!(out, "{}", format_row(r))?;
    }
    out.flush()?;
    Ok(())
}

/// Runs a parsed command, writing to `--out` or standard output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Cdf { output, .. }
        | Command::Ser { output, .. }
        | Command::Outage { output, .. }
        | Command::Summary { output, .. } => {
            let mut out = open_output(output)?;
            execute_to(cli, &mut *out)
        }
    }
}

/// Runs a parsed command against an arbitrary writer. Curve commands always
/// write their header before validating the remaining flags.
pub fn execute_to(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Cdf {
            channel, x, sweep, mc, ..
        } => write_curve(out, header("x", "exact", "asymptotic", mc.mc), || {
            let grid = grid(sweep, *x, "--x")?;
            cmd_cdf(&channel.pair()?, &grid, mc.options()?)
        }),
        Command::Ser {
            channel,
            modulation,
            snr_db,
            sweep,
            mc,
            ..
        } => write_curve(out, header("snr_db", "exact", "asymptote", mc.mc), || {
            let grid = grid(sweep, *snr_db, "--snr-db")?;
            cmd_ser(&channel.pair()?, &modulation.modulation()?, &grid, mc.options()?)
        }),
        Command::Outage {
            channel,
            snr_db,
            gamma_th_db,
            sweep,
            mc,
            ..
        } => write_curve(out, header("gamma_th_db", "exact", "asymptotic", mc.mc), || {
            if !snr_db.is_finite() {
                return Err(CliError::Usage("--snr-db must be finite".into()));
            }
            let grid = grid(sweep, *gamma_th_db, "--gamma-th-db")?;
            cmd_outage(&channel.pair()?, *snr_db, &grid, mc.options()?)
        }),
        Command::Summary {
            channel, modulation, ..
        } => {
            for (k, v) in cmd_summary(&channel.pair()?, &modulation.modulation()?)? {
                writeln!(out, "{k}={v}")?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

/// Parses `args` and runs; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s: SweepSpec = "-10:30:41".parse().unwrap();
        assert_eq!(
            s,
            SweepSpec {
                start: -10.0,
                stop: 30.0,
                points: 41
            }
        );
        let g = s.grid();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], -10.0);
        assert_eq!(g[40], 30.0);
        assert!((g[20] - 10.0).abs() < 1e-12);
        for bad in ["1:0:5", "0:1:1", "0:1", "a:b:c", "0:1:2:3", "0:nan:3"] {
            assert!(bad.parse::<SweepSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn row_formatting() {
        let p = CurvePoint {
            x: 1.0,
            exact: 0.5,
            asymptotic: 1e-300,
            mc: Some((0.25, 0.0)),
        };
        assert_eq!(
            format_row(&p),
            "1.0000000000000000e0,5.0000000000000000e-1,1.0000000000000000e-300,2.5000000000000000e-1,0.0000000000000000e0"
        );
        assert_eq!(header("x", "exact", "asymptotic", false), "x,exact,asymptotic");
        assert_eq!(
            header("snr_db", "exact", "asymptote", true),
            "snr_db,exact,asymptote,mc,mc_stderr"
        );
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(CliError::from(Error::Validation("x".into())).exit_code(), 2);
        assert_eq!(
            CliError::from(Error::Quadrature {
                estimate: 0.0,
                error: 1.0
            })
            .exit_code(),
            1
        );
        assert_eq!(CliError::from(Error::Convergence("x".into())).exit_code(), 1);
    }

    #[test]
    fn modulation_selection() {
        let m = ModulationArgs {
            preset: None,
            a: None,
            b: None,
        };
        assert_eq!(m.modulation().unwrap(), Modulation::psk8());
        let m = ModulationArgs {
            preset: Some("bpsk".into()),
            a: None,
            b: None,
        };
        assert_eq!(m.modulation().unwrap(), Modulation::bpsk());
        let m = ModulationArgs {
            preset: None,
            a: Some(2.0),
            b: Some(0.3),
        };
        assert_eq!((m.modulation().unwrap().a, m.modulation().unwrap().b), (2.0, 0.3));
        let m = ModulationArgs {
            preset: None,
            a: Some(-2.0),
            b: Some(0.3),
        };
        assert_eq!(m.modulation().unwrap_err().exit_code(), 2);
    }
}
