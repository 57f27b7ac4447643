//! Batch front end behind the `amqd` binary.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 for a pole or
//! domain failure outside `sweep`, 1 for I/O failures.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{decode, encode, transmit_block};
use crate::error::AmqdError;
use crate::gaussian::draw_complex;
use crate::rng::{block_streams, stream_rng};
use crate::scenario::{Scenario, Setup};
use crate::stats;
use crate::ComplexGaussianVector;

#[derive(Debug, Parser)]
#[command(name = "amqd", version, about = "AMQD multicarrier CVQKD simulator and optimizer")]
pub struct Cli {
    /// Output format for row data.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo transmission of AMQD blocks.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long, env = "AMQD_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Exact and constant allocation plans, one row per sub-channel.
    Allocate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "AMQD_SEED")]
        seed: Option<u64>,
    },
    /// Figures of merit along a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "AMQD_SEED")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Transmittance,
    #[value(name = "W", alias = "w")]
    #[serde(rename = "W")]
    W,
    Snr,
    N,
    Crosstalk,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Transmittance => "transmittance",
            SweepParam::W => "W",
            SweepParam::Snr => "snr",
            SweepParam::N => "n",
            SweepParam::Crosstalk => "crosstalk",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(AmqdError),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<AmqdError> for CliError {
    fn from(e: AmqdError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

/// Parses the scenario file, reporting line and column on syntax or
/// schema errors.
pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut s = Scenario::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            trials,
        } => {
            let mut s = load_scenario(&config, seed)?;
            if let Some(t) = trials {
                s.trials = t;
            }
            run_simulate(&s, &out, cli.format)
        }
        Command::Allocate { config, out, seed } => run_allocate(&load_scenario(&config, seed)?, &out, cli.format),
        Command::Sweep {
            config,
            param,
            from,
            to,
            steps,
            out,
            seed,
        } => run_sweep(&load_scenario(&config, seed)?, param, from, to, steps, &out, cli.format),
    }
}

fn write_rows<T: Serialize>(rows: &[T], out: &Path, format: Format) -> Result<(), CliError> {
    let io = |e: &dyn fmt::Display| CliError::Io(format!("{}: {e}", out.display()));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(out).map_err(|e| io(&e))?;
            for r in rows {
                w.serialize(r).map_err(|e| io(&e))?;
            }
            w.flush().map_err(|e| io(&e))?;
        }
        Format::Json => {
            let mut text = serde_json::to_string_pretty(rows).map_err(|e| io(&e))?;
            text.push('\n');
            fs::write(out, text).map_err(|e| io(&e))?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, out: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(out, text).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

/// Path of the JSON summary written next to `out`.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
pub struct TrialRow {
    pub scenario_hash: String,
    pub seed: u64,
    pub trial: u64,
    pub tau: f64,
    pub decode_error: f64,
    pub output_power: f64,
    pub noise_power: f64,
}

#[derive(Debug, Serialize)]
pub struct ChannelCheck {
    pub channel: usize,
    pub expected_variance: f64,
    pub empirical_variance: f64,
    pub standard_error: f64,
    pub within_3se: bool,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub scenario_hash: String,
    pub seed: u64,
    pub n: usize,
    pub trials: u64,
    pub input_quadrature_variance: f64,
    pub tau_mean: f64,
    pub tau_standard_error: f64,
    pub tau_expected: f64,
    pub tau_within_3se: bool,
    pub max_decode_error: f64,
    pub channels: Vec<ChannelCheck>,
}

struct TrialOutcome {
    row: TrialRow,
    output_sq: Vec<f64>,
}

/// Block `j = 1..=trials`: Alice draws `z` with the single-carrier variance
/// on every subcarrier from stream `2j`, encodes, transmits, and Bob
/// decodes.
pub fn run_simulate(s: &Scenario, out: &Path, format: Format) -> Result<(), CliError> {
    let setup = s.setup()?;
    let hash = s.hash();
    let n = setup.n();
    let q = setup.single_carrier_variance;
    let channels = setup.channels.with_crosstalk_noise(&vec![q; n])?;
    let noise = channels.noise_variances();

    let outcomes: Vec<TrialOutcome> = (1..=s.trials)
        .into_par_iter()
        .map(|j| -> Result<TrialOutcome, AmqdError> {
            let mut rng = stream_rng(s.seed, block_streams(j).0);
            let z = ComplexGaussianVector::with_uniform(draw_complex(&mut rng, n, |_| q), q)?;
            let block = transmit_block(&encode(&z)?, &channels, s.seed, j)?;
            let z_hat = decode(&block.received()?)?;
            let expected: Vec<_> = channels
                .gains()
                .iter()
                .zip(z.samples())
                .zip(block.noise_draw.samples())
                .map(|((g, x), e)| g * x + e)
                .collect();
            let decode_error = z_hat
                .samples()
                .iter()
                .zip(&expected)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let output_sq: Vec<f64> = block.output.samples().iter().map(|y| y.norm_sqr()).collect();
            Ok(TrialOutcome {
                row: TrialRow {
                    scenario_hash: hash.clone(),
                    seed: s.seed,
                    trial: j,
                    tau: block.tau(),
                    decode_error,
                    output_power: output_sq.iter().sum(),
                    noise_power: block.noise_draw.norm_sqr(),
                },
                output_sq,
            })
        })
        .collect::<Result<_, _>>()?;

    let taus: Vec<f64> = outcomes.iter().map(|o| o.row.tau).collect();
    let (tau_mean, _) = stats::mean_var(&taus);
    let tau_se = stats::standard_error(&taus);
    let tau_expected = n as f64 * 2.0 * q;
    let gains = channels.gains_sq();
    let trials = outcomes.len() as f64;
    let checks = (0..n)
        .map(|i| {
            // |y_i|^2 / 2 estimates the quadrature variance; its SE follows
            // from the exponential law of |y_i|^2
            let expected = gains[i] * q + noise[i];
            let empirical = outcomes.iter().map(|o| o.output_sq[i]).sum::<f64>() / (2.0 * trials);
            let se = expected / trials.sqrt();
            ChannelCheck {
                channel: i,
                expected_variance: expected,
                empirical_variance: empirical,
                standard_error: se,
                within_3se: (empirical - expected).abs() <= 3.0 * se,
            }
        })
        .collect();
    let summary = SimulateSummary {
        scenario_hash: hash,
        seed: s.seed,
        n,
        trials: s.trials,
        input_quadrature_variance: q,
        tau_mean,
        tau_standard_error: tau_se,
        tau_expected,
        tau_within_3se: (tau_mean - tau_expected).abs() <= 3.0 * tau_se,
        max_decode_error: outcomes.iter().map(|o| o.row.decode_error).fold(0.0, f64::max),
        channels: checks,
    };
    let rows: Vec<TrialRow> = outcomes.into_iter().map(|o| o.row).collect();
    write_rows(&rows, out, format)?;
    write_json(&summary, &summary_path(out))
}

#[derive(Debug, Serialize)]
pub struct AllocationRow {
    pub scenario_hash: String,
    pub seed: u64,
    pub channel: usize,
    pub gain_sq: f64,
    pub nu: f64,
    pub nu_eve: f64,
    pub selected: bool,
    pub exact_variance: f64,
    pub constant_variance: f64,
    pub rate_exact: f64,
    pub rate_constant: f64,
    pub cut_index: usize,
}

pub fn run_allocate(s: &Scenario, out: &Path, format: Format) -> Result<(), CliError> {
    let e = s.setup()?.evaluate()?;
    let hash = s.hash();
    let exact = e.exact.assigned_variances();
    let constant = e.constant.assigned_variances();
    let rows: Vec<AllocationRow> = (0..e.gains_sq.len())
        .map(|i| AllocationRow {
            scenario_hash: hash.clone(),
            seed: s.seed,
            channel: i,
            gain_sq: e.gains_sq[i],
            nu: e.constant.nu[i],
            nu_eve: e.constant.nu_eve,
            selected: e.constant.is_selected(i),
            exact_variance: exact[i],
            constant_variance: constant[i],
            rate_exact: e.rate_exact,
            rate_constant: e.rate_constant,
            cut_index: e.constant.cut_index,
        })
        .collect();
    write_rows(&rows, out, format)
}

#[derive(Debug, Default, Serialize)]
pub struct SweepRow {
    pub scenario_hash: String,
    pub seed: u64,
    pub index: usize,
    pub param: String,
    pub value: f64,
    /// `ok`, or the failure class of the grid point.
    pub status: String,
    pub capacity_real: Option<f64>,
    pub capacity_complex: Option<f64>,
    pub snr: Option<f64>,
    pub rate_single: Option<f64>,
    pub rate_amqd: Option<f64>,
    pub efficiency_single: Option<f64>,
    pub efficiency_amqd: Option<f64>,
    pub mean_selected_gain_sq: Option<f64>,
    pub oneway_rr_hom: Option<f64>,
    pub oneway_dr_hom: Option<f64>,
    pub twoway_rr_hom: Option<f64>,
    pub twoway_dr_hom: Option<f64>,
    pub excess_noise_single: Option<f64>,
    pub excess_noise_amqd: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_ordered: Option<bool>,
    pub selected_count: Option<usize>,
    pub constant_variance: Option<f64>,
    pub chi_single: Option<f64>,
    pub chi_amqd: Option<f64>,
    pub crosstalk_leak: Option<f64>,
    pub chi_amqd_crosstalk: Option<f64>,
    pub crosstalk_increases_eve: Option<bool>,
    pub gap_covers_leak: Option<bool>,
    pub bounded_by_single: Option<bool>,
    pub key_rate_secure: Option<f64>,
    pub key_rate_collective: Option<f64>,
    pub message: String,
}

fn status_of(e: &AmqdError) -> &'static str {
    match e {
        AmqdError::Pole(_) => "pole",
        AmqdError::Domain(_) => "domain",
        AmqdError::InvalidDimension(_) | AmqdError::LengthMismatch { .. } => "invalid_dimension",
        AmqdError::IndexOutOfRange { .. } => "index_out_of_range",
        AmqdError::InvalidParameter(_) => "invalid_parameter",
    }
}

/// Grid `from + k (to - from) / (steps - 1)`.
pub fn grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| {
            if k + 1 == steps {
                to
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

fn setup_at(s: &Scenario, base: &Setup, param: SweepParam, v: f64) -> Result<Setup, AmqdError> {
    let mut setup = base.clone();
    match param {
        SweepParam::Transmittance => setup.set_transmittance(v)?,
        SweepParam::W => setup.set_w(v)?,
        SweepParam::Snr => setup.set_snr(v)?,
        SweepParam::Crosstalk => setup.set_crosstalk(v)?,
        SweepParam::N => {
            if !(v >= 1.0) || v.fract() != 0.0 {
                return Err(AmqdError::param(format!("n must be a positive integer, got {v}")));
            }
            let mut t = s.clone();
            t.n = v as usize;
            setup = t.setup()?;
        }
    }
    Ok(setup)
}

fn sweep_point(s: &Scenario, base: &Setup, param: SweepParam, index: usize, v: f64, hash: &str) -> SweepRow {
    let mut row = SweepRow {
        scenario_hash: hash.to_string(),
        seed: s.seed,
        index,
        param: param.name().to_string(),
        value: v,
        ..Default::default()
    };
    let full = setup_at(s, base, param, v).and_then(|setup| setup.full_report());
    match full {
        Err(e) => {
            row.status = status_of(&e).to_string();
            row.message = e.to_string();
        }
        Ok(f) => {
            let r = &f.report;
            row.status = "ok".into();
            row.capacity_real = Some(r.capacity_real);
            row.capacity_complex = Some(r.capacity_complex);
            row.snr = Some(r.snr);
            row.rate_single = Some(r.rate_single);
            row.rate_amqd = Some(r.rate_amqd);
            row.efficiency_single = Some(r.efficiency_single);
            row.efficiency_amqd = Some(r.efficiency_amqd);
            row.mean_selected_gain_sq = Some(r.mean_selected_gain_sq);
            row.oneway_rr_hom = Some(r.key_rates.oneway_rr_hom);
            row.oneway_dr_hom = Some(r.key_rates.oneway_dr_hom);
            row.twoway_rr_hom = Some(r.key_rates.twoway_rr_hom);
            row.twoway_dr_hom = Some(r.key_rates.twoway_dr_hom);
            row.excess_noise_single = Some(f.excess_noise_single);
            row.excess_noise_amqd = Some(f.excess_noise_amqd);
            row.kappa = Some(f.kappa.value);
            row.kappa_ordered = Some(f.kappa.ordered);
            row.selected_count = Some(f.evaluation.plan().selected.len());
            row.constant_variance = Some(f.evaluation.plan().constant_variance);
            row.chi_single = Some(f.ledger.chi_single);
            row.chi_amqd = Some(f.ledger.chi_amqd);
            row.crosstalk_leak = Some(f.ledger.crosstalk_leak);
            row.chi_amqd_crosstalk = Some(f.ledger.chi_amqd_crosstalk);
            row.crosstalk_increases_eve = Some(f.verdict.crosstalk_increases_eve);
            row.gap_covers_leak = Some(f.verdict.gap_covers_leak);
            row.bounded_by_single = Some(f.verdict.bounded_by_single);
            row.key_rate_secure = Some(f.verdict.key_rate);
            row.key_rate_collective = Some(f.verdict.key_rate_collective);
        }
    }
    row
}

/// Evaluates every grid point. Failing points are kept as rows whose
/// `status` names the failure; the run itself only fails on an invalid
/// base scenario or grid.
pub fn run_sweep(
    s: &Scenario,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
    out: &Path,
    format: Format,
) -> Result<(), CliError> {
    if steps < 2 {
        return Err(CliError::Config(format!("steps must be >= 2, got {steps}")));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(CliError::Config("sweep bounds must be finite".into()));
    }
    let base = s.setup()?;
    let hash = s.hash();
    let rows: Vec<SweepRow> = grid(from, to, steps)
        .into_par_iter()
        .enumerate()
        .map(|(k, v)| sweep_point(s, &base, param, k, v, &hash))
        .collect();
    write_rows(&rows, out, format)
}
