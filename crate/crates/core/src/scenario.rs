//! JSON scenario files and their evaluation.
//!
//! ```json
//! {
//!   "n": 8,
//!   "single_carrier_variance": 1.0,
//!   "transmittance": { "model": "ramp", "from": 0.95, "to": 0.3 },
//!   "noise_variances": 0.5,
//!   "eve": { "w": 1.5, "transmittances": 0.6 },
//!   "crosstalk": 0.0,
//!   "allocation": { "method": "constant", "nu_eve": "from_expected_transmittance" },
//!   "seed": 7,
//!   "trials": 1000
//! }
//! ```
//!
//! Transmittance values are magnitudes. With the default `"fourier"`
//! domain they are the sub-channel bin gains `|F(T)_i|`; with
//! `"subcarrier"` they are the per-subcarrier `|T_i|` and the bin gains are
//! their transform. Scalars broadcast to length `n`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::{self, constant_allocation, exact_waterfill, AllocationPlan};
use crate::channel::{symmetric_transmittance, CrosstalkMatrix, EveModel, SubChannelSet};
use crate::error::{check_len, AmqdError, Result};
use crate::rates::{
    self, excess_noise, kappa, ledger_from_gains, rate_report, security_check, EveGain, HolevoLedger, Kappa, NoiseMode,
    RateReport, ReportInputs, SecurityVerdict,
};
use crate::rng::stream_rng;

/// Stream used for seeded random transmittances, kept apart from the
/// per-block streams.
const TRANSMITTANCE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ScalarOrVec {
    pub fn broadcast(&self, n: usize, what: &'static str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(x) => Ok(vec![*x; n]),
            ScalarOrVec::Vector(v) => {
                check_len(what, n, v.len())?;
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrosstalkSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Default for CrosstalkSpec {
    fn default() -> Self {
        CrosstalkSpec::Scalar(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TransmittanceModel {
    Explicit { values: Vec<f64> },
    Constant { value: f64 },
    Ramp { from: f64, to: f64 },
    Random { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `T = |T| (1 + i) / sqrt 2`.
    #[default]
    Symmetric,
    /// `T = |T|`.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Fourier,
    Subcarrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmittanceSpec {
    #[serde(flatten)]
    pub model: TransmittanceModel,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EveSpec {
    pub w: f64,
    /// Magnitudes `|T_Eve,i|`.
    pub transmittances: ScalarOrVec,
    /// Single-carrier `|T_Eve|^2`; defaults to the mean of the squared
    /// magnitudes.
    #[serde(default)]
    pub single_gain_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    #[default]
    Constant,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuEveSource {
    Explicit(f64),
    #[default]
    FromExpectedTransmittance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub nu_eve: NuEveSource,
    /// Total variance budget for the exact plan; overrides `nu_eve` there.
    #[serde(default)]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateNoise {
    #[default]
    PerChannel,
    Aggregate,
}

fn default_trials() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub single_carrier_variance: f64,
    pub transmittance: TransmittanceSpec,
    pub noise_variances: ScalarOrVec,
    pub eve: EveSpec,
    #[serde(default)]
    pub crosstalk: CrosstalkSpec,
    #[serde(default)]
    pub allocation: AllocationSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Single-carrier `|T|^2`; defaults to the mean squared bin gain.
    #[serde(default)]
    pub single_gain_sq: Option<f64>,
    #[serde(default)]
    pub rate_noise: RateNoise,
}

impl Scenario {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn magnitudes(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let m = match &self.transmittance.model {
            TransmittanceModel::Explicit { values } => {
                check_len("transmittance values", n, values.len())?;
                values.clone()
            }
            TransmittanceModel::Constant { value } => vec![*value; n],
            TransmittanceModel::Ramp { from, to } => {
                if n == 1 {
                    vec![*from]
                } else {
                    (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect()
                }
            }
            TransmittanceModel::Random { lo, hi } => {
                if !(lo <= hi) {
                    return Err(AmqdError::param("random transmittance needs lo <= hi"));
                }
                let mut rng = stream_rng(self.seed, TRANSMITTANCE_STREAM);
                (0..n).map(|_| rng.random_range(*lo..=*hi)).collect()
            }
        };
        if let Some(x) = m.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(AmqdError::param(format!(
                "transmittance magnitude must lie in [0, 1], got {x}"
            )));
        }
        Ok(m)
    }

    /// Resolves the file into concrete channel, attack and plan inputs.
    pub fn setup(&self) -> Result<Setup> {
        let n = self.n;
        if n == 0 {
            return Err(AmqdError::dim("n must be >= 1"));
        }
        if self.trials == 0 {
            return Err(AmqdError::param("trials must be >= 1"));
        }
        if !(self.single_carrier_variance >= 0.0) {
            return Err(AmqdError::param("single_carrier_variance must be >= 0"));
        }
        let complex = |m: f64| -> Result<Complex64> {
            match self.transmittance.convention {
                Convention::Symmetric => symmetric_transmittance(m),
                Convention::Real => Ok(Complex64::new(m, 0.0)),
            }
        };
        let values: Vec<Complex64> = self.magnitudes()?.into_iter().map(complex).collect::<Result<_>>()?;
        let noise = self.noise_variances.broadcast(n, "noise variances")?;
        let crosstalk = match &self.crosstalk {
            CrosstalkSpec::Scalar(x) => CrosstalkMatrix::uniform(n, *x)?,
            CrosstalkSpec::Matrix(rows) => {
                check_len("crosstalk rows", n, rows.len())?;
                CrosstalkMatrix::from_rows(rows)?
            }
        };
        let channels = match self.transmittance.domain {
            Domain::Fourier => SubChannelSet::from_fourier_gains(values, noise, crosstalk)?,
            Domain::Subcarrier => SubChannelSet::new(values, noise, crosstalk)?,
        };
        let eve_t: Vec<Complex64> = self
            .eve
            .transmittances
            .broadcast(n, "Eve transmittances")?
            .into_iter()
            .map(symmetric_transmittance)
            .collect::<Result<_>>()?;
        let eve = EveModel::new(self.eve.w, eve_t)?;
        Setup::new(
            channels,
            eve,
            self.single_carrier_variance,
            self.single_gain_sq,
            self.eve.single_gain_sq,
            self.allocation.clone(),
            self.rate_noise,
        )
    }
}

/// A resolved scenario.
#[derive(Debug, Clone)]
pub struct Setup {
    pub channels: SubChannelSet,
    pub eve: EveModel,
    pub single_carrier_variance: f64,
    single_gain_sq: Option<f64>,
    eve_single_gain_sq: Option<f64>,
    pub allocation: AllocationSpec,
    pub rate_noise: RateNoise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub gains_sq: Vec<f64>,
    pub single_gain_sq: f64,
    pub exact: AllocationPlan,
    pub constant: AllocationPlan,
    /// The plan named by the scenario's method.
    pub method: Method,
    /// Effective sub-channel noise, crosstalk leakage included.
    pub effective_noise: Vec<f64>,
    pub rate_exact: f64,
    pub rate_constant: f64,
}

impl Evaluation {
    pub fn plan(&self) -> &AllocationPlan {
        match self.method {
            Method::Exact => &self.exact,
            Method::Constant => &self.constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullReport {
    pub evaluation: Evaluation,
    pub report: RateReport,
    pub excess_noise_single: f64,
    pub excess_noise_amqd: f64,
    pub kappa: Kappa,
    pub ledger: HolevoLedger,
    pub verdict: SecurityVerdict,
}

impl Setup {
    pub fn new(
        channels: SubChannelSet,
        eve: EveModel,
        single_carrier_variance: f64,
        single_gain_sq: Option<f64>,
        eve_single_gain_sq: Option<f64>,
        allocation: AllocationSpec,
        rate_noise: RateNoise,
    ) -> Result<Self> {
        check_len("Eve transmittances", channels.len(), eve.len())?;
        Ok(Self {
            channels,
            eve,
            single_carrier_variance,
            single_gain_sq,
            eve_single_gain_sq,
            allocation,
            rate_noise,
        })
    }

    pub fn n(&self) -> usize {
        self.channels.len()
    }

    /// Single-carrier `|T|^2`: the configured value or the mean bin gain.
    pub fn single_gain_sq(&self) -> f64 {
        self.single_gain_sq.unwrap_or_else(|| {
            let g = self.channels.gains_sq();
            g.iter().sum::<f64>() / g.len() as f64
        })
    }

    pub fn eve_single_gain_sq(&self) -> f64 {
        self.eve_single_gain_sq.unwrap_or_else(|| self.eve.mean_gain_sq())
    }

    /// Replaces the bin gains with `v * g_i / max g`; the single-carrier
    /// gain follows as their mean.
    pub fn set_transmittance(&mut self, v: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&v) {
            return Err(AmqdError::param(format!("transmittance must lie in [0, 1], got {v}")));
        }
        let base = self.channels.gains_sq();
        let max = base.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(AmqdError::Domain("all bin gains are zero".into()));
        }
        let gains = base.iter().map(|g| Complex64::new((v * g / max).sqrt(), 0.0)).collect();
        self.channels = SubChannelSet::from_fourier_gains(
            gains,
            self.channels.attack_noise_variances().to_vec(),
            self.channels.crosstalk().clone(),
        )?;
        self.single_gain_sq = None;
        Ok(())
    }

    pub fn set_w(&mut self, w: f64) -> Result<()> {
        self.eve = EveModel::new(w, self.eve.transmittances().to_vec())?;
        Ok(())
    }

    /// Sets the single-carrier variance so that `SNR = v`.
    pub fn set_snr(&mut self, v: f64) -> Result<()> {
        let g = self.single_gain_sq();
        if !(g > 0.0) {
            return Err(AmqdError::Domain("single-carrier gain is zero".into()));
        }
        if !(v >= 0.0) {
            return Err(AmqdError::param(format!("snr must be >= 0, got {v}")));
        }
        self.single_carrier_variance = v * self.channels.aggregate_noise() / g;
        Ok(())
    }

    pub fn set_crosstalk(&mut self, x: f64) -> Result<()> {
        let n = self.n();
        self.channels = rebuild_with_crosstalk(&self.channels, CrosstalkMatrix::uniform(n, x)?)?;
        Ok(())
    }

    fn nu_eve(&self, gains_sq: &[f64]) -> Result<f64> {
        match self.allocation.nu_eve {
            NuEveSource::Explicit(v) => Ok(v),
            NuEveSource::FromExpectedTransmittance => Ok(allocation::lambda_from_expected_transmittance(gains_sq)?.1),
        }
    }

    /// Allocation and multicarrier rates.
    pub fn evaluate(&self) -> Result<Evaluation> {
        let gains_sq = self.channels.gains_sq();
        let nu = allocation::nu_ratios(&self.channels, &gains_sq)?;
        let nu_eve = self.nu_eve(&gains_sq)?;
        let exact = exact_waterfill(&nu, nu_eve, self.allocation.budget)?;
        let constant = constant_allocation(&nu, nu_eve)?;
        let method = self.allocation.method;
        let chosen = match method {
            Method::Exact => &exact,
            Method::Constant => &constant,
        };
        let effective = self.channels.with_crosstalk_noise(&chosen.assigned_variances())?;
        let effective_noise = effective.noise_variances();
        let aggregate = effective.aggregate_noise();
        let mode = match self.rate_noise {
            RateNoise::PerChannel => NoiseMode::PerChannel(&effective_noise),
            RateNoise::Aggregate => NoiseMode::Aggregate(aggregate),
        };
        let rate_exact = rates::rate_amqd(&exact, &gains_sq, mode)?;
        let rate_constant = rates::rate_amqd(&constant, &gains_sq, mode)?;
        Ok(Evaluation {
            single_gain_sq: self.single_gain_sq(),
            gains_sq,
            exact,
            constant,
            method,
            effective_noise,
            rate_exact,
            rate_constant,
        })
    }

    /// Every figure of merit, including key rates and the Holevo checks.
    pub fn full_report(&self) -> Result<FullReport> {
        let evaluation = self.evaluate()?;
        let aggregate = evaluation.effective_noise.iter().sum::<f64>() / self.n() as f64;
        let mode = match self.rate_noise {
            RateNoise::PerChannel => NoiseMode::PerChannel(&evaluation.effective_noise),
            RateNoise::Aggregate => NoiseMode::Aggregate(aggregate),
        };
        let report = rate_report(&ReportInputs {
            single_carrier_variance: self.single_carrier_variance,
            single_gain_sq: evaluation.single_gain_sq,
            noise_variance: aggregate,
            plan: evaluation.plan(),
            fourier_gains_sq: &evaluation.gains_sq,
            noise_mode: mode,
            w: self.eve.w(),
        })?;
        let w = self.eve.w();
        let eve_single = self.eve_single_gain_sq();
        let excess_noise_single = excess_noise(w, EveGain::Single(eve_single))?;
        let amqd_mean = rates::eve_gain_sq(EveGain::Amqd(self.eve.transmittances()))?;
        let excess_noise_amqd = excess_noise(w, EveGain::Single(amqd_mean))?;
        let kappa = kappa(w, eve_single, amqd_mean)?;
        let ledger = ledger_from_gains(
            &self.channels,
            &self.eve,
            &evaluation.plan().selected,
            evaluation.single_gain_sq,
        )?;
        let verdict = security_check(&ledger);
        Ok(FullReport {
            evaluation,
            report,
            excess_noise_single,
            excess_noise_amqd,
            kappa,
            ledger,
            verdict,
        })
    }
}

fn rebuild_with_crosstalk(channels: &SubChannelSet, crosstalk: CrosstalkMatrix) -> Result<SubChannelSet> {
    SubChannelSet::from_fourier_gains(
        channels.gains().to_vec(),
        channels.attack_noise_variances().to_vec(),
        crosstalk,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> &'static str {
        r#"{
            "n": 4,
            "single_carrier_variance": 1.0,
            "transmittance": { "model": "explicit", "values": [0.9486832980505138, 0.8366600265340756, 0.6324555320336759, 0.31622776601683794], "convention": "real" },
            "noise_variances": 1.0,
            "eve": { "w": 2.0, "transmittances": 0.5 },
            "allocation": { "method": "constant", "nu_eve": { "explicit": 2.0 } },
            "rate_noise": "aggregate"
        }"#
    }

    #[test]
    fn worked_example_through_scenario() {
        let s = Scenario::from_json(base()).unwrap();
        let e = s.setup().unwrap().evaluate().unwrap();
        assert_eq!(e.constant.selected, vec![0, 1]);
        assert!((e.constant.constant_variance - (2.0 - 1.0 / 0.9)).abs() < 1e-12);
        assert!(e.rate_constant >= e.rate_exact);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Scenario::from_json(base()).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let text = base().replace("\"noise_variances\": 1.0", "\"noise_variances\": [1.0, 2.0]");
        let s = Scenario::from_json(&text).unwrap();
        assert!(matches!(s.setup(), Err(AmqdError::LengthMismatch { .. })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = base().replace("\"n\": 4", "\"n\": 4, \"bogus\": 1");
        assert!(Scenario::from_json(&text).is_err());
    }

    #[test]
    fn random_model_is_seeded() {
        let text = base().replace(
            r#""model": "explicit", "values": [0.9486832980505138, 0.8366600265340756, 0.6324555320336759, 0.31622776601683794]"#,
            r#""model": "random", "lo": 0.2, "hi": 0.9"#,
        );
        let s = Scenario::from_json(&text).unwrap();
        let a = s.setup().unwrap().channels.gains_sq();
        assert_eq!(a, s.setup().unwrap().channels.gains_sq());
        assert!(a.iter().all(|&g| (0.04..=0.81 + 1e-12).contains(&g)));
    }

    #[test]
    fn transmittance_override_scales_to_peak() {
        let s = Scenario::from_json(base()).unwrap();
        let mut setup = s.setup().unwrap();
        setup.set_transmittance(0.5).unwrap();
        let g = setup.channels.gains_sq();
        assert!((g[0] - 0.5).abs() < 1e-12);
        assert!((g[3] - 0.5 * 0.1 / 0.9).abs() < 1e-12);
    }
}
