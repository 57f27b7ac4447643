//! Capacities, single-carrier and multicarrier rates, efficiency, excess
//! noise, the homodyne key rates and Eve's Holevo bookkeeping under
//! crosstalk.
//!
//! All rates are in bits with `0 log2 0 = 0`. Pole conditions raise
//! [`AmqdError::Pole`] instead of returning infinities, and negative key
//! rates are returned unclamped.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::allocation::{constant_allocation, AllocationPlan};
use crate::channel::{crosstalk_info, EveModel, SubChannelSet};
use crate::cvqft;
use crate::error::{check_len, AmqdError, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Real,
    Complex,
}

fn check_variance(v: f64, what: &str) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(AmqdError::param(format!("{what} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_gain(g: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&g) {
        return Err(AmqdError::param(format!("squared gain must lie in [0, 1], got {g}")));
    }
    Ok(())
}

fn check_noise(noise: f64) -> Result<()> {
    if !(noise > 0.0) || !noise.is_finite() {
        return Err(AmqdError::param(format!("noise variance must be > 0, got {noise}")));
    }
    Ok(())
}

/// `SNR = sigma2_w |T|^2 / sigma2_N`.
pub fn snr(modulation_variance: f64, gain_sq: f64, noise_variance: f64) -> Result<f64> {
    check_variance(modulation_variance, "modulation variance")?;
    check_gain(gain_sq)?;
    check_noise(noise_variance)?;
    Ok(modulation_variance * gain_sq / noise_variance)
}

/// AWGN capacity, `1/2 log2(1 + SNR)` per real dimension and
/// `log2(1 + SNR)` per complex dimension.
pub fn capacity(modulation_variance: f64, gain_sq: f64, noise_variance: f64, dimension: Dimension) -> Result<f64> {
    let c = (1.0 + snr(modulation_variance, gain_sq, noise_variance)?).log2();
    Ok(match dimension {
        Dimension::Real => 0.5 * c,
        Dimension::Complex => c,
    })
}

/// Single-carrier rate, the complex-dimension capacity.
pub fn rate_single(modulation_variance: f64, gain_sq: f64, noise_variance: f64) -> Result<f64> {
    capacity(modulation_variance, gain_sq, noise_variance, Dimension::Complex)
}

/// Noise denominator used by [`rate_amqd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode<'a> {
    /// One `sigma2_N` for every sub-channel.
    Aggregate(f64),
    /// `sigma2_N_i` per sub-channel.
    PerChannel(&'a [f64]),
}

/// `sum_{i in selected} log2(1 + sigma2_w_i |F(T_i)|^2 / sigma2_N)` with
/// the plan's assigned variances.
pub fn rate_amqd(plan: &AllocationPlan, fourier_gains_sq: &[f64], noise: NoiseMode<'_>) -> Result<f64> {
    check_len("gains", plan.len(), fourier_gains_sq.len())?;
    if let NoiseMode::PerChannel(v) = noise {
        check_len("noise variances", plan.len(), v.len())?;
    }
    let variances = plan.assigned_variances();
    let mut total = 0.0;
    for &i in &plan.selected {
        let noise_i = match noise {
            NoiseMode::Aggregate(v) => v,
            NoiseMode::PerChannel(v) => v[i],
        };
        total += capacity(variances[i], fourier_gains_sq[i], noise_i, Dimension::Complex)?;
    }
    Ok(total)
}

/// `eta = 2 R / sigma2`.
pub fn efficiency(rate: f64, modulation_variance: f64) -> Result<f64> {
    if !(modulation_variance > 0.0) || !modulation_variance.is_finite() {
        return Err(AmqdError::param(format!(
            "modulation variance must be > 0, got {modulation_variance}"
        )));
    }
    Ok(2.0 * rate / modulation_variance)
}

/// Constant sub-channel variance that carries the single-carrier received
/// power: `sigma2_w0 |T|^2 / mean_l |F(T_i)|^2`.
pub fn matching_constant_variance(
    single_carrier_variance: f64,
    single_gain_sq: f64,
    selected_gains_sq: &[f64],
) -> Result<f64> {
    check_variance(single_carrier_variance, "single-carrier variance")?;
    check_gain(single_gain_sq)?;
    if selected_gains_sq.is_empty() {
        return Err(AmqdError::dim("no selected sub-channels"));
    }
    let mean = selected_gains_sq.iter().sum::<f64>() / selected_gains_sq.len() as f64;
    if !(mean > 0.0) {
        return Err(AmqdError::param("selected gains have zero mean"));
    }
    Ok(single_carrier_variance * single_gain_sq / mean)
}

/// Eve's gain as seen by the excess-noise formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EveGain<'a> {
    /// `|T_Eve|^2` directly.
    Single(f64),
    /// Per-sub-channel `T_Eve,i`; the formula uses `(1/n) sum |F(T_Eve,i)|^2`.
    Amqd(&'a [Complex64]),
}

fn check_w(w: f64) -> Result<()> {
    if !(w >= 1.0) || !w.is_finite() {
        return Err(AmqdError::param(format!("W must be finite and >= 1, got {w}")));
    }
    Ok(())
}

fn check_eve_gain(g: f64) -> Result<()> {
    if g >= 1.0 {
        return Err(AmqdError::Pole(format!(
            "Eve gain {g} at or above the pole |T_Eve|^2 = 1"
        )));
    }
    if !(g > 0.0) {
        return Err(AmqdError::param(format!("Eve gain must be > 0, got {g}")));
    }
    Ok(())
}

/// Resolves [`EveGain`] to the scalar mean squared gain.
pub fn eve_gain_sq(gain: EveGain<'_>) -> Result<f64> {
    match gain {
        EveGain::Single(g) => Ok(g),
        EveGain::Amqd(t) => {
            let g = cvqft::fourier_gains_sq(t)?;
            Ok(g.iter().sum::<f64>() / g.len() as f64)
        }
    }
}

/// `N = (W - 1) g / (1 - g)`.
pub fn excess_noise(w: f64, gain: EveGain<'_>) -> Result<f64> {
    check_w(w)?;
    let g = eve_gain_sq(gain)?;
    check_eve_gain(g)?;
    Ok((w - 1.0) * g / (1.0 - g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
    /// Whether the AMQD mean gain is at most the single-carrier gain. When
    /// false the returned value is below 1.
    pub ordered: bool,
}

/// `N_single / N_AMQD`. The `W - 1` factors cancel, so the ratio is
/// evaluated as `s (1 - a) / (a (1 - s))`, which also covers `W = 1`.
pub fn kappa(w: f64, single_gain_sq: f64, amqd_gain_sq_mean: f64) -> Result<Kappa> {
    check_w(w)?;
    check_eve_gain(single_gain_sq)?;
    check_eve_gain(amqd_gain_sq_mean)?;
    let (s, a) = (single_gain_sq, amqd_gain_sq_mean);
    let value = if s == a { 1.0 } else { s * (1.0 - a) / (a * (1.0 - s)) };
    Ok(Kappa { value, ordered: a <= s })
}

fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `((W+1)/2) log2((W+1)/2) - ((W-1)/2) log2((W-1)/2)`.
pub fn thermal_entropy(w: f64) -> Result<f64> {
    check_w(w)?;
    Ok(xlog2x((w + 1.0) / 2.0) - xlog2x((w - 1.0) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyRateVariant {
    OnewayRrHom,
    OnewayDrHom,
    TwowayRrHom,
    TwowayDrHom,
}

impl KeyRateVariant {
    pub const ALL: [KeyRateVariant; 4] = [
        KeyRateVariant::OnewayRrHom,
        KeyRateVariant::OnewayDrHom,
        KeyRateVariant::TwowayRrHom,
        KeyRateVariant::TwowayDrHom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KeyRateVariant::OnewayRrHom => "oneway_rr_hom",
            KeyRateVariant::OnewayDrHom => "oneway_dr_hom",
            KeyRateVariant::TwowayRrHom => "twoway_rr_hom",
            KeyRateVariant::TwowayDrHom => "twoway_dr_hom",
        }
    }
}

/// Key rate split into its leading log term and the subtracted entropies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateTerms {
    pub mutual_info: f64,
    pub holevo_eve: f64,
}

impl KeyRateTerms {
    pub fn rate(&self) -> f64 {
        self.mutual_info - self.holevo_eve
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(AmqdError::param(format!("mean gain must lie in [0, 1], got {t}")));
    }
    if t == 0.0 || t == 1.0 {
        return Err(AmqdError::Pole(format!("key rate has a pole at mean gain {t}")));
    }
    Ok(())
}

/// `(b, e)` with `b = (1 - t) W + t` and `e = (1 - t) + t W`.
fn b_e(t: f64, w: f64) -> (f64, f64) {
    ((1.0 - t) * w + t, (1.0 - t) + t * w)
}

/// Per-dimension homodyne key rate at mean sub-channel gain `t` and
/// ancilla variance `w`.
pub fn key_rate_terms(variant: KeyRateVariant, t: f64, w: f64) -> Result<KeyRateTerms> {
    check_w(w)?;
    check_t(t)?;
    let thermal = thermal_entropy(w)?;
    let (b, e) = b_e(t, w);
    let terms = match variant {
        KeyRateVariant::OnewayRrHom => KeyRateTerms {
            mutual_info: 0.5 * (t * e / ((1.0 - t) * b)).log2(),
            holevo_eve: thermal_entropy((w * b / e).sqrt())? + thermal,
        },
        KeyRateVariant::OnewayDrHom => KeyRateTerms {
            mutual_info: 0.5 * (w / ((1.0 - t) * b)).log2(),
            holevo_eve: thermal,
        },
        KeyRateVariant::TwowayRrHom => KeyRateTerms {
            mutual_info: 0.5 * ((1.0 - t + t * t) / ((1.0 - t) * (1.0 - t))).log2(),
            holevo_eve: thermal,
        },
        KeyRateVariant::TwowayDrHom => KeyRateTerms {
            mutual_info: 0.5 * (t / ((1.0 - t) * (1.0 - t))).log2(),
            holevo_eve: thermal,
        },
    };
    Ok(terms)
}

pub fn key_rate(variant: KeyRateVariant, t: f64, w: f64) -> Result<f64> {
    Ok(key_rate_terms(variant, t, w)?.rate())
}

/// Eve's Holevo information on a sub-channel of gain `t`: the entropies
/// subtracted in the one-way reverse-reconciliation rate.
pub fn eve_holevo(t: f64, w: f64) -> Result<f64> {
    Ok(key_rate_terms(KeyRateVariant::OnewayRrHom, t, w)?.holevo_eve)
}

/// Alice-Bob Holevo information of a sub-channel of gain `t`,
/// `1/2 log2(W / ((1 - t) b))`, which is non-negative on `[0, 1)`.
pub fn ab_holevo(t: f64, w: f64) -> Result<f64> {
    check_w(w)?;
    if !(0.0..1.0).contains(&t) {
        if t == 1.0 {
            return Err(AmqdError::Pole("Alice-Bob information has a pole at gain 1".into()));
        }
        return Err(AmqdError::param(format!("gain must lie in [0, 1), got {t}")));
    }
    let (b, _) = b_e(t, w);
    Ok(0.5 * (w / ((1.0 - t) * b)).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRates {
    pub oneway_rr_hom: f64,
    pub oneway_dr_hom: f64,
    pub twoway_rr_hom: f64,
    pub twoway_dr_hom: f64,
}

impl KeyRates {
    pub fn evaluate(t: f64, w: f64) -> Result<Self> {
        Ok(Self {
            oneway_rr_hom: key_rate(KeyRateVariant::OnewayRrHom, t, w)?,
            oneway_dr_hom: key_rate(KeyRateVariant::OnewayDrHom, t, w)?,
            twoway_rr_hom: key_rate(KeyRateVariant::TwowayRrHom, t, w)?,
            twoway_dr_hom: key_rate(KeyRateVariant::TwowayDrHom, t, w)?,
        })
    }

    pub fn get(&self, variant: KeyRateVariant) -> f64 {
        match variant {
            KeyRateVariant::OnewayRrHom => self.oneway_rr_hom,
            KeyRateVariant::OnewayDrHom => self.oneway_dr_hom,
            KeyRateVariant::TwowayRrHom => self.twoway_rr_hom,
            KeyRateVariant::TwowayDrHom => self.twoway_dr_hom,
        }
    }
}

/// Mean of the squared gains over the plan's selected channels.
pub fn selected_mean_gain(plan: &AllocationPlan, fourier_gains_sq: &[f64]) -> Result<f64> {
    check_len("gains", plan.len(), fourier_gains_sq.len())?;
    if plan.selected.is_empty() {
        return Err(AmqdError::Domain("no sub-channel is selected".into()));
    }
    Ok(plan.selected.iter().map(|&i| fourier_gains_sq[i]).sum::<f64>() / plan.selected.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub capacity_real: f64,
    pub capacity_complex: f64,
    pub snr: f64,
    pub rate_single: f64,
    pub rate_amqd: f64,
    pub efficiency_single: f64,
    pub efficiency_amqd: f64,
    /// Mean squared gain over the selected sub-channels.
    pub mean_selected_gain_sq: f64,
    pub key_rates: KeyRates,
}

pub struct ReportInputs<'a> {
    pub single_carrier_variance: f64,
    pub single_gain_sq: f64,
    pub noise_variance: f64,
    pub plan: &'a AllocationPlan,
    pub fourier_gains_sq: &'a [f64],
    pub noise_mode: NoiseMode<'a>,
    pub w: f64,
}

/// Every figure of merit for one configuration. The multicarrier
/// efficiency uses the mean assigned variance over the selected set and is
/// 0 when nothing is selected.
pub fn rate_report(inputs: &ReportInputs<'_>) -> Result<RateReport> {
    let s0 = inputs.single_carrier_variance;
    let rate_single = rate_single(s0, inputs.single_gain_sq, inputs.noise_variance)?;
    let rate_amqd = rate_amqd(inputs.plan, inputs.fourier_gains_sq, inputs.noise_mode)?;
    let assigned = inputs.plan.assigned_variances();
    let l = inputs.plan.selected.len();
    let efficiency_amqd = if l == 0 {
        0.0
    } else {
        let mean_var = inputs.plan.selected.iter().map(|&i| assigned[i]).sum::<f64>() / l as f64;
        efficiency(rate_amqd, mean_var)?
    };
    let t = selected_mean_gain(inputs.plan, inputs.fourier_gains_sq)?;
    Ok(RateReport {
        capacity_real: capacity(s0, inputs.single_gain_sq, inputs.noise_variance, Dimension::Real)?,
        capacity_complex: capacity(s0, inputs.single_gain_sq, inputs.noise_variance, Dimension::Complex)?,
        snr: snr(s0, inputs.single_gain_sq, inputs.noise_variance)?,
        rate_single,
        rate_amqd,
        efficiency_single: efficiency(rate_single, s0)?,
        efficiency_amqd,
        mean_selected_gain_sq: t,
        key_rates: KeyRates::evaluate(t, inputs.w)?,
    })
}

/// Holevo quantities feeding the ledger.
pub struct HolevoInputs<'a> {
    /// `chi(A_j : B_j)` on every sub-channel.
    pub ab_holevo: &'a [f64],
    /// `chi(B : E)` on every sub-channel.
    pub eve_holevo: &'a [f64],
    /// The `l` sub-channels in use.
    pub selected: &'a [usize],
    pub chi_single: f64,
    pub mutual_info: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolevoLedger {
    pub chi_single: f64,
    /// Mean of Eve's per-channel Holevo information over the used channels.
    pub chi_amqd: f64,
    /// `|T_Eve|^2 * gamma_mean`.
    pub crosstalk_leak: f64,
    /// `chi_amqd + crosstalk_leak`.
    pub chi_amqd_crosstalk: f64,
    pub mutual_info: f64,
    /// Mean `chi(A_j : B_j)` over the used channels.
    pub ab_holevo: f64,
    /// `(1/n) sum_i gamma(N_i)` over all channels.
    pub gamma_mean: f64,
    pub eve_gain_sq: f64,
}

pub fn holevo_ledger(channels: &SubChannelSet, eve: &EveModel, inputs: &HolevoInputs<'_>) -> Result<HolevoLedger> {
    let n = channels.len();
    check_len("Alice-Bob Holevo values", n, inputs.ab_holevo.len())?;
    check_len("Eve Holevo values", n, inputs.eve_holevo.len())?;
    check_len("Eve transmittances", n, eve.len())?;
    if inputs.selected.is_empty() {
        return Err(AmqdError::Domain("no sub-channel is selected".into()));
    }
    if let Some(&i) = inputs.selected.iter().find(|&&i| i >= n) {
        return Err(AmqdError::IndexOutOfRange { index: i, len: n });
    }
    let l = inputs.selected.len() as f64;
    let chi_amqd = inputs.selected.iter().map(|&i| inputs.eve_holevo[i]).sum::<f64>() / l;
    let ab = inputs.selected.iter().map(|&i| inputs.ab_holevo[i]).sum::<f64>() / l;
    let mut gamma_total = 0.0;
    for i in 0..n {
        gamma_total += crosstalk_info(channels, inputs.ab_holevo, i)?;
    }
    let gamma_mean = gamma_total / n as f64;
    let eve_gain_sq = eve.mean_gain_sq();
    let crosstalk_leak = eve_gain_sq * gamma_mean;
    Ok(HolevoLedger {
        chi_single: inputs.chi_single,
        chi_amqd,
        crosstalk_leak,
        chi_amqd_crosstalk: chi_amqd + crosstalk_leak,
        mutual_info: inputs.mutual_info,
        ab_holevo: ab,
        gamma_mean,
        eve_gain_sq,
    })
}

/// Builds the ledger from the key-rate decomposition: per-channel gains
/// `t_i = |F(T_i)|^2` give `chi(B:E)` and `chi(A:B)`, the single-carrier
/// gain gives `chi_single`, and `I(A:B)` is the mean leading log term of
/// the one-way reverse-reconciliation rate over the used channels.
pub fn ledger_from_gains(
    channels: &SubChannelSet,
    eve: &EveModel,
    selected: &[usize],
    single_gain_sq: f64,
) -> Result<HolevoLedger> {
    let w = eve.w();
    let gains = channels.gains_sq();
    let ab: Vec<f64> = gains.iter().map(|&t| ab_holevo(t.min(1.0), w)).collect::<Result<_>>()?;
    let mut eve_h = vec![0.0; gains.len()];
    let mut mi = 0.0;
    for &i in selected {
        let terms = key_rate_terms(
            KeyRateVariant::OnewayRrHom,
            *gains.get(i).ok_or(AmqdError::IndexOutOfRange {
                index: i,
                len: gains.len(),
            })?,
            w,
        )?;
        eve_h[i] = terms.holevo_eve;
        mi += terms.mutual_info;
    }
    let mutual_info = if selected.is_empty() {
        0.0
    } else {
        mi / selected.len() as f64
    };
    holevo_ledger(
        channels,
        eve,
        &HolevoInputs {
            ab_holevo: &ab,
            eve_holevo: &eve_h,
            selected,
            chi_single: eve_holevo(single_gain_sq, w)?,
            mutual_info,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityVerdict {
    /// `chi_amqd < chi_amqd_crosstalk` when crosstalk is present; true
    /// without crosstalk.
    pub crosstalk_increases_eve: bool,
    /// `chi_amqd_crosstalk <= chi_single`.
    pub bounded_by_single: bool,
    /// `chi_single - chi_amqd >= crosstalk_leak`.
    pub gap_covers_leak: bool,
    /// `I(A:B) - chi_amqd_crosstalk`.
    pub key_rate: f64,
    /// `chi(A:B) - chi_amqd_crosstalk`.
    pub key_rate_collective: f64,
}

impl SecurityVerdict {
    pub fn all_hold(&self) -> bool {
        self.crosstalk_increases_eve && self.bounded_by_single && self.gap_covers_leak
    }
}

pub fn security_check(ledger: &HolevoLedger) -> SecurityVerdict {
    let crosstalk_increases_eve = if ledger.gamma_mean > 0.0 {
        ledger.chi_amqd < ledger.chi_amqd_crosstalk
    } else {
        true
    };
    SecurityVerdict {
        crosstalk_increases_eve,
        bounded_by_single: ledger.chi_amqd_crosstalk <= ledger.chi_single,
        gap_covers_leak: ledger.chi_single - ledger.chi_amqd >= ledger.crosstalk_leak,
        key_rate: ledger.mutual_info - ledger.chi_amqd_crosstalk,
        key_rate_collective: ledger.ab_holevo - ledger.chi_amqd_crosstalk,
    }
}

/// Continuum form of the multicarrier rate.
///
/// Sub-channel gains follow a non-increasing profile `gain(x)` on
/// `x in [0, X]`, `X = |T|^2 / 2`. With `n` sub-channels placed at
/// `x_i = i X / n` and the constant plan at `nu_eve`, `(X / n) R_AMQD`
/// is a left Riemann sum of
/// `log2(1 + sigma2_w gain(x) / sigma2_N) 1[sigma2_N / gain(x) < nu_eve]`.
pub struct IntegralLimit<G: Fn(f64) -> f64> {
    pub gain: G,
    pub single_gain_sq: f64,
    pub noise_variance: f64,
    pub nu_eve: f64,
}

impl<G: Fn(f64) -> f64> IntegralLimit<G> {
    pub fn upper(&self) -> f64 {
        0.5 * self.single_gain_sq
    }

    fn constant_variance(&self) -> f64 {
        (self.nu_eve - self.noise_variance / (self.gain)(0.0)).max(0.0)
    }

    pub fn discretized(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(AmqdError::dim("n must be >= 1"));
        }
        let x_max = self.upper();
        let gains: Vec<f64> = (0..n).map(|i| (self.gain)(i as f64 * x_max / n as f64)).collect();
        let nu = crate::allocation::nu_from_noise(self.noise_variance, &gains)?;
        let plan = constant_allocation(&nu, self.nu_eve)?;
        let r = rate_amqd(&plan, &gains, NoiseMode::Aggregate(self.noise_variance))?;
        Ok(r * x_max / n as f64)
    }

    pub fn integral(&self, tol: f64) -> f64 {
        let s = self.constant_variance();
        let f = |x: f64| {
            let g = (self.gain)(x);
            if g > 0.0 && self.noise_variance / g < self.nu_eve {
                (1.0 + s * g / self.noise_variance).log2()
            } else {
                0.0
            }
        };
        // split at the selection edge so the integrand is smooth on each piece
        let edge = bisect_edge(&self.gain, self.noise_variance / self.nu_eve, 0.0, self.upper());
        stats::integrate(&f, 0.0, edge, tol) + stats::integrate(&f, edge, self.upper(), tol)
    }
}

/// Largest `x` in `[a, b]` with `gain(x) > threshold` for a non-increasing
/// profile, to bisection precision.
fn bisect_edge<G: Fn(f64) -> f64>(gain: &G, threshold: f64, a: f64, b: f64) -> f64 {
    if gain(b) > threshold {
        return b;
    }
    if gain(a) <= threshold {
        return a;
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gain(mid) > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
