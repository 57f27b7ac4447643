//! Modulation-variance allocation over the sub-channels: noise-to-gain
//! ratios, exact water-filling, the constant-variance algorithm and the
//! Monte Carlo `Omega` rate form.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::SubChannelSet;
use crate::error::{check_len, AmqdError, Result};
use crate::rng::stream_rng;

/// `nu_i = sigma2_N / g_i` with the aggregate noise of `channels`. A zero
/// gain yields `+inf`, which is never selectable.
pub fn nu_ratios(channels: &SubChannelSet, fourier_gains_sq: &[f64]) -> Result<Vec<f64>> {
    check_len("gains", channels.len(), fourier_gains_sq.len())?;
    nu_from_noise(channels.aggregate_noise(), fourier_gains_sq)
}

/// Same ratio with an explicit noise variance.
pub fn nu_from_noise(noise_variance: f64, fourier_gains_sq: &[f64]) -> Result<Vec<f64>> {
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(AmqdError::param(format!(
            "noise variance must be >= 0, got {noise_variance}"
        )));
    }
    if fourier_gains_sq.is_empty() {
        return Err(AmqdError::dim("at least one gain is required"));
    }
    fourier_gains_sq
        .iter()
        .map(|&g| {
            if !(0.0..=1.0 + 1e-12).contains(&g) {
                Err(AmqdError::param(format!("squared gain must lie in [0, 1], got {g}")))
            } else if g == 0.0 {
                Ok(f64::INFINITY)
            } else {
                Ok(noise_variance / g)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Exact,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub nu: Vec<f64>,
    pub nu_eve: f64,
    pub lambda: f64,
    /// Ascending channel indices with `nu_i < nu_eve`.
    pub selected: Vec<usize>,
    /// `nu_eve - min nu` when anything is selected, else 0.
    pub constant_variance: f64,
    /// `max(0, nu_eve - nu_i)`.
    pub per_channel_variance: Vec<f64>,
    pub kind: PlanKind,
    /// Number of channels the iterative cut settled on. Equals
    /// `selected.len()` for exact plans.
    pub cut_index: usize,
}

impl AllocationPlan {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected.binary_search(&i).is_ok()
    }

    /// Variance actually placed on each channel: the water-filling level for
    /// exact plans, the common `constant_variance` on the selected set for
    /// constant plans.
    pub fn assigned_variances(&self) -> Vec<f64> {
        match self.kind {
            PlanKind::Exact => self.per_channel_variance.clone(),
            PlanKind::Constant => (0..self.len())
                .map(|i| {
                    if self.is_selected(i) {
                        self.constant_variance
                    } else {
                        0.0
                    }
                })
                .collect(),
        }
    }

    /// Mean water-filling variance over the `l` selected channels.
    pub fn l_average(&self) -> f64 {
        if self.selected.is_empty() {
            return 0.0;
        }
        self.selected.iter().map(|&i| self.per_channel_variance[i]).sum::<f64>() / self.selected.len() as f64
    }

    /// Mean water-filling variance over all `n` channels.
    pub fn n_average(&self) -> f64 {
        self.per_channel_variance.iter().sum::<f64>() / self.len() as f64
    }

    /// Total variance placed by [`assigned_variances`](Self::assigned_variances).
    pub fn total_assigned(&self) -> f64 {
        self.assigned_variances().iter().sum()
    }
}

fn validate_nu(nu: &[f64]) -> Result<()> {
    if nu.is_empty() {
        return Err(AmqdError::dim("at least one channel is required"));
    }
    if let Some(v) = nu.iter().find(|v| !(**v > 0.0)) {
        return Err(AmqdError::param(format!("nu must be > 0, got {v}")));
    }
    Ok(())
}

fn validate_nu_eve(nu_eve: f64) -> Result<()> {
    if !(nu_eve > 0.0) || !nu_eve.is_finite() {
        return Err(AmqdError::param(format!("nu_eve must be finite and > 0, got {nu_eve}")));
    }
    Ok(())
}

fn min_nu(nu: &[f64]) -> f64 {
    nu.iter().copied().fold(f64::INFINITY, f64::min)
}

fn plan_at_level(nu: &[f64], level: f64) -> (Vec<usize>, Vec<f64>, f64) {
    let selected: Vec<usize> = (0..nu.len()).filter(|&i| nu[i] < level).collect();
    let per_channel = nu.iter().map(|&v| (level - v).max(0.0)).collect();
    let constant = if selected.is_empty() { 0.0 } else { level - min_nu(nu) };
    (selected, per_channel, constant)
}

/// Water-filling at level `nu_eve`, or, with a budget, at the level whose
/// allocations sum to the budget.
pub fn exact_waterfill(nu: &[f64], nu_eve: f64, budget: Option<f64>) -> Result<AllocationPlan> {
    validate_nu(nu)?;
    let level = match budget {
        None => {
            validate_nu_eve(nu_eve)?;
            nu_eve
        }
        Some(b) => {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(AmqdError::param(format!("budget must be finite and >= 0, got {b}")));
            }
            water_level(nu, b)?
        }
    };
    let (selected, per_channel_variance, constant_variance) = plan_at_level(nu, level);
    Ok(AllocationPlan {
        nu: nu.to_vec(),
        nu_eve: level,
        lambda: 1.0 / level,
        cut_index: selected.len(),
        selected,
        constant_variance,
        per_channel_variance,
        kind: PlanKind::Exact,
    })
}

/// Level `mu` with `sum max(0, mu - nu_i) = budget`. Bisection finds the
/// active set; the level is then solved exactly on it.
fn water_level(nu: &[f64], budget: f64) -> Result<f64> {
    let lo0 = min_nu(nu);
    if !lo0.is_finite() {
        return Err(AmqdError::param("every channel has zero gain"));
    }
    if budget == 0.0 {
        return Ok(lo0);
    }
    let fill = |mu: f64| nu.iter().map(|&v| (mu - v).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (lo0, lo0 + budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fill(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let active: Vec<f64> = nu.iter().copied().filter(|&v| v < mid).collect();
    let exact = (budget + active.iter().sum::<f64>()) / active.len() as f64;
    let consistent = active.iter().all(|&v| v < exact) && nu.iter().filter(|&&v| v >= mid).all(|&v| v >= exact);
    Ok(if consistent { exact } else { mid })
}

/// The constant-variance allocation.
///
/// Channels with `nu_i < nu_eve` are selected and each receives
/// `nu_eve - min nu`. The iterative cut over the ascending `nu` list
/// (shrink when `nu_{chi+1} >= sigma2_w + nu_1`, otherwise grow, with
/// `sigma2_w` the mean water-filling variance of the first `chi` channels)
/// runs until the cut repeats or `n` steps pass; its final value is kept in
/// `cut_index`.
pub fn constant_allocation(nu: &[f64], nu_eve: f64) -> Result<AllocationPlan> {
    validate_nu(nu)?;
    validate_nu_eve(nu_eve)?;
    let (selected, per_channel_variance, constant_variance) = plan_at_level(nu, nu_eve);
    let cut_index = iterate_cut(nu, nu_eve, selected.len());
    Ok(AllocationPlan {
        nu: nu.to_vec(),
        nu_eve,
        lambda: 1.0 / nu_eve,
        selected,
        constant_variance,
        per_channel_variance,
        kind: PlanKind::Constant,
        cut_index,
    })
}

fn iterate_cut(nu: &[f64], nu_eve: f64, start: usize) -> usize {
    if start == 0 {
        return 0;
    }
    let mut order: Vec<usize> = (0..nu.len()).collect();
    order.sort_by(|&a, &b| nu[a].total_cmp(&nu[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| nu[i]).collect();
    let n = sorted.len();

    let mut chi = start;
    let mut seen = vec![chi];
    for _ in 0..n {
        let mean_wf = sorted[..chi].iter().map(|&v| (nu_eve - v).max(0.0)).sum::<f64>() / chi as f64;
        let next = if chi < n { sorted[chi] } else { f64::INFINITY };
        let proposal = if next >= mean_wf + sorted[0] { chi - 1 } else { chi + 1 };
        let proposal = proposal.clamp(1, n);
        if seen.contains(&proposal) {
            return proposal;
        }
        seen.push(proposal);
        chi = proposal;
    }
    chi
}

/// `lambda = mean(g)` and `nu_eve = 1 / lambda` from expected squared gains.
pub fn lambda_from_expected_transmittance(expected_gains_sq: &[f64]) -> Result<(f64, f64)> {
    if expected_gains_sq.is_empty() {
        return Err(AmqdError::dim("expected gains must be non-empty"));
    }
    let mean = expected_gains_sq.iter().sum::<f64>() / expected_gains_sq.len() as f64;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(AmqdError::param(format!("mean expected gain must be > 0, got {mean}")));
    }
    Ok((mean, 1.0 / mean))
}

/// `sum_i log2(1 + v_i / nu_i)`, the rate objective written in `nu` form.
pub fn waterfill_objective(variances: &[f64], nu: &[f64]) -> Result<f64> {
    check_len("variances", nu.len(), variances.len())?;
    Ok(variances
        .iter()
        .zip(nu)
        .filter(|(v, _)| **v > 0.0)
        .map(|(v, n)| (1.0 + v / n).log2())
        .sum())
}

/// Random law of the squared sub-channel gains used by [`omega_rate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GainModel {
    /// Fixed gains.
    Deterministic { gains_sq: Vec<f64> },
    /// Each of `channels` gains is `high` with probability `p_high`, else `low`.
    TwoPoint {
        channels: usize,
        low: f64,
        high: f64,
        p_high: f64,
    },
    /// Each of `channels` gains is uniform on `[lo, hi]`.
    Uniform { channels: usize, lo: f64, hi: f64 },
}

impl GainModel {
    fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        match self {
            GainModel::Deterministic { gains_sq } => {
                if gains_sq.is_empty() || !gains_sq.iter().all(|&g| in_unit(g)) {
                    return Err(AmqdError::param("deterministic gains must be non-empty and in [0, 1]"));
                }
            }
            GainModel::TwoPoint {
                channels,
                low,
                high,
                p_high,
            } => {
                if *channels == 0 || !in_unit(*low) || !in_unit(*high) || low > high || !in_unit(*p_high) {
                    return Err(AmqdError::param(
                        "two-point model needs channels >= 1, 0 <= low <= high <= 1, p in [0, 1]",
                    ));
                }
            }
            GainModel::Uniform { channels, lo, hi } => {
                if *channels == 0 || !in_unit(*lo) || !in_unit(*hi) || lo > hi {
                    return Err(AmqdError::param(
                        "uniform model needs channels >= 1 and 0 <= lo <= hi <= 1",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Largest attainable gain sum.
    pub fn max_sum(&self) -> f64 {
        match self {
            GainModel::Deterministic { gains_sq } => gains_sq.iter().sum(),
            GainModel::TwoPoint { channels, high, .. } => *channels as f64 * high,
            GainModel::Uniform { channels, hi, .. } => *channels as f64 * hi,
        }
    }

    fn draw_sum<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            GainModel::Deterministic { gains_sq } => gains_sq.iter().sum(),
            GainModel::TwoPoint {
                channels,
                low,
                high,
                p_high,
            } => (0..*channels)
                .map(|_| if rng.random::<f64>() < *p_high { *high } else { *low })
                .sum(),
            GainModel::Uniform { channels, lo, hi } => (0..*channels).map(|_| rng.random_range(*lo..=*hi)).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaRate {
    pub omega: f64,
    pub rate: f64,
    pub max_sum: f64,
    pub hits: u64,
    pub trials: u64,
    /// Set when no trial reached the maximum; `rate` is then 0.
    pub never_hit: bool,
}

/// Estimates `Omega`, the probability that the realised gain sum reaches
/// its maximum to within `tolerance`, and the rate
/// `Omega log2(1 + max_sum / Omega * snr)`. Trial `k` uses its own stream.
pub fn omega_rate(model: &GainModel, trials: u64, snr: f64, seed: u64, tolerance: f64) -> Result<OmegaRate> {
    model.validate()?;
    if trials == 0 {
        return Err(AmqdError::param("trials must be >= 1"));
    }
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(AmqdError::param(format!("snr must be >= 0, got {snr}")));
    }
    if !(tolerance >= 0.0) {
        return Err(AmqdError::param("tolerance must be >= 0"));
    }
    let max_sum = model.max_sum();
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            u64::from(model.draw_sum(&mut rng) >= max_sum - tolerance)
        })
        .sum();
    let omega = hits as f64 / trials as f64;
    let rate = if hits == 0 {
        0.0
    } else {
        omega * (1.0 + max_sum / omega * snr).log2()
    };
    Ok(OmegaRate {
        omega,
        rate,
        max_sum,
        hits,
        trials,
        never_hit: hits == 0,
    })
}
