//! Parallel Gaussian sub-channels, AMQD block transmission, the entangling
//! cloner second-moment model and crosstalk bookkeeping.
//!
//! Sub-channel `i` is Fourier bin `i`: Alice's subcarriers `d = F^-1(z)`
//! travel through the physical channel, and after Bob's forward transform
//! bin `i` sees gain `F(T)_i` and additive noise of quadrature variance
//! `sigma2_N_i`:
//!
//! ```text
//! y_i = F(T)_i * F(d)_i + F(Delta)_i
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cvqft::{self, Direction};
use crate::error::{check_len, AmqdError, Result};
use crate::gaussian::{draw_complex, ComplexGaussianVector, QuadratureVariance};
use crate::rng::{block_streams, stream_rng};

const BOUND_TOL: f64 = 1e-12;

/// Symmetric-quadrature transmittance `|T| (1 + i) / sqrt 2`, i.e. equal
/// position and momentum transmission.
pub fn symmetric_transmittance(magnitude: f64) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&magnitude) {
        return Err(AmqdError::param(format!("|T| must lie in [0, 1], got {magnitude}")));
    }
    let c = magnitude * FRAC_1_SQRT_2;
    Ok(Complex64::new(c, c))
}

/// Row-major `n x n` crosstalk coefficients; entry `(i, j)` is the fraction
/// of sub-channel `j` leaking into sub-channel `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CrosstalkMatrix {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    /// Same coefficient `x` on every off-diagonal entry.
    pub fn uniform(n: usize, x: f64) -> Result<Self> {
        check_coefficient(x)?;
        let mut m = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.entries[i * n + j] = x;
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            check_len("crosstalk row", n, row.len())?;
            for (j, &x) in row.iter().enumerate() {
                check_coefficient(x)?;
                if i == j && x != 0.0 {
                    return Err(AmqdError::param("crosstalk diagonal must be exactly 0"));
                }
                entries.push(x);
            }
        }
        Ok(Self { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }
}

fn check_coefficient(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(AmqdError::param(format!(
            "crosstalk coefficient must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

/// The n Gaussian sub-channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SubChannelSet {
    transmittances: Vec<Complex64>,
    gains: Vec<Complex64>,
    attack_noise: Vec<f64>,
    crosstalk_noise: Vec<f64>,
    crosstalk: CrosstalkMatrix,
}

impl SubChannelSet {
    /// Builds the set from per-sub-channel transmittances `T_i`, each with
    /// both quadrature transmissions in `[0, 1/sqrt 2]`. The bin gains are
    /// their unitary Fourier transform.
    pub fn new(transmittances: Vec<Complex64>, noise_variances: Vec<f64>, crosstalk: CrosstalkMatrix) -> Result<Self> {
        for t in &transmittances {
            let ok = |x: f64| (-BOUND_TOL..=FRAC_1_SQRT_2 + BOUND_TOL).contains(&x);
            if !ok(t.re) || !ok(t.im) {
                return Err(AmqdError::param(format!(
                    "transmittance {t} outside 0 <= Re, Im <= 1/sqrt 2"
                )));
            }
        }
        if transmittances.is_empty() {
            return Err(AmqdError::dim("at least one sub-channel is required"));
        }
        let gains = cvqft::transform_transmittance(&transmittances)?;
        Self::assemble(transmittances, gains, noise_variances, crosstalk)
    }

    /// Builds the set directly from the Fourier-domain bin gains `F(T)_i`,
    /// each of modulus at most 1. The transmittance vector is recovered by
    /// the inverse transform and is not held to the per-quadrature bounds.
    pub fn from_fourier_gains(
        gains: Vec<Complex64>,
        noise_variances: Vec<f64>,
        crosstalk: CrosstalkMatrix,
    ) -> Result<Self> {
        if gains.is_empty() {
            return Err(AmqdError::dim("at least one sub-channel is required"));
        }
        if let Some(g) = gains.iter().find(|g| !(g.norm_sqr() <= 1.0 + BOUND_TOL)) {
            return Err(AmqdError::param(format!("bin gain {g} has modulus above 1")));
        }
        let transmittances = cvqft::unitary_dft(&gains, Direction::Inverse)?;
        Self::assemble(transmittances, gains, noise_variances, crosstalk)
    }

    /// Lossless noiseless channel: unit gain on every bin.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fourier_gains(
            vec![Complex64::new(1.0, 0.0); n],
            vec![0.0; n],
            CrosstalkMatrix::zero(n),
        )
    }

    fn assemble(
        transmittances: Vec<Complex64>,
        gains: Vec<Complex64>,
        noise_variances: Vec<f64>,
        crosstalk: CrosstalkMatrix,
    ) -> Result<Self> {
        let n = gains.len();
        check_len("noise variances", n, noise_variances.len())?;
        check_len("crosstalk matrix", n, crosstalk.len())?;
        if let Some(v) = noise_variances.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(AmqdError::param(format!("noise variance must be >= 0, got {v}")));
        }
        Ok(Self {
            transmittances,
            gains,
            attack_noise: noise_variances,
            crosstalk_noise: vec![0.0; n],
            crosstalk,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn transmittances(&self) -> &[Complex64] {
        &self.transmittances
    }

    /// Fourier-domain bin gains `F(T)_i`.
    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn gains_sq(&self) -> Vec<f64> {
        self.gains.iter().map(|g| g.norm_sqr()).collect()
    }

    /// Effective `sigma2_N_i = sigma2_Eve_i + sigma2_gamma_i`.
    pub fn noise_variances(&self) -> Vec<f64> {
        self.attack_noise
            .iter()
            .zip(&self.crosstalk_noise)
            .map(|(a, g)| a + g)
            .collect()
    }

    pub fn noise_variance(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.attack_noise[i] + self.crosstalk_noise[i])
    }

    /// Attack part `sigma2_Eve_i` of the sub-channel noise.
    pub fn attack_noise_variances(&self) -> &[f64] {
        &self.attack_noise
    }

    /// Crosstalk part `sigma2_gamma_i` of the sub-channel noise.
    pub fn crosstalk_noise_variances(&self) -> &[f64] {
        &self.crosstalk_noise
    }

    /// Mean sub-channel noise variance `sigma2_N`.
    pub fn aggregate_noise(&self) -> f64 {
        self.noise_variances().iter().sum::<f64>() / self.len() as f64
    }

    pub fn crosstalk(&self) -> &CrosstalkMatrix {
        &self.crosstalk
    }

    /// Leaked signal power `sum_{j != i} x_ij |F(T)_j|^2 sigma2_w_j` landing
    /// on each sub-channel as Gaussian noise.
    pub fn crosstalk_variances(&self, signal_variances: &[f64]) -> Result<Vec<f64>> {
        check_len("signal variances", self.len(), signal_variances.len())?;
        let n = self.len();
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.crosstalk.get(i, j) * self.gains[j].norm_sqr() * signal_variances[j])
                    .sum()
            })
            .collect())
    }

    /// Returns a copy whose crosstalk noise term carries the leakage produced
    /// by the given per-sub-channel modulation variances. The attack part
    /// and the signal path are untouched.
    pub fn with_crosstalk_noise(&self, signal_variances: &[f64]) -> Result<Self> {
        let crosstalk_noise = self.crosstalk_variances(signal_variances)?;
        Ok(Self {
            crosstalk_noise,
            ..self.clone()
        })
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(AmqdError::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(())
    }
}

/// Eve's entangling-cloner parameters: EPR ancilla variance `W` and one
/// beam-splitter transmittance per sub-channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveModel {
    w: f64,
    transmittances: Vec<Complex64>,
}

impl EveModel {
    pub fn new(w: f64, transmittances: Vec<Complex64>) -> Result<Self> {
        if !(w >= 1.0) || !w.is_finite() {
            return Err(AmqdError::param(format!("W must be >= 1, got {w}")));
        }
        if transmittances.is_empty() {
            return Err(AmqdError::dim("Eve needs at least one transmittance"));
        }
        if let Some(t) = transmittances
            .iter()
            .find(|t| !(t.norm_sqr() > 0.0 && t.norm_sqr() < 1.0))
        {
            return Err(AmqdError::param(format!(
                "|T_Eve|^2 must lie in (0, 1), got {}",
                t.norm_sqr()
            )));
        }
        Ok(Self { w, transmittances })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn transmittances(&self) -> &[Complex64] {
        &self.transmittances
    }

    pub fn len(&self) -> usize {
        self.transmittances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transmittances.is_empty()
    }

    /// `|T_Eve|^2 = (1/n) sum |T_Eve,i|^2`.
    pub fn mean_gain_sq(&self) -> f64 {
        self.transmittances.iter().map(|t| t.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// `(1/n) sum |F(T_Eve)_i|^2`.
    pub fn mean_fourier_gain_sq(&self) -> f64 {
        let g = cvqft::fourier_gains_sq(&self.transmittances).expect("non-empty by construction");
        g.iter().sum::<f64>() / g.len() as f64
    }
}

/// One transmitted AMQD block, all vectors in the Fourier (bin) domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AmqdBlock {
    pub block_index: u64,
    /// `F(d)[j]`.
    pub input: ComplexGaussianVector,
    /// `y[j]`.
    pub output: ComplexGaussianVector,
    /// `F(Delta)[j]`.
    pub noise_draw: ComplexGaussianVector,
}

impl AmqdBlock {
    /// The noisy subcarriers as they arrive at Bob, before his transform.
    pub fn received(&self) -> Result<ComplexGaussianVector> {
        cvqft::inverse(&self.output)
    }

    /// `tau = ||F(d)[j]||^2`.
    pub fn tau(&self) -> f64 {
        self.input.norm_sqr()
    }
}

/// Alice's step: subcarriers `d = F^-1(z)`.
pub fn encode(z: &ComplexGaussianVector) -> Result<ComplexGaussianVector> {
    cvqft::inverse(z)
}

/// Bob's step: `z' = F(received)`.
pub fn decode(received: &ComplexGaussianVector) -> Result<ComplexGaussianVector> {
    cvqft::forward(received)
}

/// Sends subcarrier vector `d` through `channels` as block `block_index`.
///
/// Noise for bin `i` is drawn with quadrature variance `sigma2_N_i` from the
/// stream derived from `(seed, block_index)`, so blocks can be produced in
/// any order.
pub fn transmit_block(
    d: &ComplexGaussianVector,
    channels: &SubChannelSet,
    seed: u64,
    block_index: u64,
) -> Result<AmqdBlock> {
    check_len("subcarrier vector", channels.len(), d.len())?;
    let input = cvqft::forward(d)?;
    let noise_var = channels.noise_variances();
    let mut rng = stream_rng(seed, block_streams(block_index).1);
    let noise = draw_complex(&mut rng, d.len(), |i| noise_var[i]);

    let signal_var = input.quadrature_variance().mean();
    let output: Vec<Complex64> = channels
        .gains()
        .iter()
        .zip(input.samples())
        .zip(&noise)
        .map(|((g, x), e)| g * x + e)
        .collect();
    let output_var: Vec<f64> = channels
        .gains()
        .iter()
        .zip(&noise_var)
        .map(|(g, nv)| g.norm_sqr() * signal_var + nv)
        .collect();

    Ok(AmqdBlock {
        block_index,
        input,
        output: ComplexGaussianVector::new(output, QuadratureVariance::PerElement(output_var))?,
        noise_draw: ComplexGaussianVector::new(noise, QuadratureVariance::PerElement(noise_var))?,
    })
}

/// Second moments of the attacked sub-channel: Bob's and Eve's quadratures
/// both carry `sigma2_w_i + sigma2_N_i`, and the sub-channel noise splits
/// into the attack and crosstalk parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClonerMoments {
    pub bob_variance: f64,
    pub eve_variance: f64,
    pub attack_noise: f64,
    pub crosstalk_noise: f64,
}

pub fn entangling_cloner(
    input_quadrature_variance: f64,
    channel: usize,
    eve: &EveModel,
    channels: &SubChannelSet,
) -> Result<ClonerMoments> {
    if !(input_quadrature_variance >= 0.0) || !input_quadrature_variance.is_finite() {
        return Err(AmqdError::param("input variance must be >= 0"));
    }
    if channel >= eve.len() {
        return Err(AmqdError::IndexOutOfRange {
            index: channel,
            len: eve.len(),
        });
    }
    let noise = channels.noise_variance(channel)?;
    let total = input_quadrature_variance + noise;
    Ok(ClonerMoments {
        bob_variance: total,
        eve_variance: total,
        attack_noise: channels.attack_noise[channel],
        crosstalk_noise: channels.crosstalk_noise[channel],
    })
}

/// Draws `draws` position-quadrature samples of Bob's and Eve's outputs on
/// sub-channel `channel`: the shared input quadrature plus independent
/// sub-channel noise on each arm.
pub fn sample_cloner_outputs(
    input_quadrature_variance: f64,
    channel: usize,
    channels: &SubChannelSet,
    draws: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let noise = channels.noise_variance(channel)?;
    let (s_in, s_n) = (input_quadrature_variance.sqrt(), noise.sqrt());
    let mut rng = stream_rng(seed, channel as u64);
    let mut bob = Vec::with_capacity(draws);
    let mut eve = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x: f64 = rng.sample(StandardNormal);
        let nb: f64 = rng.sample(StandardNormal);
        let ne: f64 = rng.sample(StandardNormal);
        bob.push(s_in * x + s_n * nb);
        eve.push(s_in * x + s_n * ne);
    }
    Ok((bob, eve))
}

/// `gamma(N_i) = sum_{j != i} x_ij chi(A_j : B_j)`.
pub fn crosstalk_info(channels: &SubChannelSet, holevo_per_channel: &[f64], i: usize) -> Result<f64> {
    check_len(
        "per-channel Holevo information",
        channels.len(),
        holevo_per_channel.len(),
    )?;
    channels.check_index(i)?;
    let x = channels.crosstalk();
    Ok((0..channels.len())
        .filter(|&j| j != i)
        .map(|j| x.get(i, j) * holevo_per_channel[j])
        .sum())
}

/// Average crosstalk `(1/n) sum_i gamma(N_i)` over all sub-channels, used
/// or not.
pub fn mean_crosstalk_info(channels: &SubChannelSet, holevo_per_channel: &[f64]) -> Result<f64> {
    let n = channels.len();
    let mut total = 0.0;
    for i in 0..n {
        total += crosstalk_info(channels, holevo_per_channel, i)?;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sample_vector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_round_trip_recovers_input() {
        let z = sample_vector(16, 1.0, 3).unwrap();
        let ch = SubChannelSet::identity(16).unwrap();
        let block = transmit_block(&encode(&z).unwrap(), &ch, 5, 1).unwrap();
        let z2 = decode(&block.received().unwrap()).unwrap();
        for (a, b) in z.samples().iter().zip(z2.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        for (a, b) in block.input.samples().iter().zip(block.output.samples()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_input_encodes_to_zero() {
        let z = sample_vector(8, 0.0, 1).unwrap();
        assert!(encode(&z).unwrap().samples().iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn block_obeys_channel_equation_exactly() {
        let ch = SubChannelSet::from_fourier_gains(
            vec![c(0.6, 0.1), c(0.2, -0.3), c(0.0, 0.9), c(0.5, 0.5)],
            vec![0.1, 0.2, 0.3, 0.4],
            CrosstalkMatrix::zero(4),
        )
        .unwrap();
        let d = sample_vector(4, 1.0, 9).unwrap();
        let b = transmit_block(&d, &ch, 1, 2).unwrap();
        for i in 0..4 {
            let expect = ch.gains()[i] * b.input.samples()[i] + b.noise_draw.samples()[i];
            assert_eq!(b.output.samples()[i], expect);
        }
        assert_eq!(b, transmit_block(&d, &ch, 1, 2).unwrap());
        assert_ne!(b.noise_draw, transmit_block(&d, &ch, 1, 3).unwrap().noise_draw);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let ch = SubChannelSet::identity(4).unwrap();
        let d = sample_vector(5, 1.0, 1).unwrap();
        assert!(matches!(
            transmit_block(&d, &ch, 0, 1),
            Err(AmqdError::LengthMismatch { .. })
        ));
        assert!(
            SubChannelSet::from_fourier_gains(vec![c(1.0, 0.0); 3], vec![0.0; 2], CrosstalkMatrix::zero(3)).is_err()
        );
    }

    #[test]
    fn transmittance_bounds_are_enforced() {
        let ok = symmetric_transmittance(1.0).unwrap();
        assert!((ok.re - FRAC_1_SQRT_2).abs() < 1e-15 && ok.re == ok.im);
        assert!(SubChannelSet::new(vec![ok, c(0.1, 0.2)], vec![0.1; 2], CrosstalkMatrix::zero(2)).is_ok());
        assert!(SubChannelSet::new(vec![c(0.9, 0.1)], vec![0.1], CrosstalkMatrix::zero(1)).is_err());
        assert!(SubChannelSet::new(vec![c(-0.1, 0.1)], vec![0.1], CrosstalkMatrix::zero(1)).is_err());
        assert!(symmetric_transmittance(1.1).is_err());
    }

    #[test]
    fn aggregate_noise_is_mean_of_sub_channel_noise() {
        let ch = SubChannelSet::from_fourier_gains(vec![c(0.5, 0.0); 3], vec![0.1, 0.2, 0.6], CrosstalkMatrix::zero(3))
            .unwrap();
        assert!((ch.aggregate_noise() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn crosstalk_matrix_validation() {
        assert!(CrosstalkMatrix::from_rows(&[vec![0.0, 0.1], vec![0.2, 0.0]]).is_ok());
        assert!(CrosstalkMatrix::from_rows(&[vec![0.1, 0.1], vec![0.2, 0.0]]).is_err());
        assert!(CrosstalkMatrix::from_rows(&[vec![0.0, 1.5], vec![0.2, 0.0]]).is_err());
        assert!(CrosstalkMatrix::uniform(3, -0.1).is_err());
    }

    #[test]
    fn cloner_moments() {
        let ch =
            SubChannelSet::from_fourier_gains(vec![c(0.8, 0.0), c(0.4, 0.0)], vec![0.5, 0.0], CrosstalkMatrix::zero(2))
                .unwrap();
        let eve = EveModel::new(1.5, vec![c(0.5, 0.0), c(0.3, 0.3)]).unwrap();
        let m = entangling_cloner(1.0, 0, &eve, &ch).unwrap();
        assert_eq!((m.bob_variance, m.eve_variance), (1.5, 1.5));
        let v = entangling_cloner(0.0, 1, &eve, &ch).unwrap();
        assert_eq!((v.bob_variance, v.eve_variance), (0.0, 0.0));
        assert!(matches!(
            entangling_cloner(1.0, 2, &eve, &ch),
            Err(AmqdError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn eve_model_validation() {
        assert!(EveModel::new(0.9, vec![c(0.5, 0.0)]).is_err());
        assert!(EveModel::new(1.0, vec![c(1.0, 0.0)]).is_err());
        assert!(EveModel::new(1.0, vec![c(0.0, 0.0)]).is_err());
        let e = EveModel::new(2.0, vec![c(0.5, 0.0), c(0.0, 0.5), c(0.3, 0.4)]).unwrap();
        assert!((e.mean_gain_sq() - e.mean_fourier_gain_sq()).abs() < 1e-15);
    }

    #[test]
    fn crosstalk_info_cases() {
        let n = 2;
        let ch =
            SubChannelSet::from_fourier_gains(vec![c(0.5, 0.0); n], vec![0.1; n], CrosstalkMatrix::zero(n)).unwrap();
        assert_eq!(crosstalk_info(&ch, &[1.0, 1.0], 0).unwrap(), 0.0);

        let x = CrosstalkMatrix::from_rows(&[vec![0.0, 0.1], vec![0.0, 0.0]]).unwrap();
        let ch = SubChannelSet::from_fourier_gains(vec![c(0.5, 0.0); n], vec![0.1; n], x).unwrap();
        assert!((crosstalk_info(&ch, &[0.7, 1.0], 0).unwrap() - 0.1).abs() < 1e-15);
        assert!(crosstalk_info(&ch, &[0.7, 1.0], 2).is_err());
        assert!(crosstalk_info(&ch, &[0.7], 0).is_err());
    }

    #[test]
    fn crosstalk_noise_leaves_signal_path_alone() {
        let x = CrosstalkMatrix::uniform(3, 0.2).unwrap();
        let ch =
            SubChannelSet::from_fourier_gains(vec![c(0.8, 0.0), c(0.5, 0.0), c(0.3, 0.0)], vec![0.0; 3], x).unwrap();
        let leaky = ch.with_crosstalk_noise(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(leaky.gains(), ch.gains());
        assert_eq!(leaky.attack_noise_variances(), ch.attack_noise_variances());
        let expected0 = 0.2 * 0.25 + 0.2 * 0.09;
        assert!((leaky.noise_variances()[0] - expected0).abs() < 1e-15);
        assert!(leaky.noise_variances().iter().all(|&v| v > 0.0));
    }
}
