//! Complex-Gaussian phase-space model.
//!
//! A coherent state with Gaussian-modulated quadratures `(x, p)` is carried as
//! the complex scalar `z = x + i p`. Both quadratures are i.i.d. zero-mean
//! normals with the same *quadrature variance*; the complex variance
//! `E[|z|^2]` is twice that. Covariances are diagonal throughout, so a
//! vector only needs one variance per element.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AmqdError, Result};
use crate::rng::stream_rng;

/// Zero-mean circularly symmetric complex Gaussian scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGaussian {
    quadrature_variance: f64,
}

impl ComplexGaussian {
    pub fn new(quadrature_variance: f64) -> Result<Self> {
        check_variance(quadrature_variance)?;
        Ok(Self { quadrature_variance })
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    /// Variance of each of the real and imaginary parts.
    pub fn quadrature_variance(&self) -> f64 {
        self.quadrature_variance
    }

    /// `E[|z|^2]`.
    pub fn variance(&self) -> f64 {
        2.0 * self.quadrature_variance
    }
}

/// Per-element quadrature variance of a [`ComplexGaussianVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuadratureVariance {
    Uniform(f64),
    PerElement(Vec<f64>),
}

impl QuadratureVariance {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            QuadratureVariance::Uniform(v) => *v,
            QuadratureVariance::PerElement(v) => v[i],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            QuadratureVariance::Uniform(v) => *v,
            QuadratureVariance::PerElement(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

/// n complex samples standing for n coherent states, subcarriers or noise
/// draws, together with the quadrature variance they were drawn with.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGaussianVector {
    samples: Vec<Complex64>,
    variance: QuadratureVariance,
}

impl ComplexGaussianVector {
    pub fn new(samples: Vec<Complex64>, variance: QuadratureVariance) -> Result<Self> {
        if samples.is_empty() {
            return Err(AmqdError::dim("vector must hold at least one sample"));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(AmqdError::param("samples must be finite"));
        }
        match &variance {
            QuadratureVariance::Uniform(v) => check_variance(*v)?,
            QuadratureVariance::PerElement(v) => {
                crate::error::check_len("per-element variance", samples.len(), v.len())?;
                for &x in v {
                    check_variance(x)?;
                }
            }
        }
        Ok(Self { samples, variance })
    }

    /// Wraps samples with a uniform quadrature variance.
    pub fn with_uniform(samples: Vec<Complex64>, quadrature_variance: f64) -> Result<Self> {
        Self::new(samples, QuadratureVariance::Uniform(quadrature_variance))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn quadrature_variance(&self) -> &QuadratureVariance {
        &self.variance
    }

    /// `sum |z_i|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Multiplies every sample by `e^{i gamma}`. The distribution is unchanged.
    pub fn rotated(&self, gamma: f64) -> Self {
        let phase = Complex64::from_polar(1.0, gamma);
        Self {
            samples: self.samples.iter().map(|z| z * phase).collect(),
            variance: self.variance.clone(),
        }
    }

    pub(crate) fn from_parts(samples: Vec<Complex64>, variance: QuadratureVariance) -> Self {
        debug_assert!(!samples.is_empty());
        Self { samples, variance }
    }
}

/// Draws `n` i.i.d. circular complex Gaussians with the given quadrature
/// variance from stream 0 of `seed`.
pub fn sample_vector(n: usize, quadrature_variance: f64, seed: u64) -> Result<ComplexGaussianVector> {
    if n == 0 {
        return Err(AmqdError::dim("n must be at least 1"));
    }
    check_variance(quadrature_variance)?;
    let mut rng = stream_rng(seed, 0);
    let samples = draw_complex(&mut rng, n, |_| quadrature_variance);
    Ok(ComplexGaussianVector::from_parts(
        samples,
        QuadratureVariance::Uniform(quadrature_variance),
    ))
}

/// Draws one complex Gaussian per element, element `i` with quadrature
/// variance `variance(i)`. Zero variance yields an exact zero.
pub(crate) fn draw_complex<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: impl Fn(usize) -> f64) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            let v = variance(i);
            // both quadratures are always drawn so the stream layout does not
            // depend on the variance profile
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if v == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let s = v.sqrt();
                Complex64::new(s * re, s * im)
            }
        })
        .collect()
}

/// Joint density of the two quadratures, `exp(-|z|^2 / 2s) / (2 pi s)`.
pub fn density_complex(z: Complex64, quadrature_variance: f64) -> Result<f64> {
    check_positive("quadrature variance", quadrature_variance)?;
    let s = quadrature_variance;
    Ok((-z.norm_sqr() / (2.0 * s)).exp() / (2.0 * PI * s))
}

/// Which magnitude law [`density_magnitude`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MagnitudeLaw {
    /// `|z|` is Rayleigh with scale `sqrt(s)`.
    Rayleigh,
    /// `|z|^2` is exponential with mean `2 s`; the argument is `|z|^2`.
    SquaredExponential,
}

pub fn density_magnitude(r: f64, quadrature_variance: f64, law: MagnitudeLaw) -> Result<f64> {
    check_positive("quadrature variance", quadrature_variance)?;
    if !(r >= 0.0) {
        return Err(AmqdError::Domain(format!("magnitude must be non-negative, got {r}")));
    }
    let s = quadrature_variance;
    Ok(match law {
        MagnitudeLaw::Rayleigh => r / s * (-r * r / (2.0 * s)).exp(),
        MagnitudeLaw::SquaredExponential => (-r / (2.0 * s)).exp() / (2.0 * s),
    })
}

/// Cumulative distribution of the same laws, used by goodness-of-fit checks.
pub fn magnitude_cdf(r: f64, quadrature_variance: f64, law: MagnitudeLaw) -> Result<f64> {
    check_positive("quadrature variance", quadrature_variance)?;
    if !(r >= 0.0) {
        return Err(AmqdError::Domain(format!("magnitude must be non-negative, got {r}")));
    }
    let s = quadrature_variance;
    Ok(match law {
        MagnitudeLaw::Rayleigh => -(-r * r / (2.0 * s)).exp_m1(),
        MagnitudeLaw::SquaredExponential => -(-r / (2.0 * s)).exp_m1(),
    })
}

/// One-dimensional Gaussian quadrature density of standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSignal {
    sigma: f64,
}

impl GaussianSignal {
    pub fn new(sigma: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        Ok(Self { sigma })
    }

    pub fn from_variance(variance: f64) -> Result<Self> {
        check_positive("variance", variance)?;
        Ok(Self { sigma: variance.sqrt() })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn density(&self, x: f64) -> f64 {
        let s = self.sigma;
        (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())
    }
}

/// `2 sqrt(2 ln 2) sigma`, widened by `sqrt(A)` for a virtual gain `A >= 1`.
pub fn fwhm(signal: GaussianSignal, virtual_gain: Option<f64>) -> Result<f64> {
    let base = 2.0 * (2.0 * LN_2).sqrt() * signal.sigma;
    match virtual_gain {
        None => Ok(base),
        Some(a) if a >= 1.0 && a.is_finite() => Ok(base * a.sqrt()),
        Some(a) => Err(AmqdError::param(format!("virtual gain must be >= 1, got {a}"))),
    }
}

/// Ratio `A` of the mean squared Fourier gain over the selected sub-channels
/// to the single-carrier squared gain. `A > 1` means the multicarrier
/// transmission behaves like a larger virtual modulation variance.
pub fn virtual_gain(mean_fourier_gain: f64, single_carrier_gain_sq: f64) -> Result<f64> {
    if !(single_carrier_gain_sq > 0.0) {
        return Err(AmqdError::param("single-carrier squared gain must be positive"));
    }
    for (name, v) in [
        ("mean Fourier gain", mean_fourier_gain),
        ("single-carrier squared gain", single_carrier_gain_sq),
    ] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(AmqdError::param(format!("{name} must lie in (0, 1], got {v}")));
        }
    }
    Ok(mean_fourier_gain / single_carrier_gain_sq)
}

fn check_variance(v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(AmqdError::param(format!("variance must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(AmqdError::param(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_variance_gives_exact_zeros() {
        let v = sample_vector(4, 0.0, 1).unwrap();
        assert!(v.samples().iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn sampling_rejects_bad_input() {
        assert!(matches!(sample_vector(0, 1.0, 1), Err(AmqdError::InvalidDimension(_))));
        assert!(matches!(sample_vector(3, -1.0, 1), Err(AmqdError::InvalidParameter(_))));
        assert!(sample_vector(3, f64::NAN, 1).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_vector(100_000, 1.0, 7).unwrap();
        let b = sample_vector(100_000, 1.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn complex_variance_is_twice_quadrature_variance() {
        let g = ComplexGaussian::new(0.75).unwrap();
        assert_eq!(g.variance(), 1.5);
        assert_eq!(g.mean(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn density_spot_values() {
        let d0 = density_complex(Complex64::new(0.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(d0, 1.0 / (2.0 * PI), epsilon = 1e-15);
        let d1 = density_complex(Complex64::new(1.0, 1.0), 1.0).unwrap();
        assert_relative_eq!(d1, (-1.0f64).exp() / (2.0 * PI), epsilon = 1e-15);
        assert!((d1 - 0.058550).abs() < 1e-6);
        assert!(density_complex(Complex64::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn rayleigh_vanishes_at_origin_and_peaks_at_sigma() {
        assert_eq!(density_magnitude(0.0, 1.0, MagnitudeLaw::Rayleigh).unwrap(), 0.0);
        for s2 in [0.25, 1.0, 4.0] {
            let grid: Vec<f64> = (0..=40_000).map(|k| k as f64 * 1e-4).collect();
            let argmax = grid
                .iter()
                .copied()
                .max_by(|a, b| {
                    let fa = density_magnitude(*a, s2, MagnitudeLaw::Rayleigh).unwrap();
                    let fb = density_magnitude(*b, s2, MagnitudeLaw::Rayleigh).unwrap();
                    fa.total_cmp(&fb)
                })
                .unwrap();
            assert!((argmax - f64::sqrt(s2)).abs() < 2e-4, "s2={s2} argmax={argmax}");
        }
        assert!(matches!(
            density_magnitude(-0.1, 1.0, MagnitudeLaw::Rayleigh),
            Err(AmqdError::Domain(_))
        ));
    }

    #[test]
    fn fwhm_values() {
        let one = GaussianSignal::new(1.0).unwrap();
        assert!((fwhm(one, None).unwrap() - 2.354820).abs() < 1e-6);
        assert!((fwhm(one, Some(4.0)).unwrap() - 4.709640).abs() < 1e-6);
        let two = GaussianSignal::new(2.0).unwrap();
        assert_relative_eq!(fwhm(two, None).unwrap(), 2.0 * fwhm(one, None).unwrap());
        assert!(GaussianSignal::new(0.0).is_err());
        assert!(fwhm(one, Some(0.5)).is_err());
    }

    #[test]
    fn virtual_gain_values() {
        assert_relative_eq!(virtual_gain(0.8, 0.5).unwrap(), 1.6, epsilon = 1e-15);
        assert_eq!(virtual_gain(0.5, 0.5).unwrap(), 1.0);
        assert!(virtual_gain(0.5, 0.0).is_err());
    }
}
