//! Unitary discrete Fourier layer.
//!
//! The receiver-side transform is the forward DFT with kernel
//! `exp(-i 2 pi j k / n)`; the sender applies its inverse. Both directions
//! are scaled by `1 / sqrt(n)`, so norms and per-element variances of
//! i.i.d. inputs are preserved exactly.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{AmqdError, Result};
use crate::gaussian::{ComplexGaussianVector, QuadratureVariance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unitary DFT of a slice in the requested direction.
pub fn unitary_dft(input: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    if input.is_empty() {
        return Err(AmqdError::dim("transform input must be non-empty"));
    }
    let n = input.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = match direction {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    let mut buf = input.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    for z in &mut buf {
        *z *= scale;
    }
    Ok(buf)
}

/// Receiver-side transform.
pub fn forward(v: &ComplexGaussianVector) -> Result<ComplexGaussianVector> {
    transform(v, Direction::Forward)
}

/// Sender-side transform; exact inverse of [`forward`].
pub fn inverse(v: &ComplexGaussianVector) -> Result<ComplexGaussianVector> {
    transform(v, Direction::Inverse)
}

fn transform(v: &ComplexGaussianVector, direction: Direction) -> Result<ComplexGaussianVector> {
    let out = unitary_dft(v.samples(), direction)?;
    // each output bin mixes all inputs with weight 1/n in power
    let variance = QuadratureVariance::Uniform(v.quadrature_variance().mean());
    ComplexGaussianVector::new(out, variance)
}

/// Fourier-domain sub-channel gains `F(T)` of a transmittance vector.
/// Consumers use the squared magnitudes.
pub fn transform_transmittance(t: &[Complex64]) -> Result<Vec<Complex64>> {
    unitary_dft(t, Direction::Forward)
}

/// `|F(T)_i|^2` for every bin.
pub fn fourier_gains_sq(t: &[Complex64]) -> Result<Vec<f64>> {
    Ok(transform_transmittance(t)?.iter().map(|g| g.norm_sqr()).collect())
}

/// Width of the continuous Fourier transform of a Gaussian quadrature
/// density: a density of variance `s` maps to one of variance `1 / s`, so
/// `dx * dp = 1` with `dx = sqrt(s)`, `dp = 1 / sqrt(s)`.
///
/// This is a statement about density widths only. The discrete sample
/// transform above keeps variances unchanged.
pub fn gaussian_width_reciprocal(quadrature_variance: f64) -> Result<f64> {
    if !(quadrature_variance > 0.0) || !quadrature_variance.is_finite() {
        return Err(AmqdError::param(format!(
            "variance must be positive, got {quadrature_variance}"
        )));
    }
    Ok(1.0 / quadrature_variance)
}
