use num_complex::Complex64;

use super::position::PositionGrid;
use super::state::{FockState, LEAKAGE_MARGIN, LEAKAGE_TOLERANCE};
use crate::error::{ensure_finite, Error, Result};

/// Superposition sign of a cat state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Self {
        if value < 0.0 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// `S(r e^{i theta})|0>` from its closed-form photon-number expansion, truncated and renormalized.
pub fn make_squeezed_vacuum(r: f64, theta: f64, cutoff: usize) -> Result<FockState> {
    ensure_finite("squeezing", &[r, theta])?;
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); cutoff];
    let ratio = -Complex64::from_polar(r.tanh(), theta);
    let mut c = Complex64::new(1.0 / r.cosh().sqrt(), 0.0);
    amps[0] = c;
    let mut m = 1;
    while 2 * m < cutoff {
        let k = 2.0 * m as f64;
        c *= ratio * ((k - 1.0) / k).sqrt();
        amps[2 * m] = c;
        m += 1;
    }
    FockState::single(amps)?.normalized()
}

/// Wavefunction of `S(r)|0>` displaced to `center`.
pub fn squeezed_gaussian(x: f64, center: f64, r: f64) -> f64 {
    let s = (2.0 * r).exp();
    (s / std::f64::consts::PI).powf(0.25) * (-0.5 * s * (x - center).powi(2)).exp()
}

/// Squared norm of `(D(alpha) +- D(-alpha)) S(r')|0>`.
pub fn cat_norm_sqr(alpha: f64, r_prime: f64, parity: Parity) -> f64 {
    let ac = alpha * r_prime.exp();
    2.0 * (1.0 + parity.sign() * (-2.0 * ac * ac).exp())
}

/// Normalized cat wavefunction sampled on `xs`.
pub fn cat_wavefunction(xs: &[f64], alpha: f64, r_prime: f64, parity: Parity) -> Vec<f64> {
    let shift = std::f64::consts::SQRT_2 * alpha;
    let inv = 1.0 / cat_norm_sqr(alpha, r_prime, parity).sqrt();
    let sign = parity.sign();
    xs.iter()
        .map(|&x| {
            inv * (squeezed_gaussian(x, shift, r_prime) + sign * squeezed_gaussian(x, -shift, r_prime))
        })
        .collect()
}

/// `|+-alpha, r'>` projected onto the Fock basis of `grid`.
///
/// Fails with a truncation error when more than the leakage tolerance of the
/// state's norm lies outside the cutoff or inside its top `LEAKAGE_MARGIN` levels.
pub fn make_cat_on(grid: &PositionGrid, alpha: f64, r_prime: f64, parity: Parity) -> Result<FockState> {
    ensure_finite("cat", &[alpha, r_prime])?;
    if parity == Parity::Odd && alpha.abs() < 1e-12 {
        // (D(a) - D(-a))S|0> / norm -> S|1> as a -> 0
        return odd_cat_limit(grid.cutoff(), r_prime);
    }
    let wf = cat_wavefunction(grid.xs(), alpha, r_prime, parity);
    let coeffs = grid.project(&wf);
    let captured: f64 = coeffs.iter().map(|c| c * c).sum();
    let start = grid.cutoff().saturating_sub(LEAKAGE_MARGIN);
    let edge: f64 = coeffs[start..].iter().map(|c| c * c).sum();
    let leakage = (1.0 - captured).max(0.0) + edge;
    if leakage > LEAKAGE_TOLERANCE {
        return Err(Error::Truncation {
            leakage,
            tolerance: LEAKAGE_TOLERANCE,
        });
    }
    let amps = coeffs.into_iter().map(|c| Complex64::new(c, 0.0)).collect();
    FockState::single(amps)?.normalized()
}

pub fn make_cat(alpha: f64, r_prime: f64, parity: Parity, cutoff: usize) -> Result<FockState> {
    make_cat_on(&PositionGrid::for_cutoff(cutoff), alpha, r_prime, parity)
}

fn odd_cat_limit(cutoff: usize, r_prime: f64) -> Result<FockState> {
    let grid = PositionGrid::for_cutoff(cutoff);
    let s = (2.0 * r_prime).exp();
    // derivative of the squeezed Gaussian, normalized
    let wf: Vec<f64> = grid
        .xs()
        .iter()
        .map(|&x| (4.0 * s.powi(3) / std::f64::consts::PI).powf(0.25) * x * (-0.5 * s * x * x).exp())
        .collect();
    let amps = grid
        .project(&wf)
        .into_iter()
        .map(|c| Complex64::new(c, 0.0))
        .collect();
    FockState::single(amps)?.normalized()
}
