use num_complex::Complex64;

use super::position::PositionGrid;
use super::state::FockState;
use crate::error::{ensure_finite, Error, Result};
use crate::units::DB_PER_NAT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMetrics {
    pub fidelity: f64,
    pub overlap: Complex64,
    /// Parity expectations of `(a, b)`.
    pub parity: (f64, f64),
    /// Mean photon numbers of `(a, b)`.
    pub mean_photon: (f64, f64),
}

pub fn state_metrics(a: &FockState, b: &FockState) -> Result<StateMetrics> {
    let overlap = a.inner(b)? / (a.norm_sqr() * b.norm_sqr()).sqrt();
    Ok(StateMetrics {
        fidelity: overlap.norm_sqr(),
        overlap,
        parity: (a.parity(), b.parity()),
        mean_photon: (a.mean_photon(), b.mean_photon()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Quadrature {
    Q,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSqueezing {
    pub delta: f64,
    pub db: f64,
}

impl EffectiveSqueezing {
    /// `Delta` on the dB scale referenced to vacuum (`Delta = 1/2` reads 0 dB).
    pub fn from_delta(delta: f64) -> Self {
        Self {
            delta,
            db: -20.0 * (2.0 * delta).log10(),
        }
    }
}

/// `Delta = sqrt(-ln |<exp(i u x)>|) / |u|` for `x` the chosen quadrature.
pub fn effective_squeezing(state: &FockState, u: f64, quadrature: Quadrature) -> Result<EffectiveSqueezing> {
    let grid = PositionGrid::for_cutoff(state.cutoff());
    effective_squeezing_on(&grid, state, u, quadrature)
}

pub fn effective_squeezing_on(
    grid: &PositionGrid,
    state: &FockState,
    u: f64,
    quadrature: Quadrature,
) -> Result<EffectiveSqueezing> {
    state.require_single()?;
    ensure_finite("displacement", &[u])?;
    if u == 0.0 {
        return Err(Error::InvalidParameter("displacement magnitude must be nonzero".into()));
    }
    let wf = match quadrature {
        Quadrature::Q => grid.wavefunction(state.amplitudes()),
        Quadrature::P => grid.momentum_wavefunction(state.amplitudes()),
    };
    let norm = state.norm_sqr();
    let density: Vec<f64> = wf.iter().map(|z| z.norm_sqr() / norm).collect();
    let modulus = grid.characteristic(&density, u).norm();
    if !(modulus > 1e-300) {
        return Err(Error::UndefinedMetric(modulus));
    }
    if modulus > 1.0 + 1e-9 {
        return Err(Error::NumericalConsistency(format!(
            "|Tr D(u) rho| = {modulus} exceeds 1"
        )));
    }
    let delta = (-modulus.min(1.0).ln()).sqrt() / u.abs();
    Ok(EffectiveSqueezing::from_delta(delta))
}

/// Effective squeezing of a Gaussian with variance `e^{-2r}/2`, in dB: `DB_PER_NAT * r`.
pub fn gaussian_effective_db(r: f64) -> f64 {
    DB_PER_NAT * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::states::{make_cat, make_squeezed_vacuum, Parity};

    #[test]
    fn self_fidelity_and_parity() {
        let a = make_cat(1.5, 0.1, Parity::Odd, 30).unwrap();
        let m = state_metrics(&a, &a).unwrap();
        assert!((m.fidelity - 1.0).abs() < 1e-12);
        assert!((m.parity.0 + 1.0).abs() < 1e-8);
        assert!(state_metrics(&a, &FockState::vacuum(10).unwrap()).is_err());
    }

    #[test]
    fn cat_mean_photon_number() {
        // even cat at r' = 0: <n> = alpha^2 tanh(alpha^2)
        let cat = make_cat(2.0, 0.0, Parity::Even, 40).unwrap();
        assert!((cat.mean_photon() - 4.0 * 4.0f64.tanh()).abs() < 1e-9);
    }

    #[test]
    fn vacuum_reads_zero_db() {
        let vac = FockState::vacuum(40).unwrap();
        for u in [std::f64::consts::PI.sqrt(), (2.0 * std::f64::consts::PI).sqrt()] {
            for quad in [Quadrature::Q, Quadrature::P] {
                let e = effective_squeezing(&vac, u, quad).unwrap();
                assert!((e.delta - 0.5).abs() < 1e-9);
                assert!(e.db.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn squeezed_vacuum_delta() {
        let s = make_squeezed_vacuum(0.5, 0.0, 60).unwrap();
        let u = (2.0 * std::f64::consts::PI).sqrt();
        let e = effective_squeezing(&s, u, Quadrature::Q).unwrap();
        assert!((e.delta - (-0.5f64).exp() / 2.0).abs() < 1e-8);
        assert!((e.db - 4.34).abs() < 0.01);
        let ep = effective_squeezing(&s, u, Quadrature::P).unwrap();
        assert!((ep.db + 4.34).abs() < 0.01);
    }
}
