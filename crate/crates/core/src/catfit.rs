//! Least-distance fit of a single-mode state to a squeezed cat `|+-alpha, r'>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::position::PositionGrid;
use crate::fock::states::{cat_norm_sqr, squeezed_gaussian, Parity};
use crate::fock::FockState;
use crate::units::corrected_amplitude;

pub const ACCEPT_FIDELITY: f64 = 0.9;

/// Gains below this are rounding noise, not a move.
const MIN_GAIN: f64 = 1e-12;
const MAX_REFINE_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatFit {
    pub alpha: f64,
    pub r_prime: f64,
    pub parity: Parity,
    pub fidelity: f64,
    pub alpha_c: f64,
    pub accepted: bool,
}

impl CatFit {
    fn new(alpha: f64, r_prime: f64, parity: Parity, fidelity: f64) -> Self {
        Self {
            alpha,
            r_prime,
            parity,
            fidelity,
            alpha_c: corrected_amplitude(alpha, r_prime),
            accepted: fidelity >= ACCEPT_FIDELITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSearch {
    pub alpha_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub alpha_points: usize,
    pub r_points: usize,
    /// Refinement stops once a full compass sweep gains less than this in fidelity
    /// and the step has shrunk below `step_floor`.
    pub tolerance: f64,
    pub step_floor: f64,
}

impl Default for FitSearch {
    fn default() -> Self {
        Self {
            alpha_max: 10.0,
            r_min: -1.5,
            r_max: 1.5,
            alpha_points: 60,
            r_points: 40,
            tolerance: 1e-4,
            step_floor: 1e-4,
        }
    }
}

/// Reusable fitter holding the position grid for one cutoff.
#[derive(Debug, Clone)]
pub struct CatFitter {
    grid: PositionGrid,
    search: FitSearch,
}

struct Target {
    xs: Vec<f64>,
    phi: Vec<Complex64>,
    dx: f64,
}

impl Target {
    fn fidelity(&self, alpha: f64, r_prime: f64, parity: Parity) -> f64 {
        let shift = std::f64::consts::SQRT_2 * alpha;
        let sign = parity.sign();
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &p) in self.xs.iter().zip(&self.phi) {
            let c = squeezed_gaussian(x, shift, r_prime) + sign * squeezed_gaussian(x, -shift, r_prime);
            acc += p * c;
        }
        (acc * self.dx).norm_sqr() / cat_norm_sqr(alpha, r_prime, parity)
    }
}

impl CatFitter {
    pub fn new(cutoff: usize, search: FitSearch) -> Result<Self> {
        if search.alpha_points < 2 || search.r_points < 2 || !(search.r_max > search.r_min) || !(search.alpha_max > 0.0) {
            return Err(Error::InvalidParameter(format!("bad fit search {search:?}")));
        }
        Ok(Self {
            grid: PositionGrid::for_cutoff(cutoff),
            search,
        })
    }

    pub fn search(&self) -> &FitSearch {
        &self.search
    }

    fn target(&self, state: &FockState) -> Result<Target> {
        state.require_single()?;
        if state.cutoff() > self.grid.cutoff() {
            return Err(Error::InvalidDimension(format!(
                "fitter built for cutoff {}, state has {}",
                self.grid.cutoff(),
                state.cutoff()
            )));
        }
        let norm = state.norm_sqr().sqrt();
        let wf = self.grid.wavefunction(state.amplitudes());
        let peak = wf.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut xs = Vec::new();
        let mut phi = Vec::new();
        for (&x, z) in self.grid.xs().iter().zip(&wf) {
            if z.norm() > 1e-12 * peak {
                xs.push(x);
                phi.push(z / norm);
            }
        }
        Ok(Target {
            xs,
            phi,
            dx: self.grid.dx(),
        })
    }

    /// Cat fidelity `|<cat(alpha, r', parity)|psi>|^2` against the untruncated cat.
    pub fn fidelity(&self, state: &FockState, alpha: f64, r_prime: f64, parity: Parity) -> Result<f64> {
        Ok(self.target(state)?.fidelity(alpha, r_prime, parity))
    }

    pub fn fit(&self, state: &FockState) -> Result<CatFit> {
        let target = self.target(state)?;
        let parity_expect = state.parity();
        let candidates: Vec<Parity> = if parity_expect.abs() > 0.1 {
            vec![Parity::from_sign(parity_expect)]
        } else {
            vec![Parity::Even, Parity::Odd]
        };
        let mut best: Option<CatFit> = None;
        for parity in candidates {
            let fit = self.fit_parity(&target, parity);
            if best.map_or(true, |b| fit.fidelity > b.fidelity) {
                best = Some(fit);
            }
        }
        Ok(best.expect("at least one parity candidate"))
    }

    fn fit_parity(&self, target: &Target, parity: Parity) -> CatFit {
        let s = &self.search;
        let da = s.alpha_max / (s.alpha_points - 1) as f64;
        let dr = (s.r_max - s.r_min) / (s.r_points - 1) as f64;
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for i in 0..s.alpha_points {
            let alpha = i as f64 * da;
            for j in 0..s.r_points {
                let r = s.r_min + j as f64 * dr;
                let f = target.fidelity(alpha, r, parity);
                if f > best.2 {
                    best = (alpha, r, f);
                }
            }
        }
        let (mut alpha, mut r, mut f) = best;
        let (mut sa, mut sr) = (da, dr);
        for _ in 0..MAX_REFINE_SWEEPS {
            let before = f;
            let mut moved = false;
            for (ca, cr) in [(sa, 0.0), (-sa, 0.0), (0.0, sr), (0.0, -sr)] {
                // refinement stays inside the search box; a move against its edge
                // gains nothing and the step shrinks
                let na = (alpha + ca).clamp(0.0, s.alpha_max);
                let nr = (r + cr).clamp(s.r_min, s.r_max);
                let nf = target.fidelity(na, nr, parity);
                if nf > f + MIN_GAIN {
                    alpha = na;
                    r = nr;
                    f = nf;
                    moved = true;
                }
            }
            if !moved {
                sa *= 0.5;
                sr *= 0.5;
            }
            if sa < s.step_floor && sr < s.step_floor && f - before < s.tolerance {
                break;
            }
        }
        CatFit::new(alpha, r, parity, f.min(1.0))
    }
}

pub fn fit_squeezed_cat(state: &FockState, search: &FitSearch) -> Result<CatFit> {
    CatFitter::new(state.cutoff(), search.clone())?.fit(state)
}
