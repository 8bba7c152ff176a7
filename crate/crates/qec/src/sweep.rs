//! Correctable/uncorrectable frontier in the (mu_q, mu_p) plane for Gaussian-spread GKP noise.

use serde::{Deserialize, Serialize};

use crate::error::{QecError, Result};
use crate::lattice::{Boundary, RhgLattice};
use crate::noise::NoiseModel;
use crate::rate::{logical_rate, RateEstimate};

/// Points where both distances together fail fewer times are taken as correctable.
pub const MIN_FAILURES: usize = 5;

/// Frontier along ascending `mu_p`, scanning down from the correctable end.
///
/// The first point where `rate(large) >= rate(small)` (smoothed rates) closes the
/// scan; the frontier is interpolated linearly in `ln r_large - ln r_small`
/// between it and the point above. `None` if every point is correctable or the
/// top point already is not.
pub fn frontier_crossing(small: &[RateEstimate], large: &[RateEstimate], mu_p: &[f64]) -> Option<f64> {
    let smooth = |e: &RateEstimate| (e.failures as f64 + 0.5) / (e.trials as f64 + 1.0);
    let g: Vec<Option<f64>> = small
        .iter()
        .zip(large)
        .map(|(s, l)| (s.failures + l.failures >= MIN_FAILURES).then(|| smooth(l).ln() - smooth(s).ln()))
        .collect();
    let top = mu_p.len() - 1;
    for k in (0..=top).rev() {
        let Some(gk) = g[k] else { continue };
        if gk < 0.0 {
            continue;
        }
        if k == top {
            return None;
        }
        return Some(match g[k + 1] {
            Some(g1) => mu_p[k] + (mu_p[k + 1] - mu_p[k]) * gk / (gk - g1),
            None => 0.5 * (mu_p[k] + mu_p[k + 1]),
        });
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub mu_q_db: Vec<f64>,
    /// Searched in ascending order for the frontier.
    pub mu_p_db: Vec<f64>,
    pub sigma_db: Vec<f64>,
    pub small: usize,
    pub large: usize,
    pub trials: usize,
    pub link_weight: f64,
    pub master: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if self.mu_q_db.is_empty() || self.mu_p_db.len() < 2 || self.sigma_db.is_empty() {
            return Err(QecError::InvalidParameter("empty sweep grid".into()));
        }
        if !sorted(&self.mu_q_db) || !sorted(&self.mu_p_db) {
            return Err(QecError::InvalidParameter("sweep grids must be strictly increasing".into()));
        }
        if self.small >= self.large {
            return Err(QecError::InvalidParameter("small distance must be below large".into()));
        }
        if self.sigma_db.iter().any(|s| !(*s >= 0.0)) {
            return Err(QecError::InvalidParameter("negative sigma".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRate {
    pub mu_q_db: f64,
    pub mu_p_db: f64,
    pub sigma_db: f64,
    pub distance: usize,
    pub estimate: RateEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub sigma_db: f64,
    /// `(mu_q, mu_p on the frontier)`; `None` when the whole `mu_p` range is on one side.
    pub points: Vec<(f64, Option<f64>)>,
}

impl BoundaryCurve {
    /// Frontier `mu_p` at `mu_q`, linear between sampled points.
    pub fn frontier_at(&self, mu_q: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.points.iter().filter_map(|&(q, p)| p.map(|p| (q, p))).collect();
        let first = pts.first()?;
        let last = pts.last()?;
        if mu_q < first.0 || mu_q > last.0 {
            return None;
        }
        for w in pts.windows(2) {
            if mu_q >= w[0].0 && mu_q <= w[1].0 {
                let t = (mu_q - w[0].0) / (w[1].0 - w[0].0);
                return Some(w[0].1 + t * (w[1].1 - w[0].1));
            }
        }
        Some(first.1)
    }

    /// Correctable when `mu_p` lies above the frontier.
    pub fn is_correctable(&self, mu_q: f64, mu_p: f64) -> Option<bool> {
        self.frontier_at(mu_q).map(|b| mu_p >= b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rates: Vec<SweepRate>,
    pub boundaries: Vec<BoundaryCurve>,
}

// sigma is left out of the key: all sigma curves reuse one set of draws
fn point_key(qi: usize, pi: usize, d: usize) -> u64 {
    (((qi as u64) << 16) | ((pi as u64) << 8)) + d as u64
}

pub fn gaussian_boundary_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let small = RhgLattice::new(cfg.small, Boundary::PeriodicTransverse)?;
    let large = RhgLattice::new(cfg.large, Boundary::PeriodicTransverse)?;
    let mut rates = Vec::new();
    let mut boundaries = Vec::new();
    for &sigma in &cfg.sigma_db {
        let mut points = Vec::new();
        for (qi, &mu_q) in cfg.mu_q_db.iter().enumerate() {
            let mut est_s = Vec::new();
            let mut est_l = Vec::new();
            for (pi, &mu_p) in cfg.mu_p_db.iter().enumerate() {
                let mut model = NoiseModel::gaussian(mu_q, mu_p, sigma)?;
                model.link_weight = cfg.link_weight;
                for (lat, ests) in [(&small, &mut est_s), (&large, &mut est_l)] {
                    let d = lat.distance();
                    let est = logical_rate(lat, &model, cfg.trials, cfg.master, point_key(qi, pi, d))?;
                    ests.push(est);
                    rates.push(SweepRate {
                        mu_q_db: mu_q,
                        mu_p_db: mu_p,
                        sigma_db: sigma,
                        distance: d,
                        estimate: est,
                    });
                }
            }
            points.push((mu_q, frontier_crossing(&est_s, &est_l, &cfg.mu_p_db)));
        }
        boundaries.push(BoundaryCurve { sigma_db: sigma, points });
    }
    Ok(SweepResult { rates, boundaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frontier_interpolates() {
        let b = BoundaryCurve {
            sigma_db: 0.0,
            points: vec![(8.0, Some(12.0)), (10.0, Some(10.0)), (12.0, None)],
        };
        assert_eq!(b.frontier_at(9.0), Some(11.0));
        assert_eq!(b.is_correctable(9.0, 11.5), Some(true));
        assert_eq!(b.is_correctable(9.0, 10.5), Some(false));
        assert_eq!(b.frontier_at(11.0), None);
    }

    #[test]
    fn crossing_found_from_correctable_end() {
        let mu_p = [7.0, 8.0, 9.0, 10.0, 11.0];
        let n = 10_000;
        let e = |f: usize| RateEstimate::from_counts(f, n, 0);
        // saturated at 7, large worse at 8, crossing between 9 and 10, clean above
        let small = [e(7500), e(3000), e(1000), e(300), e(0)];
        let large = [e(7500), e(4000), e(1100), e(100), e(0)];
        let x = frontier_crossing(&small, &large, &mu_p).unwrap();
        let sm = |f: f64| (f + 0.5) / (n as f64 + 1.0);
        let g9 = (sm(1100.0) / sm(1000.0)).ln();
        let g10 = (sm(100.0) / sm(300.0)).ln();
        assert!((x - (9.0 + g9 / (g9 - g10))).abs() < 1e-12);
        assert_eq!(frontier_crossing(&small[..4], &small[..4], &mu_p[..4]), None);
        // swapped roles: large worse already at 10, top point too clean to interpolate
        assert_eq!(frontier_crossing(&large, &small, &mu_p), Some(10.5));
    }

    #[test]
    fn grids_validated() {
        let cfg = SweepConfig {
            mu_q_db: vec![9.0],
            mu_p_db: vec![10.0, 9.0],
            sigma_db: vec![0.0],
            small: 3,
            large: 5,
            trials: 100,
            link_weight: crate::noise::DEFAULT_LINK_WEIGHT,
            master: 1,
        };
        assert!(gaussian_boundary_sweep(&cfg).is_err());
    }
}
