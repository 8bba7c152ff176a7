//! Threshold from crossings of logical-rate curves at different distances.

use std::collections::BTreeMap;

use gkp_core::seed::{seed_plan, Stage};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{QecError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub distance: usize,
    pub r_db: f64,
    pub trials: usize,
    pub failures: usize,
}

impl RatePoint {
    /// Continuity-corrected rate, finite at zero failures.
    pub fn smoothed_rate(&self) -> f64 {
        (self.failures as f64 + 0.5) / (self.trials as f64 + 1.0)
    }
}

/// `distance -> [(r, rate)]`, sorted by `r`.
pub type Curves = BTreeMap<usize, Vec<(f64, f64)>>;

pub fn curves_from_points(points: &[RatePoint]) -> Curves {
    let mut c: Curves = BTreeMap::new();
    for p in points {
        c.entry(p.distance).or_default().push((p.r_db, p.smoothed_rate()));
    }
    for v in c.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    c
}

fn validate(curves: &Curves) -> Result<()> {
    if curves.len() < 2 {
        return Err(QecError::InvalidParameter("need at least two distances".into()));
    }
    let grid: Vec<f64> = curves.values().next().unwrap().iter().map(|p| p.0).collect();
    if grid.len() < 4 {
        return Err(QecError::InvalidParameter("need at least four squeezing points".into()));
    }
    for v in curves.values() {
        if v.len() != grid.len() || v.iter().zip(&grid).any(|(p, r)| p.0 != *r) {
            return Err(QecError::InvalidParameter("distances sampled on different grids".into()));
        }
        if v.iter().any(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
            return Err(QecError::InvalidParameter("rates must be positive for log interpolation".into()));
        }
    }
    Ok(())
}

/// Lowest `r` where the larger distance stops being worse than the smaller one.
pub fn pair_crossing(small: &[(f64, f64)], large: &[(f64, f64)]) -> Option<f64> {
    let g: Vec<f64> = small.iter().zip(large).map(|(s, l)| l.1.ln() - s.1.ln()).collect();
    for k in 0..g.len() - 1 {
        let (g0, g1) = (g[k], g[k + 1]);
        if g0 == 0.0 && g1 < 0.0 {
            return Some(small[k].0);
        }
        if g0 > 0.0 && g1 <= 0.0 {
            let (r0, r1) = (small[k].0, small[k + 1].0);
            return Some(r0 + (r1 - r0) * g0 / (g0 - g1));
        }
    }
    None
}

/// Mean crossing over all distance pairs, `None` if any pair fails to cross.
pub fn crossing(curves: &Curves) -> Result<Option<f64>> {
    validate(curves)?;
    let ds: Vec<&usize> = curves.keys().collect();
    let mut xs = Vec::new();
    for i in 0..ds.len() {
        for j in (i + 1)..ds.len() {
            match pair_crossing(&curves[ds[i]], &curves[ds[j]]) {
                Some(x) => xs.push(x),
                None => return Ok(None),
            }
        }
    }
    Ok(Some(xs.iter().sum::<f64>() / xs.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub r_th: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub resamples: usize,
    /// Resamples in which every pair crossed.
    pub crossed: usize,
}

/// Threshold with a 95% percentile interval from a parametric binomial bootstrap.
pub fn threshold_estimate(points: &[RatePoint], resamples: usize, master: u64) -> Result<ThresholdEstimate> {
    let r_th = crossing(&curves_from_points(points))?;
    let mut rng = seed_plan(master, Stage::Bootstrap, 0, 0);
    let mut xs = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut boot = points.to_vec();
        for p in boot.iter_mut() {
            let rate = p.failures as f64 / p.trials.max(1) as f64;
            let b = Binomial::new(p.trials as u64, rate).map_err(|e| QecError::InvalidParameter(e.to_string()))?;
            p.failures = b.sample(&mut rng) as usize;
        }
        if let Some(x) = crossing(&curves_from_points(&boot))? {
            xs.push(x);
        }
    }
    xs.sort_by(f64::total_cmp);
    let pct = |q: f64| -> Option<f64> {
        if xs.is_empty() {
            return None;
        }
        let pos = q * (xs.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        Some(xs[lo] + (xs[hi] - xs[lo]) * (pos - lo as f64))
    };
    Ok(ThresholdEstimate {
        r_th,
        ci_low: pct(0.025),
        ci_high: pct(0.975),
        resamples,
        crossed: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(cross: f64, slopes: &[(usize, f64)]) -> Curves {
        let grid = [11.0, 11.25, 11.5, 11.75, 12.0];
        slopes
            .iter()
            .map(|&(d, b)| (d, grid.iter().map(|&r| (r, (-2.0 + b * (r - cross)).exp())).collect()))
            .collect()
    }

    #[test]
    fn injected_crossing_recovered() {
        let c = fixture(11.53, &[(3, -1.0), (5, -3.0), (7, -5.0)]);
        let x = crossing(&c).unwrap().unwrap();
        assert!((x - 11.53).abs() < 1e-12, "{x}");
    }

    #[test]
    fn parallel_curves_have_no_threshold() {
        let grid = [11.0, 11.25, 11.5, 11.75, 12.0];
        let c: Curves = [3usize, 5]
            .iter()
            .map(|&d| (d, grid.iter().map(|&r| (r, (-(d as f64) - r).exp())).collect()))
            .collect();
        assert_eq!(crossing(&c).unwrap(), None);
    }

    #[test]
    fn too_few_points_rejected() {
        let c: Curves = [3usize, 5].iter().map(|&d| (d, vec![(11.0, 0.1), (12.0, 0.01)])).collect();
        assert!(crossing(&c).is_err());
    }

    #[test]
    fn bootstrap_brackets_clean_crossing() {
        let mut pts = Vec::new();
        for (d, b) in [(3usize, -1.0), (5, -3.0)] {
            for k in 0..5 {
                let r = 11.0 + 0.25 * k as f64;
                let p = (-2.0f64 + b * (r - 11.53)).exp();
                let trials = 100_000;
                pts.push(RatePoint {
                    distance: d,
                    r_db: r,
                    trials,
                    failures: (p * trials as f64).round() as usize,
                });
            }
        }
        let t = threshold_estimate(&pts, 200, 9).unwrap();
        let x = t.r_th.unwrap();
        assert!((x - 11.53).abs() < 0.01);
        assert!(t.ci_low.unwrap() <= x && x <= t.ci_high.unwrap());
        assert_eq!(t.crossed, 200);
    }
}
