//! Logical error rates over independent trials.

use gkp_core::exec::par_map;
use gkp_core::seed::{seed_plan, Stage};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QecError, Result};
use crate::lattice::RhgLattice;
use crate::memory::run_memory_trial;
use crate::noise::NoiseModel;

pub const MIN_TRIALS: usize = 100;
/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub trials: usize,
    pub failures: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Trials with a regularised block, an underflowed series or an uninformative face.
    pub flagged: usize,
}

pub fn wilson_interval(failures: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

impl RateEstimate {
    pub fn from_counts(failures: usize, trials: usize, flagged: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(failures, trials, Z95);
        Self {
            trials,
            failures,
            rate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
            ci_low,
            ci_high,
            flagged,
        }
    }
}

/// Runs `trials` independent copies of `trial` on per-trial streams of `(master, point)`.
/// Each call returns `(failed, flagged)`; results are merged in trial order.
pub fn estimate_rate<F>(trials: usize, master: u64, point: u64, trial: F) -> Result<RateEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<(bool, bool)> + Sync + Send,
{
    if trials < MIN_TRIALS {
        return Err(QecError::InvalidParameter(format!("{trials} trials, need at least {MIN_TRIALS}")));
    }
    let outcomes = par_map((0..trials as u64).collect(), |t| {
        let mut rng = seed_plan(master, Stage::Qec, t, point);
        trial(&mut rng)
    });
    let (mut failures, mut flagged) = (0, 0);
    for o in outcomes {
        let (f, g) = o?;
        failures += f as usize;
        flagged += g as usize;
    }
    Ok(RateEstimate::from_counts(failures, trials, flagged))
}

pub fn logical_rate(lattice: &RhgLattice, model: &NoiseModel, trials: usize, master: u64, point: u64) -> Result<RateEstimate> {
    model.validate()?;
    estimate_rate(trials, master, point, |rng| {
        let o = run_memory_trial(lattice, model, rng)?;
        let flagged = o.regularized_blocks + o.underflows + o.uninformative_faces > 0;
        Ok((o.logical_error, flagged))
    })
}
