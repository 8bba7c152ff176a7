//! Experiment drivers: configuration in, schema rows and flag counts out.

use std::collections::BTreeMap;

use gkp_core::breeding::{breed_tree, mean_std, sample_gkp_distribution, BreedConfig, InputPreparer};
use gkp_core::catfit::{CatFit, CatFitter, FitSearch};
use gkp_core::exec::par_map;
use gkp_core::fock::states::{make_cat, Parity};
use gkp_core::seed::{seed_plan, stream_key, Stage};
use gkp_core::teleport::{subtraction_statistics, CatRunRecord, PhantmConfig, PhantmKernel, RunFlag, SubtractionStats};
use gkp_core::units::{corrected_amplitude, source_from_cluster, SqueezingValue};
use gkp_qec::lattice::{Boundary, RhgLattice};
use gkp_qec::noise::NoiseModel;
use gkp_qec::rate::logical_rate;
use gkp_qec::sweep::{gaussian_boundary_sweep, SweepConfig, SweepResult};
use gkp_qec::threshold::{threshold_estimate, RatePoint, ThresholdEstimate};

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::manifest::FlagCounts;
use crate::schema::{CatRunRow, GkpSampleRow, PhotonHistRow, QecRateRow};

pub fn phantm_config(cfg: &Config, r_db: f64, antisqueeze: bool) -> PhantmConfig {
    let p = &cfg.phantm;
    PhantmConfig {
        r0: source_from_cluster(SqueezingValue::from_db(r_db)).source,
        n_steps: p.n_steps as usize,
        subtractors_per_step: p.subtractors as usize,
        theta0: p.theta0,
        grad_a: p.grad_a,
        grad_b: p.grad_b,
        ra1: SqueezingValue::from_db(p.ra1_db),
        ra2: SqueezingValue::from_db(p.ra2_db),
        t_ph: p.t_ph as usize,
        cutoff: p.cutoff as usize,
        antisqueeze_enabled: antisqueeze,
    }
}

pub fn fit_search(cfg: &Config) -> FitSearch {
    let f = &cfg.fit;
    FitSearch {
        alpha_max: f.alpha_max,
        r_min: f.r_min,
        r_max: f.r_max,
        alpha_points: f.alpha_points as usize,
        r_points: f.r_points as usize,
        tolerance: f.tolerance,
        step_floor: f.step_floor,
    }
}

pub fn breed_config(cfg: &Config, r_db: f64) -> Result<BreedConfig> {
    let b = &cfg.breed;
    let mut out = BreedConfig::at_cluster_db(r_db)?;
    out.rounds = b.rounds as u32;
    out.cutoff = b.cutoff as usize;
    out.amplitude_unit = b.amplitude_unit;
    out.max_draws = b.max_draws as usize;
    out.leak_tolerance = b.leak_tolerance;
    out.validate()?;
    Ok(out)
}

fn run_flags(rec: &CatRunRecord) -> String {
    rec.truncation_flags
        .iter()
        .map(|f| match f {
            RunFlag::Truncation { step } => format!("truncation@{step}"),
            RunFlag::Saturation { step, detector } => format!("saturation@{step}/{}", detector + 1),
            RunFlag::HomodyneRetry => "retry".to_string(),
        })
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, Default)]
pub struct CatBatch {
    pub rows: Vec<CatRunRow>,
    pub hist: Vec<PhotonHistRow>,
    pub flags: FlagCounts,
}

impl CatBatch {
    /// Mean corrected amplitude over accepted fits and its standard error.
    pub fn alpha_c_summary(&self) -> (f64, f64, usize) {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.accepted).map(|r| r.alpha_c).collect();
        let (m, s) = mean_std(&v);
        (m, s / (v.len() as f64).sqrt(), v.len())
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.rows.iter().filter(|r| r.accepted).count() as f64 / self.rows.len().max(1) as f64
    }
}

/// PhANTM runs with fits. Trial `t` draws from `(master, Phantm, t, 0)`, so two
/// batches with the same master are paired seed by seed.
pub fn cat_batch(cfg: &Config, r_db: f64, antisqueeze: bool, trials: usize, master: u64) -> Result<CatBatch> {
    let pc = phantm_config(cfg, r_db, antisqueeze);
    let kernel = PhantmKernel::new(&pc)?;
    let fitter = CatFitter::new(pc.cutoff, fit_search(cfg))?;
    let results = par_map((0..trials as u64).collect(), |t| {
        let mut rng = seed_plan(master, Stage::Phantm, t, 0);
        let seed = stream_key(master, Stage::Phantm, t, 0);
        let rec = kernel.run(&mut rng, seed)?;
        let fit = fitter.fit(&rec.final_state)?;
        Ok::<_, gkp_core::Error>((t, rec, fit))
    });
    let mut batch = CatBatch::default();
    let mut hist: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for r in results {
        batch.flags.trials += 1;
        let (t, rec, fit) = match r {
            Ok(v) => v,
            Err(_) => {
                batch.flags.failed += 1;
                batch.flags.flagged += 1;
                continue;
            }
        };
        for step in &rec.per_step {
            for (i, &n) in step.photons.iter().enumerate() {
                *hist.entry((i as u64 + 1, n as u64)).or_default() += 1;
            }
        }
        let last = rec.per_step.len().saturating_sub(1);
        let final_trunc = rec
            .truncation_flags
            .iter()
            .any(|f| matches!(f, RunFlag::Truncation { step } if *step == last));
        let sat = rec.saturated();
        batch.flags.truncation += rec.truncated() as usize;
        batch.flags.final_truncation += final_trunc as usize;
        batch.flags.saturation += sat as usize;
        batch.flags.flagged += (final_trunc || sat) as usize;
        batch.flags.retries += rec.retries();
        batch.flags.rejected_fits += !fit.accepted as usize;
        batch.rows.push(CatRunRow {
            trial: t,
            seed: rec.seed,
            r_db,
            total_photons: rec.total_photons as u64,
            alpha: fit.alpha,
            r_prime: fit.r_prime,
            parity: fit.parity.sign() as i8,
            fidelity: fit.fidelity,
            alpha_c: fit.alpha_c,
            accepted: fit.accepted,
            flags: run_flags(&rec),
        });
    }
    batch.hist = photon_hist(&hist, pc.subtractors_per_step as u64);
    Ok(batch)
}

/// Dense histogram: every detector gets rows `n = 0..=max n seen`.
fn photon_hist(counts: &BTreeMap<(u64, u64), u64>, detectors: u64) -> Vec<PhotonHistRow> {
    let n_max = counts.keys().map(|k| k.1).max().unwrap_or(0);
    (1..=detectors)
        .flat_map(|d| {
            (0..=n_max).map(move |n| PhotonHistRow {
                detector_index: d,
                n,
                count: counts.get(&(d, n)).copied().unwrap_or(0),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StatsCurve {
    pub r_a: Vec<f64>,
    pub gate: Vec<SubtractionStats>,
    pub baseline: SubtractionStats,
    pub p0_crossing: Option<f64>,
    pub n_crossing: Option<f64>,
}

/// First sign change of `y - base` along `x`, linearly interpolated.
pub fn first_crossing(x: &[f64], y: &[f64], base: f64) -> Option<f64> {
    let g: Vec<f64> = y.iter().map(|v| v - base).collect();
    for k in 0..g.len().saturating_sub(1) {
        if g[k] == 0.0 {
            return Some(x[k]);
        }
        if g[k].signum() != g[k + 1].signum() {
            return Some(x[k] + (x[k + 1] - x[k]) * g[k] / (g[k] - g[k + 1]));
        }
    }
    None
}

/// One-detector click statistics of a fixed cat with and without the anti-squeezing gate.
pub fn stats_curve(cfg: &Config) -> Result<StatsCurve> {
    let s = &cfg.stats;
    let parity = if s.odd { Parity::Odd } else { Parity::Even };
    let cat = make_cat(s.alpha, s.r_prime, parity, s.cutoff as usize)?;
    let r0 = source_from_cluster(SqueezingValue::from_db(s.r_db)).source;
    let n = s.ra_points as usize;
    let r_a: Vec<f64> = (0..n).map(|i| s.ra_max * i as f64 / (n - 1) as f64).collect();
    let baseline = subtraction_statistics(&cat, r0, None, s.theta_bs)?;
    let gate = par_map(r_a.clone(), |ra| subtraction_statistics(&cat, r0, Some(ra), s.theta_bs))
        .into_iter()
        .collect::<gkp_core::Result<Vec<_>>>()?;
    let p0: Vec<f64> = gate.iter().map(|g| g.p0).collect();
    let nm: Vec<f64> = gate.iter().map(|g| g.n_mean).collect();
    Ok(StatsCurve {
        p0_crossing: first_crossing(&r_a, &p0, baseline.p0),
        n_crossing: first_crossing(&r_a, &nm, baseline.n_mean),
        r_a,
        gate,
        baseline,
    })
}

/// Breeding of ideal squeezed cats at `breed.alpha_c`, `breed.r_prime` through the adaptive chain.
pub fn ideal_breed(cfg: &Config) -> Result<GkpSampleRow> {
    let b = &cfg.breed;
    let bc = breed_config(cfg, b.r_db)?;
    let alpha = b.alpha_c * (-b.r_prime).exp();
    let state = make_cat(alpha, b.r_prime, Parity::Even, bc.cutoff)?;
    let fit = CatFit {
        alpha,
        r_prime: b.r_prime,
        parity: Parity::Even,
        fidelity: 1.0,
        alpha_c: corrected_amplitude(alpha, b.r_prime),
        accepted: true,
    };
    let prep = InputPreparer::new(&bc)?;
    let inputs = (0..bc.inputs()).map(|_| prep.prepare(&state, &fit)).collect::<gkp_core::Result<Vec<_>>>()?;
    let forced = inputs.iter().filter(|i| i.forced).count();
    let res = breed_tree(inputs, &bc)?;
    Ok(GkpSampleRow {
        trial: 0,
        seed: 0,
        r_db: b.r_db,
        dq_db: res.sample.dq_db,
        dp_db: res.sample.dp_db,
        substitutions: res.sample.substitutions as u64,
        flags: if forced > 0 { format!("forced={forced}") } else { String::new() },
    })
}

pub fn gkp_batch(cfg: &Config, r_db: f64, trials: usize, master: u64) -> Result<(Vec<GkpSampleRow>, FlagCounts)> {
    let batch = sample_gkp_distribution(
        &phantm_config(cfg, r_db, cfg.phantm.antisqueeze),
        &breed_config(cfg, r_db)?,
        fit_search(cfg),
        trials,
        master,
    )?;
    let mut flags = FlagCounts {
        trials,
        failed: batch.failed.len(),
        flagged: batch.failed.len(),
        ..Default::default()
    };
    let mut rows = Vec::with_capacity(batch.trials.len());
    // trials come back in order with failures removed; recover indices from the failure list
    let failed: Vec<u64> = batch.failed.iter().map(|f| f.0).collect();
    let indices = (0..trials as u64).filter(|t| !failed.contains(t));
    for (t, tr) in indices.zip(&batch.trials) {
        flags.rejected_fits += tr.redraws;
        flags.forced_substitutions += tr.forced;
        let mut f = Vec::new();
        if tr.redraws > 0 {
            f.push(format!("redraws={}", tr.redraws));
        }
        if tr.forced > 0 {
            f.push(format!("forced={}", tr.forced));
        }
        rows.push(GkpSampleRow {
            trial: t,
            seed: tr.sample.seed,
            r_db,
            dq_db: tr.sample.dq_db,
            dp_db: tr.sample.dp_db,
            substitutions: tr.sample.substitutions as u64,
            flags: f.join(";"),
        });
    }
    Ok((rows, flags))
}

/// Empirical noise groups, one per distinct `r_db` in the sample rows, ascending.
pub fn empirical_groups(rows: &[GkpSampleRow]) -> Vec<(f64, Vec<(f64, f64)>)> {
    let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    let mut sorted: Vec<&GkpSampleRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.r_db.total_cmp(&b.r_db).then(a.trial.cmp(&b.trial)));
    for r in sorted {
        match groups.last_mut() {
            Some((x, v)) if *x == r.r_db => v.push((r.dq_db, r.dp_db)),
            _ => groups.push((r.r_db, vec![(r.dq_db, r.dp_db)])),
        }
    }
    groups
}

/// Stream lane of one `(point index, distance)` rate estimate.
fn rate_lane(point: usize, distance: usize) -> u64 {
    ((point as u64) << 8) | distance as u64
}

/// Logical rates for each `(r, model)` point and distance, sorted by `(r, d)`.
pub fn qec_rate_rows(
    points: &[(f64, NoiseModel)],
    source: &str,
    sigma_db: f64,
    distances: &[u64],
    trials: usize,
    master: u64,
) -> Result<(Vec<QecRateRow>, FlagCounts)> {
    let lattices = distances
        .iter()
        .map(|&d| RhgLattice::new(d as usize, Boundary::PeriodicTransverse))
        .collect::<gkp_qec::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut flags = FlagCounts::default();
    for (pi, (r, model)) in points.iter().enumerate() {
        for lat in &lattices {
            let est = logical_rate(lat, model, trials, master, rate_lane(pi, lat.distance()))?;
            flags.trials += est.trials;
            flags.decoder_flags += est.flagged;
            rows.push(QecRateRow {
                source: source.to_string(),
                r_db_or_mu: *r,
                sigma_db,
                distance: lat.distance() as u64,
                trials: est.trials as u64,
                failures: est.failures as u64,
                rate: est.rate,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                master_seed: master,
            });
        }
    }
    Ok((rows, flags))
}

pub fn empirical_points(rows: &[GkpSampleRow], link_weight: f64) -> Result<Vec<(f64, NoiseModel)>> {
    empirical_groups(rows)
        .into_iter()
        .map(|(r, s)| {
            let mut m = NoiseModel::empirical(s)?;
            m.link_weight = link_weight;
            Ok((r, m))
        })
        .collect()
}

pub fn gaussian_points(r_db: &[f64], sigma_db: f64, link_weight: f64) -> Result<Vec<(f64, NoiseModel)>> {
    r_db.iter()
        .map(|&r| {
            let mut m = NoiseModel::gaussian(r, r, sigma_db)?;
            m.link_weight = link_weight;
            Ok((r, m))
        })
        .collect()
}

pub fn threshold_from_rows(rows: &[QecRateRow], resamples: usize, master: u64) -> Result<ThresholdEstimate> {
    let points: Vec<RatePoint> = rows
        .iter()
        .map(|r| RatePoint {
            distance: r.distance as usize,
            r_db: r.r_db_or_mu,
            trials: r.trials as usize,
            failures: r.failures as usize,
        })
        .collect();
    Ok(threshold_estimate(&points, resamples, master)?)
}

pub fn sweep(cfg: &Config) -> Result<SweepResult> {
    let s = &cfg.sweep;
    let sc = SweepConfig {
        mu_q_db: s.mu_q_db.clone(),
        mu_p_db: s.mu_p_db.clone(),
        sigma_db: s.sigma_db.clone(),
        small: s.small as usize,
        large: s.large as usize,
        trials: cfg.scaled(s.trials),
        link_weight: cfg.qec.link_weight,
        master: cfg.run.master_seed,
    };
    Ok(gaussian_boundary_sweep(&sc)?)
}

/// Mean `(dq, dp)` of a sample set.
pub fn mean_point(rows: &[GkpSampleRow]) -> Result<(f64, f64)> {
    if rows.is_empty() {
        return Err(HarnessError::Config("no GKP samples".into()));
    }
    let n = rows.len() as f64;
    Ok((
        rows.iter().map(|r| r.dq_db).sum::<f64>() / n,
        rows.iter().map(|r| r.dp_db).sum::<f64>() / n,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let x = [0.0, 0.1, 0.2];
        assert!((first_crossing(&x, &[1.0, 0.5, -0.5], 0.0).unwrap() - 0.15).abs() < 1e-15);
        assert_eq!(first_crossing(&x, &[1.0, 2.0, 3.0], 0.0), None);
    }

    #[test]
    fn groups_sorted_by_r() {
        let row = |t, r| GkpSampleRow {
            trial: t,
            seed: 0,
            r_db: r,
            dq_db: t as f64,
            dp_db: 0.0,
            substitutions: 0,
            flags: String::new(),
        };
        let g = empirical_groups(&[row(1, 12.0), row(0, 11.0), row(0, 12.0)]);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].0, 11.0);
        assert_eq!(g[1].1, vec![(0.0, 0.0), (1.0, 0.0)]);
    }

    #[test]
    fn histogram_dense() {
        let mut c = BTreeMap::new();
        c.insert((1, 2), 5);
        let h = photon_hist(&c, 2);
        assert_eq!(h.len(), 6);
        assert_eq!(h.iter().map(|r| r.count).sum::<u64>(), 5);
    }
}
