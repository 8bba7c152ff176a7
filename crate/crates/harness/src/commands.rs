//! Command dispatch: run one experiment, write its CSVs and manifest into `run.out_dir`.

use std::collections::BTreeMap;
use std::path::Path;

use gkp_core::breeding::mean_std;

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::experiments::{
    cat_batch, empirical_points, gaussian_points, gkp_batch, ideal_breed, mean_point, qec_rate_rows, stats_curve, sweep,
    threshold_from_rows,
};
use crate::manifest::{FlagCounts, RunManifest};
use crate::schema::{fmt_f64, load_samples, persist_samples, GkpSampleRow, QecRateRow, Table};

pub const FIGURES: [&str; 7] = ["2d", "3b", "4", "5", "6", "9", "10"];

struct Outputs<'a> {
    dir: &'a Path,
    files: BTreeMap<String, String>,
    flags: FlagCounts,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            files: BTreeMap::new(),
            flags: FlagCounts::default(),
        }
    }

    fn path(&mut self, stage: &str, file: &str) -> std::path::PathBuf {
        self.files.insert(stage.to_string(), file.to_string());
        self.dir.join(file)
    }

    fn table(&mut self, stage: &str, file: &str, t: &Table) -> Result<()> {
        let p = self.path(stage, file);
        t.write(&p)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Runs `words` (command plus arguments) and writes the manifest. The flag budget is
/// checked after all artifacts are on disk.
pub fn run_command(words: &[String], cfg: &Config) -> Result<RunManifest> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir)?;
    let mut out = Outputs::new(&dir);
    let master = cfg.run.master_seed;
    let cmd = words.first().map(String::as_str).unwrap_or("");
    match cmd {
        "phantm" => {
            let b = cat_batch(cfg, cfg.phantm.r_db, cfg.phantm.antisqueeze, cfg.scaled(cfg.phantm.trials), master)?;
            persist_samples(&b.rows, &out.path("cat_runs", "cat_runs.csv"))?;
            persist_samples(&b.hist, &out.path("photon_hist", "photon_hist.csv"))?;
            out.flags.add(&b.flags);
        }
        "stats" => stats(cfg, &mut out)?,
        "breed" => {
            let row = ideal_breed(cfg)?;
            persist_samples(&[row], &out.path("breed", "breed.csv"))?;
        }
        "gkp" => {
            let mut rows = Vec::new();
            for &r in &cfg.gkp.r_db {
                let (rs, f) = gkp_batch(cfg, r, cfg.scaled(cfg.gkp.trials), master)?;
                rows.extend(rs);
                out.flags.add(&f);
            }
            persist_samples(&rows, &out.path("gkp_samples", "gkp_samples.csv"))?;
        }
        "qec-rate" => {
            let q = &cfg.qec;
            let points = if q.source == "empirical" {
                let samples: Vec<GkpSampleRow> = load_samples(&cfg.resolve(&q.samples))?;
                empirical_points(&samples, q.link_weight)?
            } else {
                gaussian_points(&q.r_db, q.sigma_db, q.link_weight)?
            };
            let sigma = if q.source == "empirical" { 0.0 } else { q.sigma_db };
            let (rows, f) = qec_rate_rows(&points, &q.source, sigma, &q.distances, cfg.scaled(q.trials), master)?;
            persist_samples(&rows, &out.path("qec_rates", "qec_rates.csv"))?;
            out.flags.add(&f);
        }
        "threshold" => {
            let rows: Vec<QecRateRow> = load_samples(&cfg.resolve(&cfg.threshold.rates))?;
            threshold(cfg, &rows, &mut out)?;
        }
        "sweep" => sweep_outputs(cfg, &mut out, None)?,
        "reproduce-figure" => {
            let fig = words.get(1).map(String::as_str).unwrap_or("");
            figure(fig, cfg, &mut out)?;
        }
        other => return Err(HarnessError::Config(format!("unknown command `{other}`"))),
    }
    let manifest = RunManifest::new(&words.join(" "), cfg, out.files, out.flags);
    manifest.write(&dir)?;
    manifest.flags.check_budget(cfg.run.flag_budget)?;
    Ok(manifest)
}

fn stats(cfg: &Config, out: &mut Outputs) -> Result<()> {
    let c = stats_curve(cfg)?;
    let mut t = Table::new(&["r_a", "variant", "p0", "n_mean"]);
    for (ra, g) in c.r_a.iter().zip(&c.gate) {
        t.push(vec![fmt_f64(*ra), "gate".into(), fmt_f64(g.p0), fmt_f64(g.n_mean)]);
        t.push(vec![fmt_f64(*ra), "baseline".into(), fmt_f64(c.baseline.p0), fmt_f64(c.baseline.n_mean)]);
    }
    out.table("stats", "stats.csv", &t)?;
    let mut x = Table::new(&["quantity", "r_a_crossing"]);
    x.push(vec!["p0".into(), opt(c.p0_crossing)]);
    x.push(vec!["n_mean".into(), opt(c.n_crossing)]);
    out.table("stats_crossing", "stats_crossing.csv", &x)
}

fn threshold(cfg: &Config, rows: &[QecRateRow], out: &mut Outputs) -> Result<()> {
    let est = threshold_from_rows(rows, cfg.threshold.resamples as usize, cfg.run.master_seed)?;
    let mut t = Table::new(&["r_th", "ci_low", "ci_high", "resamples", "crossed"]);
    t.push(vec![
        opt(est.r_th),
        opt(est.ci_low),
        opt(est.ci_high),
        est.resamples.to_string(),
        est.crossed.to_string(),
    ]);
    out.table("threshold", "threshold.csv", &t)
}

fn sweep_outputs(cfg: &Config, out: &mut Outputs, star: Option<(f64, f64)>) -> Result<()> {
    let res = sweep(cfg)?;
    let mut rates = Table::new(&[
        "mu_q_db", "mu_p_db", "sigma_db", "distance", "trials", "failures", "rate", "ci_low", "ci_high", "master_seed",
    ]);
    for r in &res.rates {
        out.flags.trials += r.estimate.trials;
        out.flags.decoder_flags += r.estimate.flagged;
        rates.push(vec![
            fmt_f64(r.mu_q_db),
            fmt_f64(r.mu_p_db),
            fmt_f64(r.sigma_db),
            r.distance.to_string(),
            r.estimate.trials.to_string(),
            r.estimate.failures.to_string(),
            fmt_f64(r.estimate.rate),
            fmt_f64(r.estimate.ci_low),
            fmt_f64(r.estimate.ci_high),
            cfg.run.master_seed.to_string(),
        ]);
    }
    out.table("sweep_rates", "sweep_rates.csv", &rates)?;
    let mut b = Table::new(&["sigma_db", "mu_q_db", "mu_p_db_boundary"]);
    for c in &res.boundaries {
        for (q, p) in &c.points {
            b.push(vec![fmt_f64(c.sigma_db), fmt_f64(*q), opt(*p)]);
        }
    }
    out.table("sweep_boundary", "sweep_boundary.csv", &b)?;
    if let Some((q, p)) = star {
        let mut s = Table::new(&["mu_q_db", "mu_p_db", "sigma_db", "correctable"]);
        for c in &res.boundaries {
            let verdict = c.is_correctable(q, p).map(|v| v.to_string()).unwrap_or_default();
            s.push(vec![fmt_f64(q), fmt_f64(p), fmt_f64(c.sigma_db), verdict]);
        }
        out.table("star", "fig6_star.csv", &s)?;
    }
    Ok(())
}

fn figure(fig: &str, cfg: &Config, out: &mut Outputs) -> Result<()> {
    let f = &cfg.figure;
    let master = cfg.run.master_seed;
    match fig {
        "2d" => stats(cfg, out),
        "3b" => {
            let mut t = Table::new(&["r_db", "mean_alpha_c", "sem", "variant", "accepted", "trials"]);
            for &r in &f.fig3b_r_db {
                for (anti, name) in [(true, "anti-squeezing"), (false, "baseline")] {
                    let b = cat_batch(cfg, r, anti, cfg.scaled(f.fig3b_trials), master)?;
                    let (m, sem, n) = b.alpha_c_summary();
                    out.flags.add(&b.flags);
                    t.push(vec![fmt_f64(r), fmt_f64(m), fmt_f64(sem), name.into(), n.to_string(), b.rows.len().to_string()]);
                }
            }
            out.table("fig3b", "fig3b.csv", &t)
        }
        "4" => {
            let mut t = Table::new(&["r_db", "mean_dq_db", "sd_dq_db", "mean_dp_db", "sd_dp_db", "mean_sum_db", "samples"]);
            let mut all = Vec::new();
            for &r in &f.fig4_r_db {
                let (rows, fl) = gkp_batch(cfg, r, cfg.scaled(f.fig4_trials), master)?;
                out.flags.add(&fl);
                let (mq, sq) = mean_std(&rows.iter().map(|x| x.dq_db).collect::<Vec<_>>());
                let (mp, sp) = mean_std(&rows.iter().map(|x| x.dp_db).collect::<Vec<_>>());
                t.push(vec![fmt_f64(r), fmt_f64(mq), fmt_f64(sq), fmt_f64(mp), fmt_f64(sp), fmt_f64(mq + mp), rows.len().to_string()]);
                all.extend(rows);
            }
            persist_samples(&all, &out.path("gkp_samples", "gkp_samples.csv"))?;
            out.table("fig4", "fig4.csv", &t)
        }
        "5" => {
            let mut samples = Vec::new();
            for &r in &f.fig5_r_db {
                let (rows, fl) = gkp_batch(cfg, r, cfg.scaled(f.fig5_gkp_trials), master)?;
                out.flags.add(&fl);
                samples.extend(rows);
            }
            persist_samples(&samples, &out.path("gkp_samples", "gkp_samples.csv"))?;
            let points = empirical_points(&samples, cfg.qec.link_weight)?;
            let (rows, fl) = qec_rate_rows(&points, "empirical", 0.0, &f.fig5_distances, cfg.scaled(f.fig5_trials), master)?;
            out.flags.add(&fl);
            persist_samples(&rows, &out.path("qec_rates", "qec_rates.csv"))?;
            threshold(cfg, &rows, out)
        }
        "6" => {
            let (rows, fl) = gkp_batch(cfg, f.fig10_r_db, cfg.scaled(f.fig10_trials), master)?;
            out.flags.add(&fl);
            persist_samples(&rows, &out.path("gkp_samples", "gkp_samples.csv"))?;
            sweep_outputs(cfg, out, Some(mean_point(&rows)?))
        }
        "9" => {
            let b = cat_batch(cfg, f.fig9_r_db, cfg.phantm.antisqueeze, cfg.scaled(f.fig9_trials), master)?;
            out.flags.add(&b.flags);
            persist_samples(&b.rows, &out.path("cat_runs", "cat_runs.csv"))?;
            persist_samples(&b.hist, &out.path("photon_hist", "photon_hist.csv"))
        }
        "10" => {
            let (rows, fl) = gkp_batch(cfg, f.fig10_r_db, cfg.scaled(f.fig10_trials), master)?;
            out.flags.add(&fl);
            persist_samples(&rows, &out.path("gkp_samples", "gkp_samples.csv"))
        }
        other => Err(HarnessError::Config(format!(
            "unknown figure `{other}`, expected one of {}",
            FIGURES.join(", ")
        ))),
    }
}
