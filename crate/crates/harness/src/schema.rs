//! CSV row schemas. Floats are written with 17 significant digits so every value
//! reads back to the same bits.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub trait Schema: Sized {
    const NAME: &'static str;
    const COLUMNS: &'static [&'static str];
    fn to_record(&self) -> Vec<String>;
    fn from_fields(f: &Fields) -> std::result::Result<Self, String>;
}

/// One parsed row addressed by column name.
pub struct Fields<'a> {
    record: &'a csv::StringRecord,
    index: &'a HashMap<String, usize>,
}

impl Fields<'_> {
    pub fn str(&self, col: &str) -> &str {
        self.index.get(col).and_then(|&i| self.record.get(i)).unwrap_or("")
    }

    pub fn parse<T: std::str::FromStr>(&self, col: &str) -> std::result::Result<T, String> {
        let s = self.str(col);
        s.parse().map_err(|_| format!("column `{col}`: cannot parse `{s}`"))
    }
}

pub fn persist_samples<T: Schema>(rows: &[T], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(T::COLUMNS)?;
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_samples<T: Schema>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let index: HashMap<String, usize> = header.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
    let missing: Vec<String> = T::COLUMNS
        .iter()
        .filter(|c| !index.contains_key(**c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::SchemaMismatch {
            schema: T::NAME,
            missing,
        });
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let f = Fields {
            record: &rec,
            index: &index,
        };
        out.push(T::from_fields(&f).map_err(|msg| HarnessError::Row { row: row + 1, msg })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatRunRow {
    pub trial: u64,
    pub seed: u64,
    pub r_db: f64,
    pub total_photons: u64,
    pub alpha: f64,
    pub r_prime: f64,
    /// `+1` even, `-1` odd.
    pub parity: i8,
    pub fidelity: f64,
    pub alpha_c: f64,
    pub accepted: bool,
    pub flags: String,
}

impl Schema for CatRunRow {
    const NAME: &'static str = "cat_runs";
    const COLUMNS: &'static [&'static str] = &[
        "trial",
        "seed",
        "r_db",
        "total_photons",
        "alpha",
        "r_prime",
        "parity",
        "fidelity",
        "alpha_c",
        "accepted",
        "flags",
    ];

    fn to_record(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_f64(self.r_db),
            self.total_photons.to_string(),
            fmt_f64(self.alpha),
            fmt_f64(self.r_prime),
            self.parity.to_string(),
            fmt_f64(self.fidelity),
            fmt_f64(self.alpha_c),
            self.accepted.to_string(),
            self.flags.clone(),
        ]
    }

    fn from_fields(f: &Fields) -> std::result::Result<Self, String> {
        Ok(Self {
            trial: f.parse("trial")?,
            seed: f.parse("seed")?,
            r_db: f.parse("r_db")?,
            total_photons: f.parse("total_photons")?,
            alpha: f.parse("alpha")?,
            r_prime: f.parse("r_prime")?,
            parity: f.parse("parity")?,
            fidelity: f.parse("fidelity")?,
            alpha_c: f.parse("alpha_c")?,
            accepted: f.parse("accepted")?,
            flags: f.str("flags").to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkpSampleRow {
    pub trial: u64,
    pub seed: u64,
    pub r_db: f64,
    pub dq_db: f64,
    pub dp_db: f64,
    pub substitutions: u64,
    pub flags: String,
}

impl Schema for GkpSampleRow {
    const NAME: &'static str = "gkp_samples";
    const COLUMNS: &'static [&'static str] = &["trial", "seed", "r_db", "dq_db", "dp_db", "substitutions", "flags"];

    fn to_record(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_f64(self.r_db),
            fmt_f64(self.dq_db),
            fmt_f64(self.dp_db),
            self.substitutions.to_string(),
            self.flags.clone(),
        ]
    }

    fn from_fields(f: &Fields) -> std::result::Result<Self, String> {
        Ok(Self {
            trial: f.parse("trial")?,
            seed: f.parse("seed")?,
            r_db: f.parse("r_db")?,
            dq_db: f.parse("dq_db")?,
            dp_db: f.parse("dp_db")?,
            substitutions: f.parse("substitutions")?,
            flags: f.str("flags").to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QecRateRow {
    pub source: String,
    pub r_db_or_mu: f64,
    pub sigma_db: f64,
    pub distance: u64,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

impl Schema for QecRateRow {
    const NAME: &'static str = "qec_rates";
    const COLUMNS: &'static [&'static str] = &[
        "source",
        "r_db_or_mu",
        "sigma_db",
        "distance",
        "trials",
        "failures",
        "rate",
        "ci_low",
        "ci_high",
        "master_seed",
    ];

    fn to_record(&self) -> Vec<String> {
        vec![
            self.source.clone(),
            fmt_f64(self.r_db_or_mu),
            fmt_f64(self.sigma_db),
            self.distance.to_string(),
            self.trials.to_string(),
            self.failures.to_string(),
            fmt_f64(self.rate),
            fmt_f64(self.ci_low),
            fmt_f64(self.ci_high),
            self.master_seed.to_string(),
        ]
    }

    fn from_fields(f: &Fields) -> std::result::Result<Self, String> {
        Ok(Self {
            source: f.str("source").to_string(),
            r_db_or_mu: f.parse("r_db_or_mu")?,
            sigma_db: f.parse("sigma_db")?,
            distance: f.parse("distance")?,
            trials: f.parse("trials")?,
            failures: f.parse("failures")?,
            rate: f.parse("rate")?,
            ci_low: f.parse("ci_low")?,
            ci_high: f.parse("ci_high")?,
            master_seed: f.parse("master_seed")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonHistRow {
    /// 1-based position of the detector in the chain.
    pub detector_index: u64,
    pub n: u64,
    pub count: u64,
}

impl Schema for PhotonHistRow {
    const NAME: &'static str = "photon_hist";
    const COLUMNS: &'static [&'static str] = &["detector_index", "n", "count"];

    fn to_record(&self) -> Vec<String> {
        vec![self.detector_index.to_string(), self.n.to_string(), self.count.to_string()]
    }

    fn from_fields(f: &Fields) -> std::result::Result<Self, String> {
        Ok(Self {
            detector_index: f.parse("detector_index")?,
            n: f.parse("n")?,
            count: f.parse("count")?,
        })
    }
}

/// Plot-data tables that have no fixed schema of their own.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
