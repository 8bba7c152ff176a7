//! Flat dotted-key run configuration.
//!
//! A config document is TOML whose leaves are addressed as `section.key`. Every
//! key must exist in the defaults and carry the same type (integers are accepted
//! where floats are expected). The canonical form is one `section.key = value`
//! line per leaf in sorted order; it is itself a valid config file and is what
//! the manifest hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Value;

use crate::error::{HarnessError, Result};

pub const ENV_PREFIX: &str = "GKPSIM__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub master_seed: u64,
    pub out_dir: String,
    /// Worker threads; 0 lets rayon decide.
    pub threads: u64,
    /// Largest tolerated fraction of numerically flagged trials.
    pub flag_budget: f64,
    /// Multiplies every trial count.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantmSection {
    pub r_db: f64,
    pub trials: u64,
    pub cutoff: u64,
    pub n_steps: u64,
    pub subtractors: u64,
    pub theta0: f64,
    pub grad_a: f64,
    pub grad_b: f64,
    pub ra1_db: f64,
    pub ra2_db: f64,
    pub t_ph: u64,
    pub antisqueeze: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub alpha_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub alpha_points: u64,
    pub r_points: u64,
    pub tolerance: f64,
    pub step_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub alpha: f64,
    pub r_prime: f64,
    pub odd: bool,
    pub r_db: f64,
    pub cutoff: u64,
    pub theta_bs: f64,
    pub ra_max: f64,
    pub ra_points: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreedSection {
    pub rounds: u64,
    pub cutoff: u64,
    pub amplitude_unit: f64,
    pub max_draws: u64,
    pub leak_tolerance: f64,
    /// Ideal-cat breeding (`breed` command): corrected amplitude and squeezing of the inputs.
    pub alpha_c: f64,
    pub r_prime: f64,
    pub r_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GkpSection {
    pub r_db: Vec<f64>,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QecSection {
    /// `empirical` reads GKP samples; `gaussian` draws around each `r_db` with `sigma_db`.
    pub source: String,
    pub samples: String,
    pub r_db: Vec<f64>,
    pub sigma_db: f64,
    pub distances: Vec<u64>,
    pub trials: u64,
    pub link_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub rates: String,
    pub resamples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub mu_q_db: Vec<f64>,
    pub mu_p_db: Vec<f64>,
    pub sigma_db: Vec<f64>,
    pub small: u64,
    pub large: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSection {
    pub fig3b_r_db: Vec<f64>,
    pub fig3b_trials: u64,
    pub fig4_r_db: Vec<f64>,
    pub fig4_trials: u64,
    pub fig5_r_db: Vec<f64>,
    pub fig5_gkp_trials: u64,
    pub fig5_trials: u64,
    pub fig5_distances: Vec<u64>,
    pub fig9_r_db: f64,
    pub fig9_trials: u64,
    pub fig10_r_db: f64,
    pub fig10_trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub run: RunSection,
    pub phantm: PhantmSection,
    pub fit: FitSection,
    pub stats: StatsSection,
    pub breed: BreedSection,
    pub gkp: GkpSection,
    pub qec: QecSection,
    pub threshold: ThresholdSection,
    pub sweep: SweepSection,
    pub figure: FigureSection,
}

impl Default for Config {
    fn default() -> Self {
        let r_grid = vec![11.0, 11.25, 11.5, 11.75, 12.0];
        Self {
            run: RunSection {
                master_seed: 20_240_601,
                out_dir: "out".into(),
                threads: 0,
                flag_budget: 0.9,
                scale: 1.0,
            },
            phantm: PhantmSection {
                r_db: 12.0,
                trials: 100,
                cutoff: 60,
                n_steps: 10,
                subtractors: 8,
                theta0: 18.0,
                grad_a: 0.75,
                grad_b: 0.35,
                ra1_db: 2.39,
                ra2_db: 0.43,
                t_ph: 55,
                antisqueeze: true,
            },
            fit: FitSection {
                alpha_max: 10.0,
                r_min: -1.5,
                r_max: 1.5,
                alpha_points: 60,
                r_points: 40,
                tolerance: 1e-4,
                step_floor: 1e-4,
            },
            stats: StatsSection {
                alpha: 3.0,
                r_prime: 0.5,
                odd: false,
                r_db: 11.5,
                cutoff: 50,
                theta_bs: 18.0,
                ra_max: 0.4,
                ra_points: 81,
            },
            breed: BreedSection {
                rounds: 3,
                cutoff: 65,
                amplitude_unit: (2.0 * std::f64::consts::PI).sqrt(),
                max_draws: 4,
                leak_tolerance: 1e-4,
                alpha_c: 5.0,
                r_prime: 0.0,
                r_db: 11.5,
            },
            gkp: GkpSection {
                r_db: vec![11.5],
                trials: 200,
            },
            qec: QecSection {
                source: "empirical".into(),
                samples: "gkp_samples.csv".into(),
                r_db: r_grid.clone(),
                sigma_db: 0.0,
                distances: vec![3, 5],
                trials: 1000,
                link_weight: gkp_qec::noise::DEFAULT_LINK_WEIGHT,
            },
            threshold: ThresholdSection {
                rates: "qec_rates.csv".into(),
                resamples: 1000,
            },
            sweep: SweepSection {
                mu_q_db: vec![9.0, 10.0, 11.0, 12.0, 13.0],
                mu_p_db: vec![6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0],
                sigma_db: vec![0.0, 1.0, 2.0, 3.0],
                small: 3,
                large: 5,
                trials: 500,
            },
            figure: FigureSection {
                fig3b_r_db: vec![11.0, 11.5, 12.0, 12.5],
                fig3b_trials: 100,
                fig4_r_db: r_grid.clone(),
                fig4_trials: 100,
                fig5_r_db: r_grid,
                fig5_gkp_trials: 100,
                fig5_trials: 1000,
                fig5_distances: vec![3, 5],
                fig9_r_db: 12.0,
                fig9_trials: 100,
                fig10_r_db: 11.5,
                fig10_trials: 200,
            },
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => {
                out.insert(key, v.clone());
            }
        }
    }
}

fn unflatten(flat: &BTreeMap<String, Value>) -> toml::Table {
    let mut root = toml::Table::new();
    for (key, v) in flat {
        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts.pop().expect("non-empty key");
        let mut t = &mut root;
        for p in parts {
            t = t
                .entry(p)
                .or_insert_with(|| Value::Table(toml::Table::new()))
                .as_table_mut()
                .expect("sections are tables");
        }
        t.insert(leaf.to_string(), v.clone());
    }
    root
}

/// Converts `v` to the type of `default`, or explains why it cannot.
fn coerce(default: &Value, v: Value) -> std::result::Result<Value, String> {
    match (default, v) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (Value::Integer(_), Value::Integer(i)) if i < 0 => Err(format!("expected a non-negative integer, got {i}")),
        (Value::Array(d), Value::Array(items)) => {
            let proto = d.first().cloned().unwrap_or(Value::Float(0.0));
            items.into_iter().map(|x| coerce(&proto, x)).collect::<std::result::Result<Vec<_>, _>>().map(Value::Array)
        }
        (d, v) if std::mem::discriminant(d) == std::mem::discriminant(&v) => Ok(v),
        (d, v) => Err(format!("expected {}, got {}", d.type_str(), v.type_str())),
    }
}

/// Parses a command-line or environment value: TOML literal first, bare string otherwise.
pub fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    flat: BTreeMap<String, Value>,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        let table = toml::Table::try_from(Config::default()).expect("defaults serialize");
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        Self { flat }
    }
}

impl ConfigBuilder {
    pub fn set(&mut self, key: &str, v: Value) -> Result<()> {
        let default = self.flat.get(key).ok_or_else(|| HarnessError::ConfigKey {
            key: key.to_string(),
            reason: "unknown key".into(),
        })?;
        let v = coerce(default, v).map_err(|reason| HarnessError::ConfigKey {
            key: key.to_string(),
            reason,
        })?;
        self.flat.insert(key.to_string(), v);
        Ok(())
    }

    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        for (k, v) in flat {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        self.merge_str(&std::fs::read_to_string(path)?)
    }

    /// `GKPSIM__section__key=value` pairs; the rest of the environment is ignored.
    pub fn merge_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        let mut pairs: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.replace("__", ".").to_lowercase(), v)))
            .collect();
        pairs.sort();
        for (k, v) in pairs {
            self.set(&k, parse_value(&v))?;
        }
        Ok(())
    }

    /// `key=value` overrides from the command line.
    pub fn merge_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), parse_value(v.trim()))?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Config> {
        let cfg: Config = Value::Table(unflatten(&self.flat))
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Config {
    pub fn canonical(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes");
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        flat.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Canonical form without the keys that only place the run (`run.out_dir`, `run.threads`).
    pub fn identity(&self) -> String {
        self.canonical()
            .lines()
            .filter(|l| !l.starts_with("run.out_dir ") && !l.starts_with("run.threads "))
            .map(|l| format!("{l}\n"))
            .collect()
    }

    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.identity().as_bytes()))
    }

    pub fn from_str_checked(text: &str) -> Result<Self> {
        let mut b = ConfigBuilder::default();
        b.merge_str(text)?;
        b.build()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.run.out_dir)
    }

    /// Input paths are taken relative to the output directory unless absolute.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = PathBuf::from(p);
        if p.is_absolute() {
            p
        } else {
            self.out_dir().join(p)
        }
    }

    /// Trial count after `run.scale`, never below one.
    pub fn scaled(&self, trials: u64) -> usize {
        ((trials as f64 * self.run.scale).round() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| HarnessError::ConfigKey {
            key: key.into(),
            reason: reason.into(),
        };
        if !(self.run.scale > 0.0) {
            return Err(bad("run.scale", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.run.flag_budget) {
            return Err(bad("run.flag_budget", "must lie in [0, 1]"));
        }
        if !["empirical", "gaussian"].contains(&self.qec.source.as_str()) {
            return Err(bad("qec.source", "must be `empirical` or `gaussian`"));
        }
        if self.stats.ra_points < 2 {
            return Err(bad("stats.ra_points", "need at least two points"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_round_trips() {
        let mut c = Config::default();
        c.phantm.trials = 7;
        c.qec.r_db = vec![11.0, 11.5];
        let back = Config::from_str_checked(&c.canonical()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn dotted_and_sectioned_forms_agree() {
        let a = Config::from_str_checked("phantm.trials = 5\nrun.scale = 2").unwrap();
        let b = Config::from_str_checked("[phantm]\ntrials = 5\n[run]\nscale = 2.0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scaled(a.phantm.trials), 10);
    }

    #[test]
    fn unknown_key_named() {
        let e = Config::from_str_checked("phantm.T_ph = 55").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("phantm.T_ph"), "{e}");
        let e = Config::from_str_checked("phantm.trials = \"many\"").unwrap_err();
        assert!(e.to_string().contains("phantm.trials"));
    }

    #[test]
    fn env_overrides() {
        let mut b = ConfigBuilder::default();
        b.merge_env([
            ("GKPSIM__phantm__r_db".to_string(), "11".to_string()),
            ("HOME".to_string(), "/root".to_string()),
            ("GKPSIM__run__out_dir".to_string(), "x/y".to_string()),
        ])
        .unwrap();
        let c = b.build().unwrap();
        assert_eq!(c.phantm.r_db, 11.0);
        assert_eq!(c.run.out_dir, "x/y");
        let mut b = ConfigBuilder::default();
        assert!(b.merge_env([("GKPSIM__nope__x".to_string(), "1".to_string())]).is_err());
    }

    #[test]
    fn overrides_parse_arrays() {
        let mut b = ConfigBuilder::default();
        b.merge_overrides(&["gkp.r_db=[11, 11.5]".into(), "qec.source=gaussian".into()]).unwrap();
        let c = b.build().unwrap();
        assert_eq!(c.gkp.r_db, vec![11.0, 11.5]);
        assert_eq!(c.qec.source, "gaussian");
    }
}
