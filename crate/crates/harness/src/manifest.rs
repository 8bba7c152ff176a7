use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{HarnessError, Result};

pub const CODE_VERSION: &str = concat!("gkpsim-", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.json";

/// Per-run flag counters. Every counted trial also stays in the row counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCounts {
    pub trials: usize,
    /// Trials counted against the budget: failed, saturated, or ending truncated.
    pub flagged: usize,
    /// Trials with a truncation flag at any step.
    pub truncation: usize,
    pub final_truncation: usize,
    pub saturation: usize,
    pub retries: usize,
    pub rejected_fits: usize,
    pub forced_substitutions: usize,
    /// Trials that raised an error and produced no row.
    pub failed: usize,
    /// Memory trials with a regularised block, series underflow or uninformative face.
    pub decoder_flags: usize,
}

impl FlagCounts {
    pub fn add(&mut self, o: &FlagCounts) {
        self.trials += o.trials;
        self.flagged += o.flagged;
        self.truncation += o.truncation;
        self.final_truncation += o.final_truncation;
        self.saturation += o.saturation;
        self.retries += o.retries;
        self.rejected_fits += o.rejected_fits;
        self.forced_substitutions += o.forced_substitutions;
        self.failed += o.failed;
        self.decoder_flags += o.decoder_flags;
    }

    pub fn check_budget(&self, budget: f64) -> Result<()> {
        if self.trials > 0 && self.flagged as f64 > budget * self.trials as f64 {
            return Err(HarnessError::FlagBudget {
                flagged: self.flagged,
                trials: self.trials,
                budget,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub code_version: String,
    /// Stage name to file name inside the output directory.
    pub outputs: BTreeMap<String, String>,
    pub flags: FlagCounts,
    pub manifest_hash: String,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &Config, outputs: BTreeMap<String, String>, flags: FlagCounts) -> Self {
        let config = cfg.canonical();
        let manifest_hash = format!(
            "{:x}",
            Sha256::digest(format!("{CODE_VERSION}\n{command}\n{}", cfg.identity()).as_bytes())
        );
        Self {
            command: command.to_string(),
            config_hash: cfg.hash(),
            config,
            master_seed: cfg.run.master_seed,
            code_version: CODE_VERSION.to_string(),
            outputs,
            flags,
            manifest_hash,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Command words to re-run, e.g. `["reproduce-figure", "3b"]`.
    pub fn command_words(&self) -> Vec<String> {
        self.command.split_whitespace().map(str::to_string).collect()
    }

    pub fn config(&self) -> Result<Config> {
        Config::from_str_checked(&self.config)
    }
}
