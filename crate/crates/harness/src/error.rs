use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config key `{key}`: {reason}")]
    ConfigKey { key: String, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("flag budget exceeded: {flagged} of {trials} trials flagged, budget {budget}")]
    FlagBudget { flagged: usize, trials: usize, budget: f64 },
    #[error("schema `{schema}` missing columns: {}", missing.join(", "))]
    SchemaMismatch { schema: &'static str, missing: Vec<String> },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error(transparent)]
    Core(#[from] gkp_core::Error),
    #[error(transparent)]
    Qec(#[from] gkp_qec::QecError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ConfigKey { .. } | HarnessError::Config(_) => 2,
            HarnessError::FlagBudget { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
