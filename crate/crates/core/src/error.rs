use thiserror::Error;

pub type Result<T> = std::result::Result<T, HemError>;

#[derive(Debug, Error)]
pub enum HemError {
    #[error("time {t} s is outside the trace domain [{start}, {end}]")]
    TraceDomain { t: f64, start: f64, end: f64 },

    #[error("{map}: point ({x}, {y}) is outside the map domain")]
    MapDomain { map: String, x: f64, y: f64 },

    #[error("invalid HVAC command {command}: {reason}")]
    InvalidCommand { command: f64, reason: &'static str },

    #[error("infeasible request {request}: {reason}")]
    InfeasibleRequest {
        request: String,
        reason: String,
        /// Earliest step (relative to the horizon start) at which the request could complete.
        earliest_completion: Option<usize>,
    },

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("request rejected: {0}")]
    RequestRejected(String),

    #[error("unknown case study id {0} (expected 1..=12)")]
    UnknownCase(u32),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("ledger integrity error: {0}")]
    LedgerIntegrity(String),

    #[error("ledger is empty")]
    EmptyLedger,

    #[error("scenario fingerprints differ ({0} vs {1}); refusing to compare")]
    ScenarioMismatch(String, String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
