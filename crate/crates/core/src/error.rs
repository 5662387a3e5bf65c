use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A downsized zone plus its gaps does not fit the canvas.
    #[error("zone {index} needs {needed}px but the canvas side is {side}px")]
    ZoneTooLarge { index: usize, needed: u32, side: u32 },

    /// Even the smallest profiled input size at batch 1 overruns the budget.
    #[error("budget of {budget_ms}ms cannot be met: smallest profiled input costs {min_ms}ms")]
    InfeasibleBudget { budget_ms: f64, min_ms: f64 },

    #[error("composites must share one canvas size, found {0} and {1}")]
    MixedCanvasSizes(u32, u32),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("failed to parse {what}: {path}: {message}")]
    Parse {
        what: &'static str,
        path: String,
        message: String,
    },

    #[error("latency table: {0}")]
    LatencyTable(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Deserializes JSON, reporting the path of the offending field on failure.
pub(crate) fn from_json<T: serde::de::DeserializeOwned>(what: &'static str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse {
            what,
            path,
            message: e.into_inner().to_string(),
        }
    })
}
