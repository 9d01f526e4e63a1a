use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("measurement outside the clutter support (d = {distance} m, d_max = {d_max} m)")]
    SupportViolation { distance: f64, d_max: f64 },

    #[error("all particle weights vanished at step {step} (max log-weight {max_log_weight})")]
    Degeneracy { step: usize, max_log_weight: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("dataset does not match scenario: {0}")]
    DatasetMismatch(String),

    #[error("empty run batch")]
    EmptyBatch,

    #[error("unknown method variant `{0}`")]
    UnknownVariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
