use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A shape, loss or generator parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Caller-supplied data is malformed (empty batch, bad probability, unknown id, ...).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("Lab color ({l:.3}, {a:.3}, {b:.3}) is outside the sRGB gamut")]
    Gamut { l: f64, a: f64, b: f64 },

    #[error("palette sampling exhausted {attempts} attempts; constraints are too tight")]
    Sampling { attempts: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot parse expression {0:?}")]
    Expression(String),

    #[error("scene generation failed: {0}")]
    Generation(String),

    #[error("degenerate scene: {0}")]
    DegenerateScene(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("image decode error for {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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
