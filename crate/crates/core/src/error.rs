use thiserror::Error;

use crate::types::ActorRole;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: &'static str, reason: String },

    #[error("actor `{0}` is not present in the world state")]
    MissingActor(ActorRole),

    #[error("base function has no interior maximum for c = {c}, d = {d}")]
    NoInteriorMaximum { c: f64, d: f64 },

    #[error("non-positive gap {gap} m (collision state)")]
    NonPositiveGap { gap: f64 },

    #[error("smoothing window of {samples} samples is too short for polynomial order {order}")]
    WindowTooShort { samples: usize, order: usize },

    #[error("schema error at row {row}, column `{column}`: {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    #[error("observation set is empty")]
    EmptyObservations,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("could not parse TOML: {0}")]
    TomlDe(#[from] toml::de::Error),

    #[error("could not serialize TOML: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            field,
            reason: reason.into(),
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidValue { .. } => "invalid_value",
            Error::MissingActor(_) => "missing_actor",
            Error::NoInteriorMaximum { .. } => "no_interior_maximum",
            Error::NonPositiveGap { .. } => "non_positive_gap",
            Error::WindowTooShort { .. } => "window_too_short",
            Error::Schema { .. } => "schema",
            Error::EmptyObservations => "empty_observations",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::TomlDe(_) => "toml_parse",
            Error::TomlSer(_) => "toml_serialize",
        }
    }

    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

/// Reads a whole file, naming it in the error.
pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Opens a file for reading, naming it in the error.
pub(crate) fn open(path: &std::path::Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub(crate) fn ensure_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite, got {value}")))
    }
}
