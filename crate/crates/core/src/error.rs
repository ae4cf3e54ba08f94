use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Coarse error class, used for CLI exit codes and the C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// Bad input: parameter ranges, config files, grids.
    Input,
    /// The model is undefined at the requested point.
    Physics,
    /// The numerical oracle could not produce a trustworthy answer.
    Oracle,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Input => 1,
            ErrorKind::Physics => 2,
            ErrorKind::Oracle => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: String, reason: String },

    #[error("degenerate rates: gamma_plus*cos^4(theta) + gamma_minus*sin^4(theta) = 0, both dressed transitions are dark")]
    DegenerateRates,

    #[error("zero coupling: eta*omega = 0, the steady phonon number is undefined")]
    ZeroCoupling,

    #[error("the closed form predicts heating (C <= 0); there is no steady phonon number to compare")]
    Heating,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension overflow: Hilbert dimension {dim} exceeds the cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("truncation breach at t = {time}: top two Fock levels hold {tail:e} (> {threshold:e}) with n_max = {n_max}")]
    TruncationBreach {
        time: f64,
        tail: f64,
        threshold: f64,
        n_max: usize,
    },

    #[error("no steady state: Liouvillian kernel is not one-dimensional ({})", SingularValues(.smallest_singular_values))]
    NoSteadyState {
        smallest_singular_values: Option<[f64; 2]>,
    },

    #[error("Fock truncation did not converge: relative change {rel_change:e} between n_max = {n_max} and the next level (cap reached)")]
    NotConverged { n_max: usize, rel_change: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown preset `{name}`; available: {}", .available.join(", "))]
    UnknownPreset {
        name: String,
        available: Vec<String>,
    },

    #[error("oracle and closed form disagree: relative error {rel_error:.4} exceeds {threshold}")]
    OracleMismatch { rel_error: f64, threshold: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

struct SingularValues<'a>(&'a Option<[f64; 2]>);

impl fmt::Display for SingularValues<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some([s0, s1]) => write!(f, "two smallest singular values {s0:e}, {s1:e}"),
            None => write!(f, "singular values not computed, system too large"),
        }
    }
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParams { .. }
            | Error::InvalidGrid(_)
            | Error::Config(_)
            | Error::UnknownPreset { .. }
            | Error::Io(_) => ErrorKind::Input,
            Error::DegenerateRates | Error::ZeroCoupling | Error::Heating => ErrorKind::Physics,
            Error::DimensionOverflow { .. }
            | Error::TruncationBreach { .. }
            | Error::NoSteadyState { .. }
            | Error::NotConverged { .. }
            | Error::Integration(_)
            | Error::OracleMismatch { .. } => ErrorKind::Oracle,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }

    /// Short machine-readable tag, used in table error markers.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidParams { .. } => "invalid-params",
            Error::DegenerateRates => "degenerate-rates",
            Error::ZeroCoupling => "zero-coupling",
            Error::Heating => "heating",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::DimensionOverflow { .. } => "dimension-overflow",
            Error::TruncationBreach { .. } => "truncation-breach",
            Error::NoSteadyState { .. } => "no-steady-state",
            Error::NotConverged { .. } => "not-converged",
            Error::Integration(_) => "integration",
            Error::Config(_) => "config",
            Error::UnknownPreset { .. } => "unknown-preset",
            Error::OracleMismatch { .. } => "oracle-mismatch",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
