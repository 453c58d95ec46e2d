//! Error classes, exit codes and the JSON error report.

use std::fmt;

use geocell_core::clustering::ClusterError;
use geocell_core::eval::EvalError;
use geocell_core::geocell::GeocellError;
use geocell_core::io::IoError;
use geocell_core::labels::LabelError;
use geocell_core::refine::RefineError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    /// A referenced input does not exist or cannot be opened.
    UnresolvedInput,
    /// An input exists but cannot be parsed.
    InvalidInput,
    InvalidConfig,
    /// Inputs parse but disagree with each other or with the data model.
    DataContract,
    Invariant,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::UnresolvedInput | ErrorKind::InvalidInput | ErrorKind::InvalidConfig => 2,
            ErrorKind::DataContract => 3,
            ErrorKind::Invariant => 4,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An error raised by the command layer itself with an explicit class.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> CliError {
        CliError {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn geocell_kind(e: &GeocellError) -> ErrorKind {
    match e {
        GeocellError::Config(_) | GeocellError::Cluster(_) => ErrorKind::InvalidConfig,
        GeocellError::Invariant(_) => ErrorKind::Invariant,
        _ => ErrorKind::DataContract,
    }
}

fn refine_kind(e: &RefineError) -> ErrorKind {
    match e {
        RefineError::InvalidParams(_) | RefineError::Cluster(_) => ErrorKind::InvalidConfig,
        RefineError::Invariant(_) => ErrorKind::Invariant,
        _ => ErrorKind::DataContract,
    }
}

fn label_kind(e: &LabelError) -> ErrorKind {
    match e {
        LabelError::InvalidTau(_) | LabelError::InvalidWeights(_) | LabelError::Template(_) => ErrorKind::InvalidConfig,
        LabelError::Geocell(g) => geocell_kind(g),
        _ => ErrorKind::DataContract,
    }
}

/// Class of the first recognized error in the chain. Unrecognized errors
/// count as invariant failures.
pub fn classify(err: &anyhow::Error) -> ErrorKind {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return e.kind;
        }
        if let Some(e) = cause.downcast_ref::<IoError>() {
            return match e {
                IoError::File { .. } => ErrorKind::UnresolvedInput,
                IoError::Format { .. } => ErrorKind::InvalidInput,
            };
        }
        if let Some(e) = cause.downcast_ref::<GeocellError>() {
            return geocell_kind(e);
        }
        if let Some(e) = cause.downcast_ref::<RefineError>() {
            return refine_kind(e);
        }
        if let Some(e) = cause.downcast_ref::<LabelError>() {
            return label_kind(e);
        }
        if cause.downcast_ref::<ClusterError>().is_some() {
            return ErrorKind::InvalidConfig;
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::EmptyInput => ErrorKind::InvalidInput,
                EvalError::InvalidDistance(_) => ErrorKind::DataContract,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ErrorKind::UnresolvedInput;
        }
    }
    ErrorKind::Invariant
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: ErrorKind,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorReport {
    pub fn from_error(err: &anyhow::Error) -> ErrorReport {
        let kind = classify(err);
        ErrorReport {
            error: kind,
            message: format!("{err:#}"),
            exit_code: kind.exit_code(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classification_follows_the_chain() {
        let e = anyhow::Error::new(RefineError::DimensionMismatch { expected: 2, got: 3 }).context("refining q1");
        assert_eq!(classify(&e), ErrorKind::DataContract);
        assert_eq!(ErrorReport::from_error(&e).exit_code, 3);
        let e = anyhow::Error::new(GeocellError::Invariant("x".into()));
        assert_eq!(classify(&e).exit_code(), 4);
        let missing = geocell_core::io::read_ids(std::path::Path::new("/nonexistent/ids"));
        let e = missing.context("reading ids").unwrap_err();
        assert_eq!(classify(&e), ErrorKind::UnresolvedInput);
        assert_eq!(classify(&anyhow::anyhow!("odd")), ErrorKind::Invariant);
    }
}
