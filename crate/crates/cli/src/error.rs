use std::fmt;

use serde::Serialize;
use taskdiff::corpus::CorpusError;
use taskdiff::embedding::EmbeddingError;
use taskdiff::eval::EvalError;
use taskdiff::metric::{MatrixFormatError, MetricError};

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Io,
    Usage,
    Data,
    Numerical,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Io => 1,
            Kind::Usage => 2,
            Kind::Data => 3,
            Kind::Numerical => 4,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}

impl CliError {
    pub fn new(kind: Kind, message: impl fmt::Display) -> Self {
        CliError {
            kind,
            message: message.to_string(),
            key: None,
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new(Kind::Usage, message)
    }

    pub fn data(message: impl fmt::Display) -> Self {
        Self::new(Kind::Data, message)
    }

    pub fn io(context: impl fmt::Display, err: std::io::Error) -> Self {
        Self::new(Kind::Io, format!("{context}: {err}"))
    }

    /// The single-line JSON record written to stderr.
    pub fn record(&self) -> String {
        serde_json::to_string(self).expect("error record serializes")
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let kind = match e {
            CorpusError::Io { .. } => Kind::Io,
            _ => Kind::Data,
        };
        CliError::new(kind, e)
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match &e {
            EmbeddingError::Io { .. } => CliError::new(Kind::Io, &e),
            EmbeddingError::MissingEmbedding(key) => CliError {
                kind: Kind::Data,
                key: Some(key.clone()),
                message: e.to_string(),
            },
            _ => CliError::new(Kind::Data, &e),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        let kind = if e.is_numerical() {
            Kind::Numerical
        } else if matches!(e, MetricError::InvalidConfig(_)) {
            Kind::Usage
        } else {
            Kind::Data
        };
        CliError {
            kind,
            key: e.missing_key().map(str::to_string),
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Metric(m) => m.into(),
            EvalError::InvalidArgument(_) => CliError::usage(e),
            EvalError::InsufficientData(_) | EvalError::DegenerateMatrix(_) => CliError::data(e),
        }
    }
}

impl From<MatrixFormatError> for CliError {
    fn from(e: MatrixFormatError) -> Self {
        let kind = match e {
            MatrixFormatError::Io(_) => Kind::Io,
            MatrixFormatError::Parse { .. } => Kind::Data,
        };
        CliError::new(kind, e)
    }
}
