use std::io;
use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: crate::ingest::IngestError,
    },
    #[error("{component}: {source}")]
    Domain {
        component: &'static str,
        #[source]
        source: stormgen_core::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("bundle fingerprint {bundle} does not match input {input}; rerun fit or pass --force")]
    FingerprintMismatch { bundle: String, input: String },
}

impl PipelineError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        PipelineError::Format {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    pub fn domain(component: &'static str) -> impl FnOnce(stormgen_core::Error) -> Self {
        move |source| PipelineError::Domain { component, source }
    }

    /// 1 for domain errors, 2 for usage and IO errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Domain { .. } | PipelineError::Ingest { .. } => 1,
            PipelineError::Io { .. }
            | PipelineError::Usage(_)
            | PipelineError::Format { .. }
            | PipelineError::FingerprintMismatch { .. } => 2,
        }
    }

    /// Short machine-readable class used in the diagnostic prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Io { .. } => "io",
            PipelineError::Usage(_) => "usage",
            PipelineError::Ingest { .. } => "ingest",
            PipelineError::Domain { .. } => "domain",
            PipelineError::Format { .. } => "format",
            PipelineError::FingerprintMismatch { .. } => "fingerprint",
        }
    }

    /// Single-line diagnostic, `stormgen: error[<kind>]: <message>`.
    pub fn diagnostic(&self) -> String {
        let message = self.to_string().replace(['\n', '\r'], " ");
        format!("stormgen: error[{}]: {}", self.kind(), message)
    }
}
