use std::path::PathBuf;

use thiserror::Error;

/// A configuration problem, located by key and (when read from a file) line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: line {line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Model(#[from] hom_core::Error),
    #[error("dip fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl SimError {
    /// 2 for bad input, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            SimError::Config(_) | SimError::Schema { .. } => 2,
            SimError::Model(_) | SimError::NotConverged { .. } => 3,
            SimError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
