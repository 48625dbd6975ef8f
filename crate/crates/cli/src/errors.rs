//! CLI error type with the fixed exit-code contract.

use std::fmt;

/// Error category, mapped one-to-one onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags, profiles, or parameter combinations (exit 2).
    Config,
    /// Unreadable or inconsistent input data and models (exit 3).
    Data,
    /// Training failed to converge (exit 4).
    Training,
}

#[derive(Debug)]
pub struct CliError {
    kind: Kind,
    message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Training => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            Kind::Config => "config",
            Kind::Data => "data",
            Kind::Training => "training",
        };
        // single-line, machine-parsable
        write!(f, "error[{tag}]: {}", self.message.replace('\n', " "))
    }
}

impl std::error::Error for CliError {}
