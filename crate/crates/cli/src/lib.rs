//! Configuration, orchestration and output for the `muscl` command.

pub mod commands;
pub mod config;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected key=value, got `{token}`")]
    Syntax { line: usize, token: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] muscl_core::solver::SolverError),
    #[error(transparent)]
    Analysis(#[from] muscl_core::analysis::AnalysisError),
    #[error(transparent)]
    Mesh(#[from] muscl_core::mesh::MeshError),
    #[error(transparent)]
    Limiter(#[from] muscl_core::limiters::LimiterError),
    #[error(transparent)]
    Advection(#[from] muscl_core::advection::AdvectionError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        CliError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingKeys(_) => "missing_keys",
            CliError::UnknownKey(_) => "unknown_key",
            CliError::Syntax { .. } => "syntax",
            CliError::Invalid { .. } => "invalid_value",
            CliError::ReadConfig { .. } => "read_config",
            CliError::Usage(_) => "usage",
            CliError::Solver(_) => "solver",
            CliError::Analysis(_) => "analysis",
            CliError::Mesh(_) => "mesh",
            CliError::Limiter(_) => "limiter",
            CliError::Advection(_) => "advection",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON description, e.g. `{"error":"unknown_key","message":"unknown key `x`"}`.
    pub fn json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            key: Option<&'a str>,
        }
        let key = match self {
            CliError::Invalid { key, .. } | CliError::UnknownKey(key) => Some(key.as_str()),
            _ => None,
        };
        serde_json::to_string(&Line {
            error: self.kind(),
            message: self.to_string(),
            key,
        })
        .expect("plain strings serialize")
    }
}
