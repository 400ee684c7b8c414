use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("schema mismatch on {field}: {left} vs {right}")]
    SchemaMismatch { field: String, left: String, right: String },
    #[error("{family}{}{}: {source}", fmt_coord("epsilon", .epsilon), fmt_coord("E", .energy))]
    Numerical {
        family: String,
        epsilon: Option<f64>,
        energy: Option<f64>,
        #[source]
        source: nonadiabatic_core::Error,
    },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed table {name}: {reason}")]
    Table { name: String, reason: String },
}

fn fmt_coord(label: &str, v: &Option<f64>) -> String {
    v.map(|x| format!(" {label}={x}")).unwrap_or_default()
}

impl LabError {
    /// 2 for anything wrong with the inputs, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::ConfigInvalid(_) | LabError::SchemaMismatch { .. } | LabError::Json { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;

/// Exit code for a run whose required gates did not all pass.
pub const GATE_FAILURE: i32 = 3;
