//! Experiment harness around `obstacle-core`: TOML experiment
//! configurations, the end-to-end pipeline (field, solve, free boundary,
//! energy traces, classification, checks), CSV/JSON reports and the
//! acceptance suite.

pub mod config;
pub mod harness;
pub mod io;
pub mod suite;

use std::path::PathBuf;

/// Environment variable holding the default output directory.
pub const OUTPUT_ENV: &str = "OBSTACLE_LAB_OUT";

/// Output directory used when neither `--out`, the config nor
/// [`OUTPUT_ENV`] name one.
pub const DEFAULT_OUTPUT: &str = "obstacle-lab-out";

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: obstacle_core::Error,
    },
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Resolves the output directory: explicit value, then the environment,
/// then [`DEFAULT_OUTPUT`].
pub fn output_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}
