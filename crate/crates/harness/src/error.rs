use std::path::PathBuf;

use nearfield_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: CoreError,
    },

    #[error("cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    Mismatch(String),
}

pub type AppResult<T> = Result<T, AppError>;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_RANK: i32 = 4;

impl AppError {
    pub fn stage(stage: &'static str) -> impl Fn(CoreError) -> AppError + Copy {
        move |source| AppError::Stage { stage, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Mismatch(_) => EXIT_CONFIG,
            AppError::Stage { source, .. } => match source {
                CoreError::Infeasible { .. } | CoreError::SolverFailure(_) => EXIT_SOLVER,
                CoreError::RankDeficient { .. } => EXIT_RANK,
                CoreError::InvalidConfig(_) | CoreError::EmptyPaths => EXIT_CONFIG,
                _ => EXIT_CONFIG,
            },
            AppError::Cache { .. } | AppError::Io { .. } | AppError::Json { .. } => EXIT_IO,
        }
    }
}
