use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage {stage} requires {missing}, which has not been run with this configuration")]
    Dependency { stage: &'static str, missing: String },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: anyhow::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Stage { .. } => 2,
            CliError::Dependency { .. } => 3,
        }
    }

    pub fn stage(stage: &'static str, source: impl Into<anyhow::Error>) -> Self {
        CliError::Stage {
            stage,
            source: source.into(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
