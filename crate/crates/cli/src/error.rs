use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] wickspde::Error),
    #[error("{command}: {source}")]
    Experiment {
        command: &'static str,
        #[source]
        source: wickspde::Error,
    },
    #[error("output directory {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
    #[error("serializing results: {0}")]
    Json(#[from] serde_json::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}
