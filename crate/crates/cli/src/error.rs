use lorentz_born::GeometryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    VerificationFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 1 verification failure, 2 configuration error,
    /// 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Geometry(e) => match e {
                GeometryError::SuperluminalVelocity { .. }
                | GeometryError::NonPositiveRescaling { .. }
                | GeometryError::InvalidInput(_) => 2,
                _ => 3,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Geometry(e) => e.kind(),
            CliError::VerificationFailed(_) => "VerificationFailed",
            CliError::Io(_) => "IoError",
            CliError::Csv(_) => "CsvError",
            CliError::Json(_) => "JsonError",
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;
