use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scheduling error: {0}")]
    Scheduling(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("denoiser contract violation: {0}")]
    Contract(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    /// Process exit code used by the CLI: 2 config, 3 runtime/numerical, 4 contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Scheduling(_) | Error::Shape(_) => 2,
            Error::Contract(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
