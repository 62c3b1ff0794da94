use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integration diverged at t = {time:e} s")]
    IntegrationDiverged { time: f64 },
    #[error("switching threshold not bracketed in [{lo} V, {hi} V]")]
    ThresholdNotBracketed { lo: f64, hi: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("IDX format error: {0}")]
    Format(String),
    #[error("dataset consistency error: {0}")]
    Consistency(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    TomlDe(#[from] toml::de::Error),
    #[error("config write error: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
