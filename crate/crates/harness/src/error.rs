use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    ReadFile {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    ParseConfig { path: PathBuf, message: String },

    #[error("invalid configuration: {}", issues.join("; "))]
    InvalidConfig { issues: Vec<String> },

    #[error("topology file {path}: {message}")]
    TopologyFile { path: PathBuf, message: String },

    #[error(
        "dataset file {path} is missing; expected a delimited text file with columns \
         station,date,mean_temp,mean_dew_point,mean_visibility,mean_wind_speed,\
         max_sustained_wind,precipitation,latitude,longitude"
    )]
    MissingDataset { path: PathBuf },

    #[error("dataset schema: {message}")]
    DatasetSchema { message: String },

    #[error(transparent)]
    Core(#[from] proxnet::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
