use thiserror::Error;

use crate::codec::CodecError;
use crate::epm::EpmError;
use crate::metrics::MetricError;
use crate::pointcloud::{PlyError, PointCloudError};
use crate::projection::ProjectionError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ply(#[from] PlyError),
    #[error(transparent)]
    PointCloud(#[from] PointCloudError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Epm(#[from] EpmError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("config: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
