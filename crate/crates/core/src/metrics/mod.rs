//! Geometry distortion (point-to-point D1, point-to-plane D2), geometry PSNR
//! and Bjøntegaard delta rate.

mod bdrate;
mod geometry;

use thiserror::Error;

pub use bdrate::{bd_rate, bd_rate_curves, BdMetric, RdPoint};
pub use geometry::{d1_error, d2_error, evaluate_geometry, transfer_normals, GeomError};

/// PSNR reported for a zero error.
pub const PSNR_CAP: f64 = 999.99;
/// Numerator factor `k` in `10·log10(k·p² / mse)`.
pub const DEFAULT_PEAK_FACTOR: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("reference cloud has no normals")]
    MissingNormals,
    #[error("BD-rate needs at least 4 points per curve, got {0}")]
    TooFewPoints(usize),
    #[error("PSNR is not strictly increasing with rate")]
    NotMonotone,
    #[error("rates must be positive")]
    NonPositiveRate,
    #[error("PSNR ranges of the two curves do not overlap")]
    NoOverlap,
}

/// `10·log10(3·p² / mse)` with `p = 2^b − 1`, capped at [`PSNR_CAP`].
pub fn geom_psnr(mse: f64, bit_depth: u8) -> f64 {
    geom_psnr_with(mse, bit_depth, DEFAULT_PEAK_FACTOR)
}

pub fn geom_psnr_with(mse: f64, bit_depth: u8, peak_factor: f64) -> f64 {
    let p = ((1u64 << bit_depth) - 1) as f64;
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (peak_factor * p * p / mse).log10()).min(PSNR_CAP)
}
