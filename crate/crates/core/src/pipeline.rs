//! Cloud-level encode, decode and evaluation.

use std::collections::HashSet;

use crate::codec::{decode, encode_frames, CodecConfig, Decoded, EncodedFrames};
use crate::metrics::{evaluate_geometry, geom_psnr_with, GeomError, RdPoint, DEFAULT_PEAK_FACTOR};
use crate::pointcloud::{estimate_normals, PointCloud};
use crate::projection::{project_cloud, reconstruct_cloud, ProjectionParams};
use crate::Result;

/// Neighbourhood size for normal estimation when a cloud has none.
pub const DEFAULT_NORMAL_K: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub projection: ProjectionParams,
    pub codec: CodecConfig,
    pub normal_k: usize,
    /// PSNR numerator factor, see [`geom_psnr_with`].
    pub peak_factor: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            projection: ProjectionParams::default(),
            codec: CodecConfig::default(),
            normal_k: DEFAULT_NORMAL_K,
            peak_factor: DEFAULT_PEAK_FACTOR,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CloudEncoding {
    pub encoded: EncodedFrames,
    /// Points dropped by the surface-thickness window.
    pub projection_missed: usize,
    /// Cloud rebuilt from the encoder-side reconstruction.
    pub recon: PointCloud,
}

/// Returns `cloud` if it carries normals, otherwise a copy with estimated ones.
pub fn ensure_normals(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    if cloud.normals().is_some() {
        Ok(cloud.clone())
    } else {
        Ok(estimate_normals(cloud, k)?.cloud)
    }
}

pub fn encode_cloud(cloud: &PointCloud, params: &PipelineParams) -> Result<CloudEncoding> {
    let with_normals = ensure_normals(cloud, params.normal_k)?;
    let projection = project_cloud(&with_normals, &params.projection)?;
    let codec = CodecConfig {
        tau: params.projection.tau,
        bit_depth: cloud.bit_depth(),
        ..params.codec.clone()
    };
    let encoded = encode_frames(&projection.frames, &codec)?;
    let recon = reconstruct_cloud(&encoded.recon, codec.tau)?;
    Ok(CloudEncoding {
        encoded,
        projection_missed: projection.missed,
        recon,
    })
}

pub fn decode_cloud(bytes: &[u8]) -> Result<(PointCloud, Decoded)> {
    let decoded = decode(bytes)?;
    let cloud = reconstruct_cloud(&decoded.frames, decoded.config.tau)?;
    Ok((cloud, decoded))
}

/// Original points with no exact counterpart in `recon`.
pub fn missing_points(original: &PointCloud, recon: &PointCloud) -> usize {
    let have: HashSet<_> = recon.points().iter().collect();
    original.points().iter().filter(|p| !have.contains(p)).count()
}

/// Geometry errors; the original gets estimated normals if it has none.
pub fn evaluate(original: &PointCloud, recon: &PointCloud, normal_k: usize) -> Result<GeomError> {
    let reference = ensure_normals(original, normal_k)?;
    Ok(evaluate_geometry(&reference, recon)?)
}

pub fn rd_point(original: &PointCloud, recon: &PointCloud, bits_total: u64, bits_geometry: u64, params: &PipelineParams) -> Result<RdPoint> {
    let e = evaluate(original, recon, params.normal_k)?;
    let b = original.bit_depth();
    Ok(RdPoint {
        bits_total,
        bits_geometry,
        d1_psnr: geom_psnr_with(e.symmetric_c2c, b, params.peak_factor),
        d2_psnr: geom_psnr_with(e.symmetric_c2p, b, params.peak_factor),
        points_in: original.len(),
        points_out: recon.len(),
        points_missed: missing_points(original, recon),
    })
}
