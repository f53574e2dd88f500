use rayon::prelude::*;

use super::{geom_psnr_with, MetricError, DEFAULT_PEAK_FACTOR};
use crate::pointcloud::{PointCloud, UnitVec3};
use crate::spatial::SpatialIndex;

/// Directed and symmetric geometry errors between an original and a
/// reconstructed cloud. `ab` is reconstruction → original, `ba` the reverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomError {
    pub e_c2c_ab: f64,
    pub e_c2c_ba: f64,
    pub e_c2p_ab: f64,
    pub e_c2p_ba: f64,
    pub symmetric_c2c: f64,
    pub symmetric_c2p: f64,
}

impl GeomError {
    pub fn d1_psnr(&self, bit_depth: u8) -> f64 {
        geom_psnr_with(self.symmetric_c2c, bit_depth, DEFAULT_PEAK_FACTOR)
    }

    pub fn d2_psnr(&self, bit_depth: u8) -> f64 {
        geom_psnr_with(self.symmetric_c2p, bit_depth, DEFAULT_PEAK_FACTOR)
    }
}

fn nearest_indices(test: &PointCloud, reference: &PointCloud) -> Result<Vec<usize>, MetricError> {
    if test.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyCloud);
    }
    let index = SpatialIndex::new(reference.points());
    Ok(test
        .points()
        .par_iter()
        .map(|p| index.nearest(p).expect("non-empty reference").index)
        .collect())
}

/// Mean squared distance from each test point to its nearest reference point.
pub fn d1_error(test: &PointCloud, reference: &PointCloud) -> Result<f64, MetricError> {
    let nn = nearest_indices(test, reference)?;
    let r = reference.points();
    let sum: u64 = test.points().iter().zip(&nn).map(|(a, &j)| a.dist2(&r[j])).sum();
    Ok(sum as f64 / test.len() as f64)
}

fn c2p(test: &PointCloud, reference: &PointCloud, normals: &[UnitVec3], nn: &[usize]) -> f64 {
    let r = reference.points();
    let sum: f64 = test
        .points()
        .iter()
        .zip(nn)
        .map(|(a, &j)| {
            let b = r[j];
            let v = [
                a.x as f64 - b.x as f64,
                a.y as f64 - b.y as f64,
                a.z as f64 - b.z as f64,
            ];
            let e = normals[j].dot(v);
            e * e
        })
        .sum();
    sum / test.len() as f64
}

/// Mean squared projection of the nearest-neighbour displacement onto the
/// reference normal.
pub fn d2_error(test: &PointCloud, reference: &PointCloud) -> Result<f64, MetricError> {
    let normals = reference.normals().ok_or(MetricError::MissingNormals)?;
    let nn = nearest_indices(test, reference)?;
    Ok(c2p(test, reference, normals, &nn))
}

/// Copies onto `target` the normal of the nearest `source` point.
pub fn transfer_normals(target: &PointCloud, source: &PointCloud) -> Result<PointCloud, MetricError> {
    let normals = source.normals().ok_or(MetricError::MissingNormals)?;
    let nn = nearest_indices(target, source)?;
    let mut out = target.without_normals();
    out.set_normals(nn.iter().map(|&j| normals[j]).collect())
        .expect("one normal per point");
    Ok(out)
}

/// Both directions of D1 and D2. The original must carry normals; the
/// reconstruction borrows them from its nearest original point.
pub fn evaluate_geometry(original: &PointCloud, recon: &PointCloud) -> Result<GeomError, MetricError> {
    let orig_normals = original.normals().ok_or(MetricError::MissingNormals)?;
    let recon_n = transfer_normals(recon, original)?;

    let nn_ab = nearest_indices(recon, original)?;
    let nn_ba = nearest_indices(original, recon)?;
    let o = original.points();
    let r = recon.points();
    let mean_d2 = |a: &[crate::pointcloud::Point3], b: &[crate::pointcloud::Point3], nn: &[usize]| {
        a.iter().zip(nn).map(|(p, &j)| p.dist2(&b[j])).sum::<u64>() as f64 / a.len() as f64
    };
    let e_c2c_ab = mean_d2(r, o, &nn_ab);
    let e_c2c_ba = mean_d2(o, r, &nn_ba);
    let e_c2p_ab = c2p(recon, original, orig_normals, &nn_ab);
    let e_c2p_ba = c2p(original, &recon_n, recon_n.normals().expect("transferred"), &nn_ba);
    Ok(GeomError {
        e_c2c_ab,
        e_c2c_ba,
        e_c2p_ab,
        e_c2p_ba,
        symmetric_c2c: e_c2c_ab.max(e_c2c_ba),
        symmetric_c2p: e_c2p_ab.max(e_c2p_ba),
    })
}
