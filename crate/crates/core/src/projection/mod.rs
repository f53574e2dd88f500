//! Patch projection: cloud → axis-aligned patches → packed near/far depth
//! frames with an occupancy map, and the inverse.
//!
//! Each pixel of a patch keeps the lowest depth (near layer) and the highest
//! depth within `near + τ` (far layer). Points deeper than that window are
//! dropped and counted as missed; points strictly between near and far are
//! not represented.

mod dump;
mod frame;
mod pack;
mod pad;
mod reconstruct;
mod segment;

use std::collections::BTreeMap;

use thiserror::Error;

pub use dump::{write_pbm, write_pgm16};
pub use frame::{Axis, Frame, GeometryFramePair, OccupancyMap, PatchPlacement, SurfaceThickness};
pub use pack::{pack_patches, FRAME_HEIGHT_ALIGN, PATCH_ALIGN};
pub use pad::pad_frames;
pub use reconstruct::reconstruct_cloud;
pub use segment::{assign_axis, segment_patches, Segment};

use crate::pointcloud::{Point3, PointCloud};

#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    #[error("patch segmentation needs per-point normals")]
    MissingNormals,
    #[error("patch of width {width} does not fit a frame of width {frame_width}")]
    PatchTooWide { width: usize, frame_width: usize },
    #[error("frame width {0} is not a positive multiple of 64")]
    InvalidFrameWidth(usize),
    #[error("occupied pixel ({x}, {y}) lies outside every patch")]
    CorruptPatchTable { x: usize, y: usize },
    #[error("patch has no points")]
    EmptyPatch,
    #[error("patch depth {depth} exceeds the {bit_depth}-bit sample range")]
    DepthOverflow { depth: u32, bit_depth: u8 },
}

/// A projected patch with its own per-pixel depth maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub axis: Axis,
    pub origin3d: Point3,
    /// Packed position; zero until [`pack_patches`] places the patch.
    pub u0: usize,
    pub v0: usize,
    pub width: usize,
    pub height: usize,
    pub near_depth: Vec<u16>,
    pub far_depth: Vec<u16>,
    pub occupancy: Vec<bool>,
}

impl Patch {
    pub fn placement(&self) -> PatchPlacement {
        PatchPlacement {
            axis: self.axis,
            origin3d: self.origin3d,
            u0: self.u0,
            v0: self.v0,
            width: self.width,
            height: self.height,
        }
    }
}

/// Result of projecting one patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedPatch {
    pub patch: Patch,
    /// Points deeper than `near + τ` at their pixel.
    pub missed: usize,
}

/// Depth of `p` relative to a patch anchored at `origin` along `axis`.
#[inline]
pub(crate) fn depth_of(p: &Point3, axis: Axis, origin: &Point3) -> u32 {
    let a = axis.depth_axis();
    if axis.is_positive() {
        p.coord(a) - origin.coord(a)
    } else {
        origin.coord(a) - p.coord(a)
    }
}

pub fn project_patch(
    cloud: &PointCloud,
    indices: &[usize],
    axis: Axis,
    tau: SurfaceThickness,
) -> Result<ProjectedPatch, ProjectionError> {
    if indices.is_empty() {
        return Err(ProjectionError::EmptyPatch);
    }
    let points = cloud.points();
    let (ua, va) = axis.tangent_axes();
    let da = axis.depth_axis();
    let mut lo = points[indices[0]];
    let mut hi = lo;
    for &i in indices {
        let p = points[i];
        for a in 0..3 {
            lo.set_coord(a, lo.coord(a).min(p.coord(a)));
            hi.set_coord(a, hi.coord(a).max(p.coord(a)));
        }
    }
    let mut origin = lo;
    if !axis.is_positive() {
        origin.set_coord(da, hi.coord(da));
    }
    let width = (hi.coord(ua) - lo.coord(ua)) as usize + 1;
    let height = (hi.coord(va) - lo.coord(va)) as usize + 1;
    let max_sample = crate::pointcloud::max_coord(cloud.bit_depth());

    // depths per pixel, kept sorted
    let mut per_pixel: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for &i in indices {
        let p = points[i];
        let u = (p.coord(ua) - lo.coord(ua)) as usize;
        let v = (p.coord(va) - lo.coord(va)) as usize;
        let d = depth_of(&p, axis, &origin);
        if d > max_sample || d > u16::MAX as u32 {
            return Err(ProjectionError::DepthOverflow {
                depth: d,
                bit_depth: cloud.bit_depth(),
            });
        }
        per_pixel.entry(v * width + u).or_default().push(d);
    }

    let mut near_depth = vec![0u16; width * height];
    let mut far_depth = vec![0u16; width * height];
    let mut occupancy = vec![false; width * height];
    let mut missed = 0;
    for (pix, mut depths) in per_pixel {
        depths.sort_unstable();
        depths.dedup();
        let near = depths[0];
        let limit = near + tau.0 as u32;
        let far = depths.iter().copied().filter(|&d| d <= limit).max().unwrap_or(near);
        missed += depths.iter().filter(|&&d| d > limit).count();
        near_depth[pix] = near as u16;
        far_depth[pix] = far as u16;
        occupancy[pix] = true;
    }

    Ok(ProjectedPatch {
        patch: Patch {
            axis,
            origin3d: origin,
            u0: 0,
            v0: 0,
            width,
            height,
            near_depth,
            far_depth,
            occupancy,
        },
        missed,
    })
}

/// Full forward projection of a cloud with normals.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Packed and padded frames.
    pub frames: GeometryFramePair,
    pub missed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionParams {
    pub tau: SurfaceThickness,
    pub frame_width: usize,
    pub min_patch_size: usize,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self {
            tau: SurfaceThickness(4),
            frame_width: 640,
            min_patch_size: 4,
        }
    }
}

/// Segment, project, pack and pad.
pub fn project_cloud(cloud: &PointCloud, params: &ProjectionParams) -> Result<Projection, ProjectionError> {
    let segments = segment_patches(cloud, params.min_patch_size)?;
    let mut patches = Vec::with_capacity(segments.len());
    let mut missed = 0;
    for seg in &segments {
        let pp = project_patch(cloud, &seg.indices, seg.axis, params.tau)?;
        missed += pp.missed;
        patches.push(pp.patch);
    }
    let frames = pack_patches(&patches, params.frame_width, cloud.bit_depth())?;
    Ok(Projection {
        frames: pad_frames(frames),
        missed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<Point3>) -> PointCloud {
        PointCloud::new(points, 8).unwrap()
    }

    #[test]
    fn thickness_window_drops_deep_points() {
        // pixel (0,0) has depths 3, 5, 9; pixel (1,0) pins the depth origin at 0
        let pc = cloud(vec![
            Point3::new(0, 0, 3),
            Point3::new(0, 0, 5),
            Point3::new(0, 0, 9),
            Point3::new(1, 0, 0),
        ]);
        let pp = project_patch(&pc, &[0, 1, 2, 3], Axis::PosZ, SurfaceThickness(4)).unwrap();
        assert_eq!(pp.missed, 1);
        assert_eq!(pp.patch.near_depth[0], 3);
        assert_eq!(pp.patch.far_depth[0], 5);
        assert_eq!((pp.patch.near_depth[1], pp.patch.far_depth[1]), (0, 0));
        assert_eq!(pp.patch.occupancy, vec![true, true]);
    }

    #[test]
    fn single_point_pixel_has_equal_layers() {
        let pc = cloud(vec![Point3::new(2, 2, 7), Point3::new(3, 2, 0)]);
        let pp = project_patch(&pc, &[0, 1], Axis::PosZ, SurfaceThickness(4)).unwrap();
        assert_eq!((pp.patch.near_depth[0], pp.patch.far_depth[0]), (7, 7));
        assert_eq!(pp.missed, 0);
    }

    #[test]
    fn negative_axis_measures_from_the_top() {
        let pc = cloud(vec![Point3::new(0, 0, 10), Point3::new(0, 0, 8), Point3::new(1, 0, 12)]);
        let pp = project_patch(&pc, &[0, 1, 2], Axis::NegZ, SurfaceThickness(4)).unwrap();
        assert_eq!(pp.patch.origin3d.z, 12);
        assert_eq!((pp.patch.near_depth[0], pp.patch.far_depth[0]), (2, 4));
        assert_eq!(pp.patch.near_depth[1], 0);
    }

    #[test]
    fn empty_patch_is_rejected() {
        let pc = cloud(vec![Point3::new(0, 0, 0)]);
        assert_eq!(
            project_patch(&pc, &[], Axis::PosX, SurfaceThickness(4)),
            Err(ProjectionError::EmptyPatch)
        );
    }
}
