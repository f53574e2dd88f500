//! Point-cloud data model, ASCII PLY I/O, voxelization and normal estimation.

mod normals;
mod ply;

use std::collections::HashSet;

use thiserror::Error;

pub use normals::{estimate_normals, NormalDiagnostics, NormalEstimation};
pub use ply::{load_ply, parse_ply, save_ply, write_ply, PlyError};

/// Largest supported geometry bit depth.
pub const MAX_BIT_DEPTH: u8 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum PointCloudError {
    #[error("point cloud is empty")]
    Empty,
    #[error("bit depth {0} outside [1, 16]")]
    BitDepth(u8),
    #[error("normal count {normals} does not match point count {points}")]
    NormalCount { points: usize, normals: usize },
    #[error("coordinate {coord} does not fit in {bit_depth} bits")]
    OutOfRange { coord: u32, bit_depth: u8 },
    #[error("need at least k={k} points for normal estimation, have {n}")]
    TooFewPoints { n: usize, k: usize },
}

/// Integer voxel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Point3 {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl Point3 {
    pub const fn new(x: u32, y: u32, z: u32) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> u32 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn set_coord(&mut self, axis: usize, value: u32) {
        match axis {
            0 => self.x = value,
            1 => self.y = value,
            _ => self.z = value,
        }
    }

    #[inline]
    pub fn to_f64(self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }

    #[inline]
    pub fn dist2(&self, other: &Point3) -> u64 {
        let dx = self.x as i64 - other.x as i64;
        let dy = self.y as i64 - other.y as i64;
        let dz = self.z as i64 - other.z as i64;
        (dx * dx + dy * dy + dz * dz) as u64
    }
}

/// Unit 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3 {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl UnitVec3 {
    /// Normalizes `v`; returns `None` for zero or non-finite input.
    pub fn new(v: [f64; 3]) -> Option<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(Self {
            nx: v[0] / n,
            ny: v[1] / n,
            nz: v[2] / n,
        })
    }

    pub const fn z() -> Self {
        Self {
            nx: 0.0,
            ny: 0.0,
            nz: 1.0,
        }
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn dot(&self, v: [f64; 3]) -> f64 {
        self.nx * v[0] + self.ny * v[1] + self.nz * v[2]
    }

    pub fn negated(&self) -> Self {
        Self {
            nx: -self.nx,
            ny: -self.ny,
            nz: -self.nz,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.nx * self.nx + self.ny * self.ny + self.nz * self.nz).sqrt()
    }
}

/// Point set as read from disk, before voxelization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawCloud {
    pub positions: Vec<[f64; 3]>,
    pub normals: Option<Vec<UnitVec3>>,
    /// Grid bit depth the coordinates were voxelized at, if known.
    pub bit_depth: Option<u8>,
}

impl RawCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Voxelized cloud: unique integer points, optional parallel unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<UnitVec3>>,
    bit_depth: u8,
}

impl PointCloud {
    /// Builds a cloud from integer points, dropping duplicates (first occurrence wins).
    pub fn new(points: Vec<Point3>, bit_depth: u8) -> Result<Self, PointCloudError> {
        Self::with_normals(points, None, bit_depth)
    }

    pub fn with_normals(
        points: Vec<Point3>,
        normals: Option<Vec<UnitVec3>>,
        bit_depth: u8,
    ) -> Result<Self, PointCloudError> {
        check_bit_depth(bit_depth)?;
        if let Some(n) = &normals {
            if n.len() != points.len() {
                return Err(PointCloudError::NormalCount {
                    points: points.len(),
                    normals: n.len(),
                });
            }
        }
        let max = max_coord(bit_depth);
        for p in &points {
            for a in 0..3 {
                if p.coord(a) > max {
                    return Err(PointCloudError::OutOfRange {
                        coord: p.coord(a),
                        bit_depth,
                    });
                }
            }
        }
        let mut seen = HashSet::with_capacity(points.len());
        let mut out_points = Vec::with_capacity(points.len());
        let mut out_normals = normals.as_ref().map(|_| Vec::with_capacity(points.len()));
        for (i, p) in points.iter().enumerate() {
            if seen.insert(*p) {
                out_points.push(*p);
                if let (Some(dst), Some(src)) = (out_normals.as_mut(), normals.as_ref()) {
                    dst.push(src[i]);
                }
            }
        }
        Ok(Self {
            points: out_points,
            normals: out_normals,
            bit_depth,
        })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[UnitVec3]> {
        self.normals.as_deref()
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Replaces the normals. Length must match.
    pub fn set_normals(&mut self, normals: Vec<UnitVec3>) -> Result<(), PointCloudError> {
        if normals.len() != self.points.len() {
            return Err(PointCloudError::NormalCount {
                points: self.points.len(),
                normals: normals.len(),
            });
        }
        self.normals = Some(normals);
        Ok(())
    }

    pub fn without_normals(&self) -> Self {
        Self {
            points: self.points.clone(),
            normals: None,
            bit_depth: self.bit_depth,
        }
    }

    /// Inclusive bounding box, `None` when empty.
    pub fn bounding_box(&self) -> Option<(Point3, Point3)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points[1..] {
            lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        Some((lo, hi))
    }

    pub fn to_raw(&self) -> RawCloud {
        RawCloud {
            positions: self.points.iter().map(|p| p.to_f64()).collect(),
            normals: self.normals.clone(),
            bit_depth: Some(self.bit_depth),
        }
    }

    /// Points as a sorted vector, for set comparisons.
    pub fn sorted_points(&self) -> Vec<Point3> {
        let mut v = self.points.clone();
        v.sort_unstable();
        v
    }
}

#[inline]
pub fn max_coord(bit_depth: u8) -> u32 {
    ((1u64 << bit_depth) - 1) as u32
}

fn check_bit_depth(b: u8) -> Result<(), PointCloudError> {
    if (1..=MAX_BIT_DEPTH).contains(&b) {
        Ok(())
    } else {
        Err(PointCloudError::BitDepth(b))
    }
}

/// Maps a raw cloud onto the integer grid `[0, 2^b − 1]³`.
///
/// A cloud already voxelized at `b` (declared bit depth equal to `b`, all
/// coordinates integers inside the grid) is kept as is. Anything else is
/// mapped with one uniform scale: the smallest coordinate (or 0, whichever
/// is lower) goes to 0 and the largest to `2^b − 1`. Coordinates are rounded to nearest and duplicates are
/// dropped, keeping the first occurrence and its normal.
pub fn voxelize(cloud: &RawCloud, bit_depth: u8) -> Result<PointCloud, PointCloudError> {
    check_bit_depth(bit_depth)?;
    if cloud.is_empty() {
        return Err(PointCloudError::Empty);
    }
    let max = max_coord(bit_depth) as f64;
    let on_grid = cloud.bit_depth == Some(bit_depth)
        && cloud
            .positions
            .iter()
            .flatten()
            .all(|&c| c.fract() == 0.0 && (0.0..=max).contains(&c));

    let (origin, scale) = if on_grid {
        (0.0, 1.0)
    } else {
        let lo = cloud
            .positions
            .iter()
            .flatten()
            .fold(0.0f64, |m, &c| m.min(c));
        let hi = cloud
            .positions
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |m, &c| m.max(c));
        let extent = hi - lo;
        (lo, if extent > 0.0 { max / extent } else { 1.0 })
    };

    let points = cloud
        .positions
        .iter()
        .map(|p| {
            let q = |c: f64| ((c - origin) * scale).round().clamp(0.0, max) as u32;
            Point3::new(q(p[0]), q(p[1]), q(p[2]))
        })
        .collect();
    PointCloud::with_normals(points, cloud.normals.clone(), bit_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pts: &[[f64; 3]]) -> RawCloud {
        RawCloud {
            positions: pts.to_vec(),
            normals: None,
            bit_depth: None,
        }
    }

    #[test]
    fn unit_cube_corners_map_to_grid_extremes() {
        let pc = voxelize(&raw(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]), 10).unwrap();
        assert_eq!(pc.points(), &[Point3::new(0, 0, 0), Point3::new(1023, 1023, 1023)]);
        assert_eq!(pc.bit_depth(), 10);
    }

    #[test]
    fn rounding_collision_deduplicates() {
        // scale = 1 / 0.6: 0.4 -> 0.667 -> 1, 0.6 -> 1
        let pc = voxelize(&raw(&[[0.4, 0.0, 0.0], [0.6, 0.0, 0.0]]), 1).unwrap();
        assert_eq!(pc.points(), &[Point3::new(1, 0, 0)]);
    }

    #[test]
    fn on_grid_cloud_is_identity_and_idempotent() {
        let pts = [[3.0, 7.0, 1.0], [0.0, 2.0, 9.0], [3.0, 7.0, 1.0]];
        let mut declared = raw(&pts);
        declared.bit_depth = Some(4);
        let once = voxelize(&declared, 4).unwrap();
        assert_eq!(once.points(), &[Point3::new(3, 7, 1), Point3::new(0, 2, 9)]);
        let twice = voxelize(&once.to_raw(), 4).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn voxelize_errors() {
        assert_eq!(voxelize(&RawCloud::default(), 8), Err(PointCloudError::Empty));
        assert_eq!(
            voxelize(&raw(&[[0.0; 3]]), 0),
            Err(PointCloudError::BitDepth(0))
        );
        assert_eq!(
            voxelize(&raw(&[[0.0; 3]]), 17),
            Err(PointCloudError::BitDepth(17))
        );
    }

    #[test]
    fn dedup_keeps_first_normal() {
        let n1 = UnitVec3::new([1.0, 0.0, 0.0]).unwrap();
        let n2 = UnitVec3::new([0.0, 1.0, 0.0]).unwrap();
        let pc = PointCloud::with_normals(
            vec![Point3::new(1, 1, 1), Point3::new(1, 1, 1)],
            Some(vec![n1, n2]),
            4,
        )
        .unwrap();
        assert_eq!(pc.len(), 1);
        assert_eq!(pc.normals().unwrap()[0], n1);
    }

    #[test]
    fn out_of_range_rejected() {
        let err = PointCloud::new(vec![Point3::new(16, 0, 0)], 4).unwrap_err();
        assert_eq!(
            err,
            PointCloudError::OutOfRange {
                coord: 16,
                bit_depth: 4
            }
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn voxelize_is_idempotent(
                pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 1..60),
                b in 1u8..12,
            ) {
                let raw = RawCloud { positions: pts.iter().map(|&(x, y, z)| [x, y, z]).collect(), normals: None, bit_depth: None };
                let once = voxelize(&raw, b).unwrap();
                let twice = voxelize(&once.to_raw(), b).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
