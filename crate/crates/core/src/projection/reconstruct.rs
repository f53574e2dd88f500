use super::{GeometryFramePair, ProjectionError, SurfaceThickness};
use crate::pointcloud::{max_coord, Point3, PointCloud};

/// Rebuilds the point cloud from (possibly decoded) frames.
///
/// Every occupied pixel yields its near-layer point, plus the far-layer
/// point when far > near. Far is first clamped into `[near, near + τ]`.
/// Coordinates leaving the grid are clamped into it.
pub fn reconstruct_cloud(frames: &GeometryFramePair, tau: SurfaceThickness) -> Result<PointCloud, ProjectionError> {
    let (w, h) = (frames.width(), frames.height());
    let mut owner = vec![u32::MAX; w * h];
    for (pi, p) in frames.patches.iter().enumerate() {
        for v in p.v0..(p.v0 + p.height).min(h) {
            for u in p.u0..(p.u0 + p.width).min(w) {
                owner[v * w + u] = pi as u32;
            }
        }
    }

    let max = max_coord(frames.bit_depth) as i64;
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !frames.occupancy.data[i] {
                continue;
            }
            let pi = owner[i];
            if pi == u32::MAX {
                return Err(ProjectionError::CorruptPatchTable { x, y });
            }
            let patch = &frames.patches[pi as usize];
            let near = frames.near.data[i] as i64;
            let far = (frames.far.data[i] as i64).clamp(near, near + tau.0 as i64);
            let (ua, va) = patch.axis.tangent_axes();
            let da = patch.axis.depth_axis();
            let mut base = [0i64; 3];
            base[ua] = patch.origin3d.coord(ua) as i64 + (x - patch.u0) as i64;
            base[va] = patch.origin3d.coord(va) as i64 + (y - patch.v0) as i64;
            let sign = if patch.axis.is_positive() { 1 } else { -1 };
            let emit = |depth: i64, points: &mut Vec<Point3>| {
                let mut c = base;
                c[da] = patch.origin3d.coord(da) as i64 + sign * depth;
                let q = |v: i64| v.clamp(0, max) as u32;
                points.push(Point3::new(q(c[0]), q(c[1]), q(c[2])));
            };
            emit(near, &mut points);
            if far > near {
                emit(far, &mut points);
            }
        }
    }
    Ok(PointCloud::new(points, frames.bit_depth).expect("coordinates clamped into range"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{Axis, Frame, OccupancyMap, PatchPlacement};

    fn one_pixel(near: u16, far: u16, occupied: bool) -> GeometryFramePair {
        let mut occ = OccupancyMap::new(4, 4);
        occ.set(1, 1, occupied);
        let mut n = Frame::new(4, 4, near);
        let mut f = Frame::new(4, 4, near);
        n.set(1, 1, near);
        f.set(1, 1, far);
        GeometryFramePair {
            near: n,
            far: f,
            occupancy: occ,
            patches: vec![PatchPlacement {
                axis: Axis::PosZ,
                origin3d: Point3::new(10, 20, 30),
                u0: 0,
                v0: 0,
                width: 4,
                height: 4,
            }],
            bit_depth: 8,
        }
    }

    #[test]
    fn near_and_far_points() {
        let pc = reconstruct_cloud(&one_pixel(3, 5, true), SurfaceThickness(4)).unwrap();
        assert_eq!(pc.points(), &[Point3::new(11, 21, 33), Point3::new(11, 21, 35)]);
    }

    #[test]
    fn equal_layers_give_one_point() {
        let pc = reconstruct_cloud(&one_pixel(7, 7, true), SurfaceThickness(4)).unwrap();
        assert_eq!(pc.len(), 1);
    }

    #[test]
    fn unoccupied_pixels_emit_nothing() {
        let pc = reconstruct_cloud(&one_pixel(3, 5, false), SurfaceThickness(4)).unwrap();
        assert!(pc.is_empty());
    }

    #[test]
    fn far_is_clamped_into_window() {
        let pc = reconstruct_cloud(&one_pixel(3, 12, true), SurfaceThickness(4)).unwrap();
        assert_eq!(pc.points()[1], Point3::new(11, 21, 37));
        let pc = reconstruct_cloud(&one_pixel(6, 2, true), SurfaceThickness(4)).unwrap();
        assert_eq!(pc.len(), 1);
    }

    #[test]
    fn orphan_pixel_is_an_error() {
        let mut f = one_pixel(3, 5, true);
        f.patches[0].width = 1;
        assert_eq!(
            reconstruct_cloud(&f, SurfaceThickness(4)),
            Err(ProjectionError::CorruptPatchTable { x: 1, y: 1 })
        );
    }
}
