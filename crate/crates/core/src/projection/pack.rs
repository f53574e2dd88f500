use super::{Frame, GeometryFramePair, OccupancyMap, Patch, ProjectionError};

/// Patch positions and footprints snap to this grid.
pub const PATCH_ALIGN: usize = 8;
/// Frame dimensions are multiples of the coding tree unit size.
pub const FRAME_HEIGHT_ALIGN: usize = 64;

fn align_up(v: usize, a: usize) -> usize {
    v.div_ceil(a) * a
}

/// Shelf packing: patches sorted by decreasing height (stable), placed left
/// to right on 8-aligned footprints, opening a new shelf when the current
/// one is full. Frame height grows to fit and is rounded up to 64.
///
/// The patch table keeps the input order.
pub fn pack_patches(
    patches: &[Patch],
    frame_width: usize,
    bit_depth: u8,
) -> Result<GeometryFramePair, ProjectionError> {
    if frame_width == 0 || frame_width % FRAME_HEIGHT_ALIGN != 0 {
        return Err(ProjectionError::InvalidFrameWidth(frame_width));
    }
    if let Some(p) = patches.iter().find(|p| p.width > frame_width) {
        return Err(ProjectionError::PatchTooWide {
            width: p.width,
            frame_width,
        });
    }

    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.sort_by(|&a, &b| patches[b].height.cmp(&patches[a].height));

    let mut placed = vec![(0usize, 0usize); patches.len()];
    let (mut x, mut shelf_y, mut shelf_h) = (0usize, 0usize, 0usize);
    for &i in &order {
        let w = align_up(patches[i].width, PATCH_ALIGN);
        let h = align_up(patches[i].height, PATCH_ALIGN);
        if x + w > frame_width {
            shelf_y += shelf_h;
            x = 0;
            shelf_h = 0;
        }
        placed[i] = (x, shelf_y);
        x += w;
        shelf_h = shelf_h.max(h);
    }
    let height = align_up((shelf_y + shelf_h).max(1), FRAME_HEIGHT_ALIGN);

    let mut near = Frame::new(frame_width, height, 0);
    let mut far = Frame::new(frame_width, height, 0);
    let mut occupancy = OccupancyMap::new(frame_width, height);
    let mut table = Vec::with_capacity(patches.len());
    for (p, &(u0, v0)) in patches.iter().zip(&placed) {
        for v in 0..p.height {
            for u in 0..p.width {
                let src = v * p.width + u;
                if p.occupancy[src] {
                    near.set(u0 + u, v0 + v, p.near_depth[src]);
                    far.set(u0 + u, v0 + v, p.far_depth[src]);
                    occupancy.set(u0 + u, v0 + v, true);
                }
            }
        }
        let mut placement = p.placement();
        placement.u0 = u0;
        placement.v0 = v0;
        table.push(placement);
    }

    Ok(GeometryFramePair {
        near,
        far,
        occupancy,
        patches: table,
        bit_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Point3;
    use crate::projection::Axis;

    fn patch(width: usize, height: usize) -> Patch {
        Patch {
            axis: Axis::PosZ,
            origin3d: Point3::default(),
            u0: 0,
            v0: 0,
            width,
            height,
            near_depth: vec![1; width * height],
            far_depth: vec![2; width * height],
            occupancy: vec![true; width * height],
        }
    }

    fn footprint(p: &crate::projection::PatchPlacement) -> (usize, usize, usize, usize) {
        (p.u0, p.v0, align_up(p.width, PATCH_ALIGN), align_up(p.height, PATCH_ALIGN))
    }

    #[test]
    fn single_patch() {
        let f = pack_patches(&[patch(16, 16)], 64, 8).unwrap();
        assert_eq!((f.patches[0].u0, f.patches[0].v0), (0, 0));
        assert_eq!((f.width(), f.height()), (64, 64));
        assert_eq!(f.occupancy.count(), 256);
    }

    #[test]
    fn two_patches_share_a_shelf() {
        let f = pack_patches(&[patch(16, 16), patch(16, 16)], 64, 8).unwrap();
        assert_eq!((f.patches[1].u0, f.patches[1].v0), (16, 0));
    }

    #[test]
    fn too_wide() {
        assert_eq!(
            pack_patches(&[patch(100, 4)], 64, 8),
            Err(ProjectionError::PatchTooWide {
                width: 100,
                frame_width: 64
            })
        );
        assert_eq!(
            pack_patches(&[patch(10, 4)], 100, 8),
            Err(ProjectionError::InvalidFrameWidth(100))
        );
    }

    #[test]
    fn shelves_and_height_growth() {
        let patches = vec![patch(30, 10), patch(40, 50), patch(50, 20), patch(9, 9)];
        let f = pack_patches(&patches, 64, 8).unwrap();
        // tallest first
        assert_eq!((f.patches[1].u0, f.patches[1].v0), (0, 0));
        assert_eq!((f.patches[2].u0, f.patches[2].v0), (0, 56));
        assert_eq!(f.height() % 64, 0);
        assert!(f.height() >= 56 + 24);
    }

    #[test]
    fn footprints_disjoint() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..20);
            let patches: Vec<Patch> = (0..n).map(|_| patch(rng.gen_range(1..128), rng.gen_range(1..60))).collect();
            let f = pack_patches(&patches, 128, 10).unwrap();
            for i in 0..n {
                let a = footprint(&f.patches[i]);
                assert!(a.0 + a.2 <= 128 && a.1 + a.3 <= f.height());
                for j in i + 1..n {
                    let b = footprint(&f.patches[j]);
                    let overlap = a.0 < b.0 + b.2 && b.0 < a.0 + a.2 && a.1 < b.1 + b.3 && b.1 < a.1 + a.3;
                    assert!(!overlap);
                }
            }
        }
    }
}
