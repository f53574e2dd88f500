use super::GeometryFramePair;

const BLOCK: usize = 4;

/// Fills unoccupied pixels so that near and far frames agree there.
///
/// Works over 4×4 blocks in raster order. An empty block copies the last
/// row of the block above, or failing that the last column of the block to
/// the left, or mid-grey `2^(b−1)` for the first block. A partially
/// occupied block fills each hole from its nearest occupied pixel in the
/// block (ties: smaller row, then smaller column). Fill values come from the
/// near frame and are written to both frames.
pub fn pad_frames(mut frames: GeometryFramePair) -> GeometryFramePair {
    let (w, h) = (frames.width(), frames.height());
    let mid = 1u16 << (frames.bit_depth - 1);
    for by in (0..h).step_by(BLOCK) {
        for bx in (0..w).step_by(BLOCK) {
            let bw = BLOCK.min(w - bx);
            let bh = BLOCK.min(h - by);
            let mut occupied = Vec::with_capacity(BLOCK * BLOCK);
            for r in 0..bh {
                for c in 0..bw {
                    if frames.occupancy.get(bx + c, by + r) {
                        occupied.push((r, c));
                    }
                }
            }
            if occupied.len() == bw * bh {
                continue;
            }
            for r in 0..bh {
                for c in 0..bw {
                    let (x, y) = (bx + c, by + r);
                    if frames.occupancy.get(x, y) {
                        continue;
                    }
                    let value = if occupied.is_empty() {
                        if by > 0 {
                            frames.near.get(x, by - 1)
                        } else if bx > 0 {
                            frames.near.get(bx - 1, y)
                        } else {
                            mid
                        }
                    } else {
                        // occupied is in (row, col) order, so min_by_key keeps the tie rule
                        let &(sr, sc) = occupied
                            .iter()
                            .min_by_key(|&&(rr, cc)| {
                                let dr = rr as i64 - r as i64;
                                let dc = cc as i64 - c as i64;
                                dr * dr + dc * dc
                            })
                            .expect("non-empty");
                        frames.near.get(bx + sc, by + sr)
                    };
                    frames.near.set(x, y, value);
                    frames.far.set(x, y, value);
                }
            }
        }
    }
    frames
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{Frame, OccupancyMap};

    fn pair(w: usize, h: usize, b: u8) -> GeometryFramePair {
        GeometryFramePair {
            near: Frame::new(w, h, 0),
            far: Frame::new(w, h, 0),
            occupancy: OccupancyMap::new(w, h),
            patches: Vec::new(),
            bit_depth: b,
        }
    }

    #[test]
    fn fully_occupied_unchanged() {
        let mut f = pair(8, 8, 8);
        f.occupancy = OccupancyMap::filled(8, 8);
        for (i, v) in f.near.data.iter_mut().enumerate() {
            *v = i as u16;
        }
        f.far.data = f.near.data.iter().map(|v| v + 1).collect();
        let padded = pad_frames(f.clone());
        assert_eq!(padded, f);
    }

    #[test]
    fn empty_frame_mid_grey() {
        let padded = pad_frames(pair(8, 8, 8));
        assert!(padded.near.data.iter().all(|&v| v == 128));
        assert!(padded.far.data.iter().all(|&v| v == 128));
    }

    #[test]
    fn hole_takes_nearest_occupied() {
        let mut f = pair(4, 4, 8);
        f.occupancy = OccupancyMap::filled(4, 4);
        f.occupancy.set(1, 0, false);
        f.near.set(0, 0, 9);
        f.far.set(0, 0, 11);
        f.near.set(1, 1, 20);
        f.near.set(2, 0, 30);
        let padded = pad_frames(f);
        // (0,0), (2,0) and (1,1) are all at distance 1: row 0 wins, then column 0
        assert_eq!(padded.near.get(1, 0), 9);
        assert_eq!(padded.far.get(1, 0), 9);
    }

    #[test]
    fn empty_blocks_copy_above_then_left() {
        let mut f = pair(8, 8, 8);
        // top-left block fully occupied with column-dependent values
        for y in 0..4 {
            for x in 0..4 {
                f.occupancy.set(x, y, true);
                f.near.set(x, y, (10 * (x + 1) + y) as u16);
                f.far.set(x, y, 99);
            }
        }
        let p = pad_frames(f);
        // block right of it: copies left block's last column, row by row
        for y in 0..4 {
            assert_eq!(p.near.get(5, y), (40 + y) as u16);
        }
        // block below: copies last row of the block above, column by column
        for y in 4..8 {
            for x in 0..4 {
                assert_eq!(p.near.get(x, y), (10 * (x + 1) + 3) as u16);
            }
        }
        for i in 0..64 {
            if !p.occupancy.data[i] {
                assert_eq!(p.near.data[i], p.far.data[i]);
            }
        }
    }
}
