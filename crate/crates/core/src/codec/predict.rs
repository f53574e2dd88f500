use super::MergeFlavor;
use crate::projection::Frame;

/// DC intra predictor for the `size×size` unit at `(x0, y0)`.
///
/// Rounded mean of the reconstructed row above and column to the left,
/// whichever exist; `2^(b−1)` when neither does.
pub fn intra_dc(recon: &Frame, x0: usize, y0: usize, size: usize, bit_depth: u8) -> i32 {
    let mut sum = 0u64;
    let mut cnt = 0u64;
    if y0 > 0 {
        let base = (y0 - 1) * recon.width + x0;
        sum += recon.data[base..base + size].iter().map(|&v| v as u64).sum::<u64>();
        cnt += size as u64;
    }
    if x0 > 0 {
        for y in y0..y0 + size {
            sum += recon.data[y * recon.width + x0 - 1] as u64;
        }
        cnt += size as u64;
    }
    if cnt == 0 {
        1 << (bit_depth - 1)
    } else {
        ((sum + cnt / 2) / cnt) as i32
    }
}

/// Zero-motion merge prediction from a co-located reference block.
pub fn merge_prediction(ref_block: &[i32], occupancy: &[bool], flavor: MergeFlavor, bit_depth: u8) -> Vec<i32> {
    assert_eq!(ref_block.len(), occupancy.len(), "blocks must have the same size");
    let max = (1i32 << bit_depth) - 1;
    match flavor {
        MergeFlavor::Baseline => ref_block.to_vec(),
        MergeFlavor::Om => ref_block
            .iter()
            .zip(occupancy)
            .map(|(&r, &o)| if o { (r + 1).min(max) } else { r })
            .collect(),
        MergeFlavor::NonOm => ref_block.iter().map(|&r| (r + 1).min(max)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_flavors() {
        let r = [2, 2, 2, 2];
        let o = [true, true, false, false];
        assert_eq!(merge_prediction(&r, &o, MergeFlavor::Om, 10), vec![3, 3, 2, 2]);
        assert_eq!(merge_prediction(&r, &o, MergeFlavor::NonOm, 10), vec![3, 3, 3, 3]);
        assert_eq!(merge_prediction(&r, &o, MergeFlavor::Baseline, 10), r.to_vec());
        assert_eq!(merge_prediction(&r, &[false; 4], MergeFlavor::Om, 10), r.to_vec());
    }

    #[test]
    fn merge_clamps() {
        assert_eq!(merge_prediction(&[255, 3], &[true, true], MergeFlavor::Om, 8), vec![255, 4]);
        assert_eq!(merge_prediction(&[255], &[false], MergeFlavor::NonOm, 8), vec![255]);
    }

    #[test]
    fn dc_neighbours() {
        let mut f = Frame::new(16, 16, 0);
        assert_eq!(intra_dc(&f, 0, 0, 8, 10), 512);
        for x in 8..16 {
            f.set(x, 7, 10);
        }
        assert_eq!(intra_dc(&f, 8, 8, 8, 10), 5);
        for y in 8..16 {
            f.set(7, y, 11);
        }
        assert_eq!(intra_dc(&f, 8, 8, 8, 10), 11); // (80 + 88 + 8) / 16
        assert_eq!(intra_dc(&f, 0, 8, 8, 10), 0);
    }
}
