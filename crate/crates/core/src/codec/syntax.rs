//! Coding-unit syntax and reconstruction shared by encoder and decoder.

use super::bits::{BitReader, BitSink};
use super::predict::{intra_dc, merge_prediction};
use super::transform::{dequant_itransform, zigzag};
use super::{CodecConfig, CodecError};
use crate::projection::{Frame, OccupancyMap};

/// Largest coefficient magnitude the decoder accepts.
const MAX_LEVEL: i64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CuMode {
    IntraDc,
    Skip,
    Merge,
    Split,
}

impl CuMode {
    pub fn has_residual(self) -> bool {
        matches!(self, CuMode::IntraDc | CuMode::Merge)
    }
}

#[derive(Clone, Copy)]
pub(super) enum Layer<'a> {
    Near,
    Far {
        reference: &'a Frame,
        occupancy: &'a OccupancyMap,
    },
}

impl Layer<'_> {
    pub fn is_far(&self) -> bool {
        matches!(self, Layer::Far { .. })
    }

    /// Non-split candidates in tie-break order.
    pub fn candidates(&self) -> &'static [CuMode] {
        match self {
            Layer::Near => &[CuMode::IntraDc],
            Layer::Far { .. } => &[CuMode::Skip, CuMode::Merge, CuMode::IntraDc],
        }
    }
}

pub(super) fn write_split<S: BitSink>(s: &mut S, size: usize, min_cu: usize, split: bool) {
    if size > min_cu {
        s.put_bit(split);
    }
}

pub(super) fn read_split(r: &mut BitReader, size: usize, min_cu: usize) -> Result<bool, CodecError> {
    if size > min_cu {
        r.bit()
    } else {
        Ok(false)
    }
}

/// Far-layer mode codes: SKIP `1`, MERGE `01`, INTRA_DC `001`. The near
/// layer has a single leaf mode and spends no bits on it.
pub(super) fn write_mode<S: BitSink>(s: &mut S, layer: &Layer, mode: CuMode) {
    if !layer.is_far() {
        return;
    }
    match mode {
        CuMode::Skip => s.put(0b1, 1),
        CuMode::Merge => s.put(0b01, 2),
        CuMode::IntraDc => s.put(0b001, 3),
        CuMode::Split => unreachable!("split is signalled by the split flag"),
    }
}

pub(super) fn read_mode(r: &mut BitReader, layer: &Layer) -> Result<CuMode, CodecError> {
    if !layer.is_far() {
        return Ok(CuMode::IntraDc);
    }
    if r.bit()? {
        return Ok(CuMode::Skip);
    }
    if r.bit()? {
        return Ok(CuMode::Merge);
    }
    if r.bit()? {
        return Ok(CuMode::IntraDc);
    }
    Err(CodecError::Corrupt("invalid far-layer mode code".into()))
}

/// `ue(last + 1)` (0 for an all-zero block), then `se` levels along the
/// zig-zag scan up to the last significant one.
pub(super) fn write_coeffs<S: BitSink>(s: &mut S, levels: &[i32], n: usize) {
    let scan = zigzag(n);
    let last = scan.iter().rposition(|&i| levels[i] != 0);
    match last {
        None => s.put_ue(0),
        Some(last) => {
            s.put_ue(last as u64 + 1);
            for &i in &scan[..=last] {
                s.put_se(levels[i] as i64);
            }
        }
    }
}

pub(super) fn read_coeffs(r: &mut BitReader, n: usize) -> Result<Vec<i32>, CodecError> {
    let mut levels = vec![0i32; n * n];
    let count = r.ue()?;
    if count > (n * n) as u64 {
        return Err(CodecError::Corrupt(format!("last position {count} beyond {n}×{n} block")));
    }
    for &i in &zigzag(n)[..count as usize] {
        let v = r.se()?;
        if v.abs() > MAX_LEVEL {
            return Err(CodecError::Corrupt(format!("coefficient level {v} out of range")));
        }
        levels[i] = v as i32;
    }
    Ok(levels)
}

pub(super) fn read_block(f: &Frame, x0: usize, y0: usize, n: usize) -> Vec<i32> {
    let mut out = Vec::with_capacity(n * n);
    for y in y0..y0 + n {
        let base = y * f.width + x0;
        out.extend(f.data[base..base + n].iter().map(|&v| v as i32));
    }
    out
}

pub(super) fn write_block(f: &mut Frame, x0: usize, y0: usize, n: usize, block: &[i32]) {
    for (r, row) in block.chunks_exact(n).enumerate() {
        let base = (y0 + r) * f.width + x0;
        for (dst, &v) in f.data[base..base + n].iter_mut().zip(row) {
            *dst = v as u16;
        }
    }
}

pub(super) fn predict(
    layer: &Layer,
    recon: &Frame,
    x0: usize,
    y0: usize,
    n: usize,
    mode: CuMode,
    cfg: &CodecConfig,
) -> Vec<i32> {
    match (mode, layer) {
        (CuMode::IntraDc, _) => vec![intra_dc(recon, x0, y0, n, cfg.bit_depth); n * n],
        (CuMode::Skip, Layer::Far { reference, .. }) => read_block(reference, x0, y0, n),
        (CuMode::Merge, Layer::Far { reference, occupancy }) => {
            let r = read_block(reference, x0, y0, n);
            let mut occ = Vec::with_capacity(n * n);
            for y in y0..y0 + n {
                let base = y * occupancy.width + x0;
                occ.extend_from_slice(&occupancy.data[base..base + n]);
            }
            merge_prediction(&r, &occ, cfg.merge, cfg.bit_depth)
        }
        _ => unreachable!("mode {mode:?} not available on this layer"),
    }
}

/// `clamp(pred + residual)` with the residual from the shared inverse path.
pub(super) fn reconstruct(pred: &[i32], levels: Option<&[i32]>, n: usize, cfg: &CodecConfig) -> Vec<i32> {
    let max = (1i32 << cfg.bit_depth) - 1;
    match levels {
        None => pred.to_vec(),
        Some(levels) => {
            let res = dequant_itransform(levels, n, cfg.qp);
            pred.iter().zip(&res).map(|(&p, &r)| (p + r).clamp(0, max)).collect()
        }
    }
}
