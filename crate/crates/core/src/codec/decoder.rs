use super::bitstream::{read_container, Header};
use super::bits::BitReader;
use super::syntax::{predict, read_coeffs, read_mode, read_split, reconstruct, write_block, Layer};
use super::{CodecConfig, CodecError, CTU_SIZE};
use crate::projection::{Frame, GeometryFramePair, OccupancyMap, SurfaceThickness};

#[derive(Debug, Clone)]
pub struct Decoded {
    pub header: Header,
    /// Configuration recovered from the header; encoder-only fields keep
    /// their defaults.
    pub config: CodecConfig,
    pub frames: GeometryFramePair,
    /// Bits consumed by the two coding trees, excluding byte padding.
    pub geometry_bits: u64,
}

fn decode_cu(
    r: &mut BitReader,
    layer: &Layer,
    recon: &mut Frame,
    x: usize,
    y: usize,
    n: usize,
    cfg: &CodecConfig,
) -> Result<(), CodecError> {
    if read_split(r, n, cfg.min_cu)? {
        let h = n / 2;
        for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
            decode_cu(r, layer, recon, x + dx, y + dy, h, cfg)?;
        }
        return Ok(());
    }
    let mode = read_mode(r, layer)?;
    let levels = if mode.has_residual() { Some(read_coeffs(r, n)?) } else { None };
    let pred = predict(layer, recon, x, y, n, mode, cfg);
    let block = reconstruct(&pred, levels.as_deref(), n, cfg);
    write_block(recon, x, y, n, &block);
    Ok(())
}

fn decode_layer(
    payload: &[u8],
    width: usize,
    height: usize,
    layer: Layer,
    cfg: &CodecConfig,
) -> Result<(Frame, u64), CodecError> {
    if width % CTU_SIZE != 0 || height % CTU_SIZE != 0 {
        return Err(CodecError::DimensionMismatch(format!(
            "frame {width}×{height} is not a multiple of {CTU_SIZE}"
        )));
    }
    let mut recon = Frame::new(width, height, 0);
    let mut r = BitReader::new(payload);
    for y in (0..height).step_by(CTU_SIZE) {
        for x in (0..width).step_by(CTU_SIZE) {
            decode_cu(&mut r, &layer, &mut recon, x, y, CTU_SIZE, cfg)?;
        }
    }
    if r.bits_read().div_ceil(8) != payload.len() {
        return Err(CodecError::Corrupt("payload longer than its coding trees".into()));
    }
    Ok((recon, r.bits_read() as u64))
}

pub fn decode_near(payload: &[u8], width: usize, height: usize, cfg: &CodecConfig) -> Result<Frame, CodecError> {
    Ok(decode_layer(payload, width, height, Layer::Near, cfg)?.0)
}

pub fn decode_far(
    payload: &[u8],
    occupancy: &OccupancyMap,
    near_recon: &Frame,
    cfg: &CodecConfig,
) -> Result<Frame, CodecError> {
    let layer = Layer::Far {
        reference: near_recon,
        occupancy,
    };
    Ok(decode_layer(payload, near_recon.width, near_recon.height, layer, cfg)?.0)
}

pub fn decode(bytes: &[u8]) -> Result<Decoded, CodecError> {
    let c = read_container(bytes)?;
    let h = c.header;
    let mut config = CodecConfig {
        qp: h.qp,
        tau: SurfaceThickness(h.tau),
        bit_depth: h.bit_depth,
        ..Default::default()
    };
    config.apply_flags(h.flags)?;
    config
        .validate()
        .map_err(|e| CodecError::Corrupt(format!("header: {e}")))?;
    let (w, hh) = (h.width as usize, h.height as usize);
    if w == 0 || hh == 0 {
        return Err(CodecError::DimensionMismatch("empty frame".into()));
    }
    let (near, near_bits) = decode_layer(&c.near_payload, w, hh, Layer::Near, &config)?;
    let far_layer = Layer::Far {
        reference: &near,
        occupancy: &c.occupancy,
    };
    let (far, far_bits) = decode_layer(&c.far_payload, w, hh, far_layer, &config)?;
    Ok(Decoded {
        header: h,
        config,
        frames: GeometryFramePair {
            near,
            far,
            occupancy: c.occupancy,
            patches: c.patches,
            bit_depth: h.bit_depth,
        },
        geometry_bits: near_bits + far_bits,
    })
}
