use super::bits::{BitCounter, BitWriter};
use super::bitstream::{write_container, Container, Header};
use super::syntax::{predict, read_block, reconstruct, write_block, write_coeffs, write_mode, write_split, Layer};
use super::transform::transform_quant;
use super::{rd_cost, CodecConfig, CodecError, CuMode, RdCost, CTU_SIZE};
use crate::epm::{ctu_normal, NormalEstimate};
use crate::projection::{Frame, GeometryFramePair, OccupancyMap};

/// One node of a chosen coding tree, listed in pre-order.
#[derive(Debug, Clone, PartialEq)]
pub struct CuDecision {
    pub mode: CuMode,
    pub rd: RdCost,
    pub x: usize,
    pub y: usize,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModeCounts {
    pub intra: usize,
    pub skip: usize,
    pub merge: usize,
    pub split: usize,
}

#[derive(Debug, Clone)]
pub struct LayerOutput {
    pub payload: Vec<u8>,
    /// Payload length before byte padding.
    pub bits: u64,
    pub recon: Frame,
    pub decisions: Vec<CuDecision>,
    /// Lagrange multiplier used in each CTU (raster order).
    pub ctu_lambdas: Vec<f64>,
    /// Surface estimate per CTU; only filled for far layers with EPM on.
    pub ctu_estimates: Vec<NormalEstimate>,
    /// Summed cost of all CTUs.
    pub rd: RdCost,
}

impl LayerOutput {
    pub fn mode_counts(&self) -> ModeCounts {
        let mut c = ModeCounts::default();
        for d in &self.decisions {
            match d.mode {
                CuMode::IntraDc => c.intra += 1,
                CuMode::Skip => c.skip += 1,
                CuMode::Merge => c.merge += 1,
                CuMode::Split => c.split += 1,
            }
        }
        c
    }
}

enum Node {
    Split(Vec<Node>),
    Leaf { mode: CuMode, levels: Option<Vec<i32>> },
}

struct Leaf {
    mode: CuMode,
    levels: Option<Vec<i32>>,
    recon: Vec<i32>,
    rd: RdCost,
}

struct LayerCoder<'a> {
    cfg: &'a CodecConfig,
    orig: &'a Frame,
    layer: Layer<'a>,
    recon: Frame,
}

impl LayerCoder<'_> {
    fn eval_leaf(&self, x: usize, y: usize, n: usize, mode: CuMode, orig: &[i32], lambda: f64) -> Leaf {
        let pred = predict(&self.layer, &self.recon, x, y, n, mode, self.cfg);
        let mut bits = BitCounter::default();
        write_split(&mut bits, n, self.cfg.min_cu, false);
        write_mode(&mut bits, &self.layer, mode);
        let levels = mode.has_residual().then(|| {
            let residual: Vec<i32> = orig.iter().zip(&pred).map(|(o, p)| o - p).collect();
            let levels = transform_quant(&residual, n, self.cfg.qp, mode == CuMode::IntraDc);
            write_coeffs(&mut bits, &levels, n);
            levels
        });
        let recon = reconstruct(&pred, levels.as_deref(), n, self.cfg);
        let d = sse(orig, &recon);
        Leaf {
            mode,
            levels,
            recon,
            rd: rd_cost(d, bits.bits, lambda),
        }
    }

    fn code_cu(&mut self, x: usize, y: usize, n: usize, lambda: f64, out: &mut Vec<CuDecision>) -> (Node, RdCost) {
        let orig = read_block(self.orig, x, y, n);
        let mut best: Option<Leaf> = None;
        for &mode in self.layer.candidates() {
            let leaf = self.eval_leaf(x, y, n, mode, &orig, lambda);
            if best.as_ref().is_none_or(|b| leaf.rd.j < b.rd.j) {
                best = Some(leaf);
            }
        }
        let best = best.expect("at least one candidate");

        if n > self.cfg.min_cu {
            let mark = out.len();
            let h = n / 2;
            let mut children = Vec::with_capacity(4);
            let (mut d, mut r) = (0u64, 1u64);
            for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
                let (node, rd) = self.code_cu(x + dx, y + dy, h, lambda, out);
                d += rd.d;
                r += rd.r;
                children.push(node);
            }
            let split = rd_cost(d, r, lambda);
            if split.j < best.rd.j {
                out.insert(
                    mark,
                    CuDecision {
                        mode: CuMode::Split,
                        rd: split,
                        x,
                        y,
                        size: n,
                    },
                );
                return (Node::Split(children), split);
            }
            out.truncate(mark);
        }

        write_block(&mut self.recon, x, y, n, &best.recon);
        out.push(CuDecision {
            mode: best.mode,
            rd: best.rd,
            x,
            y,
            size: n,
        });
        (
            Node::Leaf {
                mode: best.mode,
                levels: best.levels,
            },
            best.rd,
        )
    }

    fn write_node(&self, w: &mut BitWriter, node: &Node, n: usize) {
        match node {
            Node::Split(children) => {
                write_split(w, n, self.cfg.min_cu, true);
                for c in children {
                    self.write_node(w, c, n / 2);
                }
            }
            Node::Leaf { mode, levels } => {
                write_split(w, n, self.cfg.min_cu, false);
                write_mode(w, &self.layer, *mode);
                if let Some(levels) = levels {
                    write_coeffs(w, levels, n);
                }
            }
        }
    }
}

fn sse(a: &[i32], b: &[i32]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| ((x - y) as i64).pow(2) as u64).sum()
}

fn run_layer(frame: &Frame, layer: Layer, cfg: &CodecConfig, lambda_of: impl Fn(usize, usize) -> f64) -> LayerOutput {
    assert!(
        frame.width % CTU_SIZE == 0 && frame.height % CTU_SIZE == 0,
        "frame dimensions must be multiples of {CTU_SIZE}"
    );
    let mut coder = LayerCoder {
        cfg,
        orig: frame,
        layer,
        recon: Frame::new(frame.width, frame.height, 0),
    };
    let mut w = BitWriter::new();
    let mut decisions = Vec::new();
    let mut ctu_lambdas = Vec::new();
    let (mut d, mut r, mut j) = (0u64, 0u64, 0f64);
    for y in (0..frame.height).step_by(CTU_SIZE) {
        for x in (0..frame.width).step_by(CTU_SIZE) {
            let lambda = lambda_of(x, y);
            let (node, rd) = coder.code_cu(x, y, CTU_SIZE, lambda, &mut decisions);
            coder.write_node(&mut w, &node, CTU_SIZE);
            ctu_lambdas.push(lambda);
            d += rd.d;
            r += rd.r;
            j += rd.j;
        }
    }
    let bits = w.bits_written();
    debug_assert_eq!(bits, r);
    LayerOutput {
        payload: w.finish(),
        bits,
        recon: coder.recon,
        decisions,
        ctu_lambdas,
        ctu_estimates: Vec::new(),
        rd: RdCost { j, d, r },
    }
}

/// Intra coding of a near-layer frame.
pub fn encode_near(frame: &Frame, cfg: &CodecConfig) -> LayerOutput {
    let lambda = cfg.lambda();
    run_layer(frame, Layer::Near, cfg, |_, _| lambda)
}

/// Far-layer coding against the reconstructed near layer.
///
/// With `epm_rdo` the Lagrange multiplier of each CTU is scaled by the
/// lambda scale estimated from the original far-layer CTU.
pub fn encode_far(frame: &Frame, occupancy: &OccupancyMap, near_recon: &Frame, cfg: &CodecConfig) -> LayerOutput {
    let lambda = cfg.lambda();
    let mut estimates = Vec::new();
    if cfg.epm_rdo {
        for y in (0..frame.height).step_by(CTU_SIZE) {
            for x in (0..frame.width).step_by(CTU_SIZE) {
                estimates.push(ctu_normal(&frame.data, &occupancy.data, frame.width, x, y, &cfg.epm));
            }
        }
    }
    let ctus_per_row = frame.width / CTU_SIZE;
    let layer = Layer::Far {
        reference: near_recon,
        occupancy,
    };
    let mut out = run_layer(frame, layer, cfg, |x, y| {
        if cfg.epm_rdo {
            lambda * estimates[(y / CTU_SIZE) * ctus_per_row + x / CTU_SIZE].lambda_scale
        } else {
            lambda
        }
    });
    out.ctu_estimates = estimates;
    out
}

/// Far-layer coding with an explicit Lagrange multiplier per CTU (raster
/// order). EPM settings in `cfg` are ignored.
pub fn encode_far_with_lambdas(
    frame: &Frame,
    occupancy: &OccupancyMap,
    near_recon: &Frame,
    cfg: &CodecConfig,
    lambdas: &[f64],
) -> LayerOutput {
    let ctus_per_row = frame.width / CTU_SIZE;
    assert_eq!(lambdas.len(), ctus_per_row * (frame.height / CTU_SIZE));
    let layer = Layer::Far {
        reference: near_recon,
        occupancy,
    };
    run_layer(frame, layer, cfg, |x, y| lambdas[(y / CTU_SIZE) * ctus_per_row + x / CTU_SIZE])
}

#[derive(Debug, Clone)]
pub struct EncodedFrames {
    pub bitstream: Vec<u8>,
    pub near: LayerOutput,
    pub far: LayerOutput,
    /// Encoder-side reconstruction, identical to what the decoder produces.
    pub recon: GeometryFramePair,
}

impl EncodedFrames {
    /// Bits spent on the two depth payloads, excluding byte padding.
    pub fn geometry_bits(&self) -> u64 {
        self.near.bits + self.far.bits
    }

    pub fn total_bits(&self) -> u64 {
        8 * self.bitstream.len() as u64
    }
}

pub fn encode_frames(frames: &GeometryFramePair, cfg: &CodecConfig) -> Result<EncodedFrames, CodecError> {
    cfg.validate()?;
    if cfg.bit_depth != frames.bit_depth {
        return Err(CodecError::InvalidConfig(format!(
            "config bit depth {} but frames carry {}",
            cfg.bit_depth, frames.bit_depth
        )));
    }
    let (w, h) = (frames.width(), frames.height());
    if w == 0 || h == 0 || w % CTU_SIZE != 0 || h % CTU_SIZE != 0 || w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(CodecError::DimensionMismatch(format!(
            "frame {w}×{h} is not a non-empty multiple of {CTU_SIZE}"
        )));
    }
    if frames.far.width != w
        || frames.far.height != h
        || frames.occupancy.width != w
        || frames.occupancy.height != h
    {
        return Err(CodecError::DimensionMismatch("near, far and occupancy sizes differ".into()));
    }
    let max = (1u32 << cfg.bit_depth) - 1;
    if frames.near.data.iter().chain(&frames.far.data).any(|&v| v as u32 > max) {
        return Err(CodecError::InvalidConfig(format!("sample exceeds {max}")));
    }

    let near = encode_near(&frames.near, cfg);
    let far = encode_far(&frames.far, &frames.occupancy, &near.recon, cfg);
    let header = Header {
        width: w as u16,
        height: h as u16,
        bit_depth: cfg.bit_depth,
        qp: cfg.qp,
        tau: cfg.tau.0,
        flags: cfg.flags(),
    };
    let bitstream = write_container(&Container {
        header,
        patches: frames.patches.clone(),
        occupancy: frames.occupancy.clone(),
        near_payload: near.payload.clone(),
        far_payload: far.payload.clone(),
    })?;
    let recon = GeometryFramePair {
        near: near.recon.clone(),
        far: far.recon.clone(),
        occupancy: frames.occupancy.clone(),
        patches: frames.patches.clone(),
        bit_depth: frames.bit_depth,
    };
    Ok(EncodedFrames {
        bitstream,
        near,
        far,
        recon,
    })
}
