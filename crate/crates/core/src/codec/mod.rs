//! Quadtree block codec for near/far depth frames.
//!
//! Near frames are intra coded. Far frames are coded against the
//! reconstructed near frame with SKIP, MERGE and INTRA_DC candidates. All
//! decisions minimise `J = D + λ·R` where `D` is the depth SSE of the coding
//! unit and `R` the exact number of bits it costs in the stream.

mod bits;
mod bitstream;
mod decoder;
mod encoder;
mod predict;
mod syntax;
mod transform;

use thiserror::Error;

use crate::epm::EpmParams;
use crate::projection::SurfaceThickness;

pub use bits::{entropy_decode, entropy_encode, BitCounter, BitReader, BitSink, BitWriter};
pub use bitstream::{read_container, write_container, Container, Header, MAGIC, VERSION};
pub use decoder::{decode, decode_far, decode_near, Decoded};
pub use encoder::{
    encode_far, encode_far_with_lambdas, encode_frames, encode_near, CuDecision, EncodedFrames, LayerOutput, ModeCounts,
};
pub use predict::{intra_dc, merge_prediction};
pub use syntax::CuMode;
pub use transform::{dequant_itransform, quant_step, transform_quant, zigzag};

/// Coding tree unit edge length.
pub const CTU_SIZE: usize = 64;
/// `qp` value that selects transform bypass (lossless residual coding).
pub const LOSSLESS_QP: u8 = 0;
pub const MAX_QP: u8 = 51;
/// Multiplier used at [`LOSSLESS_QP`]: small enough that one unit of SSE
/// outweighs the rate of any CTU, so rate only breaks ties between exact
/// candidates.
pub const LOSSLESS_LAMBDA: f64 = 1.0 / (1u64 << 24) as f64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bitstream does not start with the PCGS magic")]
    BadMagic,
    #[error("unsupported bitstream version {0}")]
    UnsupportedVersion(u8),
    #[error("bitstream truncated")]
    Truncated,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid codec configuration: {0}")]
    InvalidConfig(String),
    #[error("corrupt bitstream: {0}")]
    Corrupt(String),
}

/// Merge-prediction refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MergeFlavor {
    /// Plain co-located copy.
    #[default]
    Baseline,
    /// `+1` on occupied pixels only.
    Om,
    /// `+1` on every pixel.
    NonOm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    pub qp: u8,
    pub tau: SurfaceThickness,
    pub lambda_c: f64,
    /// Smallest coding unit, one of 8, 16, 32, 64.
    pub min_cu: usize,
    pub epm_rdo: bool,
    pub merge: MergeFlavor,
    pub epm: EpmParams,
    pub bit_depth: u8,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            qp: 32,
            tau: SurfaceThickness(4),
            lambda_c: 0.57,
            min_cu: 8,
            epm_rdo: false,
            merge: MergeFlavor::Baseline,
            epm: EpmParams::default(),
            bit_depth: 10,
        }
    }
}

const FLAG_EPM: u8 = 1;
const FLAG_OM: u8 = 1 << 1;
const FLAG_NON_OM: u8 = 1 << 2;
const MIN_CU_SHIFT: u8 = 3;

impl CodecConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.qp > MAX_QP {
            return Err(CodecError::InvalidConfig(format!("qp {} outside [0, {MAX_QP}]", self.qp)));
        }
        if !matches!(self.min_cu, 8 | 16 | 32 | 64) {
            return Err(CodecError::InvalidConfig(format!("min_cu {} not in {{8,16,32,64}}", self.min_cu)));
        }
        if !(1..=16).contains(&self.bit_depth) {
            return Err(CodecError::InvalidConfig(format!("bit depth {}", self.bit_depth)));
        }
        if !(self.lambda_c > 0.0 && self.lambda_c.is_finite()) {
            return Err(CodecError::InvalidConfig("lambda_c must be positive".into()));
        }
        if !(self.epm.max_scale >= 1.0) {
            return Err(CodecError::InvalidConfig("epm max_scale must be at least 1".into()));
        }
        Ok(())
    }

    /// Base Lagrange multiplier `λ = lambda_c · 2^((qp − 12) / 3)`, or
    /// [`LOSSLESS_LAMBDA`] at the lossless setting.
    pub fn lambda(&self) -> f64 {
        if self.qp == LOSSLESS_QP {
            LOSSLESS_LAMBDA
        } else {
            lambda(self.qp, self.lambda_c)
        }
    }

    pub fn om_merge(&self) -> bool {
        self.merge == MergeFlavor::Om
    }

    pub fn non_om_merge(&self) -> bool {
        self.merge == MergeFlavor::NonOm
    }

    /// Header flag byte: bit 0 EPM, bit 1 OM merge, bit 2 non-OM merge,
    /// bits 3–4 `log2(min_cu) − 3`.
    pub fn flags(&self) -> u8 {
        let mut f = 0;
        if self.epm_rdo {
            f |= FLAG_EPM;
        }
        match self.merge {
            MergeFlavor::Baseline => {}
            MergeFlavor::Om => f |= FLAG_OM,
            MergeFlavor::NonOm => f |= FLAG_NON_OM,
        }
        f | ((self.min_cu.trailing_zeros() as u8 - 3) << MIN_CU_SHIFT)
    }

    /// Decoder-relevant fields from a flag byte; other fields keep defaults.
    pub fn apply_flags(&mut self, flags: u8) -> Result<(), CodecError> {
        if flags >> 5 != 0 {
            return Err(CodecError::Corrupt(format!("reserved flag bits set in {flags:#04x}")));
        }
        self.epm_rdo = flags & FLAG_EPM != 0;
        self.merge = match (flags & FLAG_OM != 0, flags & FLAG_NON_OM != 0) {
            (false, false) => MergeFlavor::Baseline,
            (true, false) => MergeFlavor::Om,
            (false, true) => MergeFlavor::NonOm,
            (true, true) => return Err(CodecError::Corrupt("om and non-om merge both set".into())),
        };
        self.min_cu = 8 << ((flags >> MIN_CU_SHIFT) & 3);
        Ok(())
    }
}

pub fn lambda(qp: u8, lambda_c: f64) -> f64 {
    lambda_c * ((qp as f64 - 12.0) / 3.0).exp2()
}

/// Lagrangian cost of one decision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdCost {
    pub j: f64,
    pub d: u64,
    pub r: u64,
}

pub fn rd_cost(d_sse: u64, bits: u64, lambda_eff: f64) -> RdCost {
    RdCost {
        j: d_sse as f64 + lambda_eff * bits as f64,
        d: d_sse,
        r: bits,
    }
}
