//! Container layout.
//!
//! ```text
//! "PCGS" u8 version
//! u16 W, u16 H, u8 b, u8 qp, u16 τ, u8 flags
//! u32 patch count, per patch: u8 axis, u16 origin x/y/z, u16 u0, v0, w, h
//! u32 length, occupancy run lengths
//! u32 length, near payload
//! u32 length, far payload
//! ```
//!
//! Multi-byte integers are little-endian. Occupancy is coded row by row as
//! alternating `ue` run lengths, starting with an unoccupied run.

use super::bits::{BitReader, BitSink, BitWriter};
use super::CodecError;
use crate::pointcloud::Point3;
use crate::projection::{Axis, OccupancyMap, PatchPlacement};

pub const MAGIC: &[u8; 4] = b"PCGS";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub width: u16,
    pub height: u16,
    pub bit_depth: u8,
    pub qp: u8,
    pub tau: u16,
    pub flags: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: Header,
    pub patches: Vec<PatchPlacement>,
    pub occupancy: OccupancyMap,
    pub near_payload: Vec<u8>,
    pub far_payload: Vec<u8>,
}

fn u16_field(v: usize, what: &str) -> Result<u16, CodecError> {
    u16::try_from(v).map_err(|_| CodecError::InvalidConfig(format!("{what} {v} does not fit in 16 bits")))
}

fn encode_occupancy(occ: &OccupancyMap) -> Vec<u8> {
    let mut w = BitWriter::new();
    for row in occ.data.chunks_exact(occ.width.max(1)) {
        let mut state = false;
        let mut run = 0u64;
        for &o in row {
            if o == state {
                run += 1;
            } else {
                w.put_ue(run);
                state = o;
                run = 1;
            }
        }
        w.put_ue(run);
    }
    w.finish()
}

fn decode_occupancy(bytes: &[u8], width: usize, height: usize) -> Result<OccupancyMap, CodecError> {
    let mut occ = OccupancyMap::new(width, height);
    let mut r = BitReader::new(bytes);
    for y in 0..height {
        let mut x = 0usize;
        let mut state = false;
        while x < width {
            let run = r.ue()? as usize;
            if run > width - x {
                return Err(CodecError::DimensionMismatch(format!("occupancy row {y} longer than {width}")));
            }
            if state {
                occ.data[y * width + x..y * width + x + run].fill(true);
            }
            x += run;
            state = !state;
        }
    }
    Ok(occ)
}

pub fn write_container(c: &Container) -> Result<Vec<u8>, CodecError> {
    let h = &c.header;
    if c.occupancy.width != h.width as usize || c.occupancy.height != h.height as usize {
        return Err(CodecError::DimensionMismatch("occupancy size differs from header".into()));
    }
    let mut out = Vec::with_capacity(64 + c.near_payload.len() + c.far_payload.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&h.width.to_le_bytes());
    out.extend_from_slice(&h.height.to_le_bytes());
    out.push(h.bit_depth);
    out.push(h.qp);
    out.extend_from_slice(&h.tau.to_le_bytes());
    out.push(h.flags);

    out.extend_from_slice(&(c.patches.len() as u32).to_le_bytes());
    for p in &c.patches {
        out.push(p.axis.code());
        for v in [
            p.origin3d.x as usize,
            p.origin3d.y as usize,
            p.origin3d.z as usize,
            p.u0,
            p.v0,
            p.width,
            p.height,
        ] {
            out.extend_from_slice(&u16_field(v, "patch field")?.to_le_bytes());
        }
    }

    for section in [&encode_occupancy(&c.occupancy), &c.near_payload, &c.far_payload] {
        out.extend_from_slice(&(section.len() as u32).to_le_bytes());
        out.extend_from_slice(section);
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(CodecError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn section(&mut self) -> Result<&'a [u8], CodecError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}

pub fn read_container(bytes: &[u8]) -> Result<Container, CodecError> {
    let mut c = Cursor { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) {
            CodecError::Truncated
        } else {
            CodecError::BadMagic
        });
    }
    if c.take(4)? != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let version = c.u8()?;
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let header = Header {
        width: c.u16()?,
        height: c.u16()?,
        bit_depth: c.u8()?,
        qp: c.u8()?,
        tau: c.u16()?,
        flags: c.u8()?,
    };
    let (w, h) = (header.width as usize, header.height as usize);

    let count = c.u32()? as usize;
    // each entry is 15 bytes; reject counts the stream cannot hold
    if count > (bytes.len() - c.pos) / 15 {
        return Err(CodecError::Truncated);
    }
    let mut patches = Vec::with_capacity(count);
    for i in 0..count {
        let code = c.u8()?;
        let axis = Axis::from_code(code).ok_or_else(|| CodecError::Corrupt(format!("patch {i}: axis code {code}")))?;
        let origin3d = Point3::new(c.u16()? as u32, c.u16()? as u32, c.u16()? as u32);
        let p = PatchPlacement {
            axis,
            origin3d,
            u0: c.u16()? as usize,
            v0: c.u16()? as usize,
            width: c.u16()? as usize,
            height: c.u16()? as usize,
        };
        if p.u0 + p.width > w || p.v0 + p.height > h {
            return Err(CodecError::DimensionMismatch(format!("patch {i} extends past the {w}×{h} frame")));
        }
        patches.push(p);
    }

    let occupancy = decode_occupancy(c.section()?, w, h)?;
    let near_payload = c.section()?.to_vec();
    let far_payload = c.section()?.to_vec();
    if c.pos != bytes.len() {
        return Err(CodecError::Corrupt(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(Container {
        header,
        patches,
        occupancy,
        near_payload,
        far_payload,
    })
}
