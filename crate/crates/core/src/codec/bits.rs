//! MSB-first bit I/O and order-0 exponential-Golomb codes.

use super::CodecError;

/// Anything that can absorb bits: a real writer or a counter used by RDO.
pub trait BitSink {
    /// Appends the low `n` bits of `value`, most significant first.
    fn put(&mut self, value: u64, n: u32);

    fn put_bit(&mut self, bit: bool) {
        self.put(bit as u64, 1);
    }

    /// Unsigned exp-Golomb: `0 → 1`, `1 → 010`, `2 → 011`, `3 → 00100`, …
    fn put_ue(&mut self, v: u64) {
        let x = v + 1;
        let len = 64 - x.leading_zeros();
        self.put(0, len - 1);
        self.put(x, len);
    }

    /// Signed exp-Golomb: `0, 1, −1, 2, −2, …` map to `0, 1, 2, 3, 4, …`.
    fn put_se(&mut self, v: i64) {
        let m = if v > 0 { 2 * v as u64 - 1 } else { 2 * v.unsigned_abs() };
        self.put_ue(m);
    }
}

#[inline]
pub fn ue_len(v: u64) -> u32 {
    let x = v + 1;
    2 * (63 - x.leading_zeros()) + 1
}

#[inline]
pub fn se_len(v: i64) -> u32 {
    ue_len(if v > 0 { 2 * v as u64 - 1 } else { 2 * v.unsigned_abs() })
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct BitCounter {
    pub bits: u64,
}

impl BitSink for BitCounter {
    #[inline]
    fn put(&mut self, _value: u64, n: u32) {
        self.bits += n as u64;
    }

    #[inline]
    fn put_ue(&mut self, v: u64) {
        self.bits += ue_len(v) as u64;
    }

    #[inline]
    fn put_se(&mut self, v: i64) {
        self.bits += se_len(v) as u64;
    }
}

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nacc: u32,
    total: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bits_written(&self) -> u64 {
        self.total
    }

    /// Pads with zero bits to a byte boundary and returns the bytes.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nacc > 0 {
            let pad = 8 - self.nacc;
            self.put(0, pad);
        }
        self.bytes
    }
}

impl BitSink for BitWriter {
    fn put(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        let mut n = n;
        while n > 0 {
            let take = n.min(8 - self.nacc % 8).min(32);
            let shift = n - take;
            let chunk = (value >> shift) & ((1u64 << take) - 1);
            self.acc = (self.acc << take) | chunk;
            self.nacc += take;
            self.total += take as u64;
            n -= take;
            if self.nacc == 8 {
                self.bytes.push(self.acc as u8);
                self.acc = 0;
                self.nacc = 0;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn bits_read(&self) -> usize {
        self.pos
    }

    pub fn bit(&mut self) -> Result<bool, CodecError> {
        let byte = *self.bytes.get(self.pos / 8).ok_or(CodecError::Truncated)?;
        let b = (byte >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        Ok(b == 1)
    }

    pub fn bits(&mut self, n: u32) -> Result<u64, CodecError> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.bit()? as u64;
        }
        Ok(v)
    }

    pub fn ue(&mut self) -> Result<u64, CodecError> {
        let mut zeros = 0u32;
        while !self.bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(CodecError::Corrupt("exp-Golomb prefix too long".into()));
            }
        }
        let rest = self.bits(zeros)?;
        Ok(((1u64 << zeros) | rest) - 1)
    }

    pub fn se(&mut self) -> Result<i64, CodecError> {
        let m = self.ue()?;
        Ok(if m % 2 == 1 {
            m.div_ceil(2) as i64
        } else {
            -((m / 2) as i64)
        })
    }
}

/// Signed exp-Golomb coding of a symbol sequence.
pub fn entropy_encode(symbols: &[i64]) -> Vec<u8> {
    let mut w = BitWriter::new();
    for &s in symbols {
        w.put_se(s);
    }
    w.finish()
}

/// Inverse of [`entropy_encode`]; `count` symbols are read.
pub fn entropy_decode(bytes: &[u8], count: usize) -> Result<Vec<i64>, CodecError> {
    let mut r = BitReader::new(bytes);
    (0..count).map(|_| r.se()).collect()
}
