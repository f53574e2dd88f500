use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::{Frame, OccupancyMap};

/// Binary 16-bit PGM (big-endian samples).
pub fn write_pgm16(path: impl AsRef<Path>, frame: &Frame) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n65535\n", frame.width, frame.height)?;
    for &v in &frame.data {
        w.write_all(&v.to_be_bytes())?;
    }
    w.flush()
}

/// Binary PBM; occupied pixels are written as black (1).
pub fn write_pbm(path: impl AsRef<Path>, occ: &OccupancyMap) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P4\n{} {}\n", occ.width, occ.height)?;
    let row_bytes = occ.width.div_ceil(8);
    for y in 0..occ.height {
        let mut row = vec![0u8; row_bytes];
        for x in 0..occ.width {
            if occ.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        w.write_all(&row)?;
    }
    w.flush()
}
