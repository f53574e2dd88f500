use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{PointCloud, RawCloud, UnitVec3};

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PLY format `{0}` (only ascii 1.0 is read)")]
    UnsupportedFormat(String),
    #[error("PLY vertex element lacks the `{0}` property")]
    MissingCoordinate(&'static str),
    #[error("PLY body line {line}: {msg}")]
    BadData { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
}

pub fn load_ply(path: impl AsRef<Path>) -> Result<RawCloud, PlyError> {
    let file = File::open(path)?;
    parse_ply(BufReader::new(file))
}

/// Reads an ASCII PLY stream. Coordinates are returned verbatim; normals
/// (`nx`, `ny`, `nz`) are renormalized to unit length.
pub fn parse_ply<R: BufRead>(reader: R) -> Result<RawCloud, PlyError> {
    let mut lines = reader.lines().enumerate();
    let mut next_line = || -> Result<Option<(usize, String)>, PlyError> {
        match lines.next() {
            Some((i, l)) => Ok(Some((i + 1, l?))),
            None => Ok(None),
        }
    };

    match next_line()? {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(PlyError::MalformedHeader("missing `ply` magic".into())),
    }

    let mut format_seen = false;
    let mut bit_depth = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let Some((_, line)) = next_line()? else {
            return Err(PlyError::MalformedHeader("missing end_header".into()));
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            ["end_header"] => break,
            ["format", fmt, ver] => {
                if *fmt != "ascii" {
                    return Err(PlyError::UnsupportedFormat(fmt.to_string()));
                }
                if *ver != "1.0" {
                    return Err(PlyError::UnsupportedFormat(format!("{fmt} {ver}")));
                }
                format_seen = true;
            }
            ["comment", "bit_depth", b] => {
                bit_depth = b.parse::<u8>().ok();
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| PlyError::MalformedHeader(format!("bad element count `{count}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| PlyError::MalformedHeader("property before element".into()))?;
                if el.name == "vertex" {
                    return Err(PlyError::MalformedHeader(
                        "list properties on vertices are not supported".into(),
                    ));
                }
                el.properties.push("<list>".into());
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| PlyError::MalformedHeader("property before element".into()))?;
                el.properties.push(name.to_string());
            }
            _ => return Err(PlyError::MalformedHeader(format!("unexpected line `{line}`"))),
        }
    }
    if !format_seen {
        return Err(PlyError::MalformedHeader("missing format line".into()));
    }

    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| PlyError::MalformedHeader("no vertex element".into()))?;
    let vertex = &elements[vertex_pos];
    let col = |name: &'static str| vertex.properties.iter().position(|p| p == name);
    let xyz = [
        col("x").ok_or(PlyError::MissingCoordinate("x"))?,
        col("y").ok_or(PlyError::MissingCoordinate("y"))?,
        col("z").ok_or(PlyError::MissingCoordinate("z"))?,
    ];
    let nxyz = match (col("nx"), col("ny"), col("nz")) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };

    // skip the bodies of elements declared before the vertex element
    let skip: usize = elements[..vertex_pos].iter().map(|e| e.count).sum();
    for _ in 0..skip {
        if next_line()?.is_none() {
            return Err(PlyError::BadData {
                line: 0,
                msg: "unexpected end of file".into(),
            });
        }
    }

    let mut positions = Vec::with_capacity(vertex.count);
    let mut normals = nxyz.map(|_| Vec::with_capacity(vertex.count));
    for _ in 0..vertex.count {
        let Some((lineno, line)) = next_line()? else {
            return Err(PlyError::BadData {
                line: 0,
                msg: format!("expected {} vertices, file ended early", vertex.count),
            });
        };
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| PlyError::BadData {
                    line: lineno,
                    msg: format!("not a number: `{t}`"),
                })
            })
            .collect::<Result<_, _>>()?;
        if values.len() < vertex.properties.len() {
            return Err(PlyError::BadData {
                line: lineno,
                msg: format!(
                    "expected {} values, found {}",
                    vertex.properties.len(),
                    values.len()
                ),
            });
        }
        positions.push([values[xyz[0]], values[xyz[1]], values[xyz[2]]]);
        if let (Some(dst), Some(idx)) = (normals.as_mut(), nxyz) {
            let n = UnitVec3::new([values[idx[0]], values[idx[1]], values[idx[2]]]).ok_or_else(
                || PlyError::BadData {
                    line: lineno,
                    msg: "zero-length normal".into(),
                },
            )?;
            dst.push(n);
        }
    }

    Ok(RawCloud {
        positions,
        normals,
        bit_depth,
    })
}

pub fn save_ply(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<(), PlyError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_ply(&mut w, cloud)?;
    w.flush()?;
    Ok(())
}

/// Writes an ASCII PLY with integer coordinates and, when present, normals.
pub fn write_ply<W: Write>(w: &mut W, cloud: &PointCloud) -> io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment bit_depth {}", cloud.bit_depth())?;
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property int x")?;
    writeln!(w, "property int y")?;
    writeln!(w, "property int z")?;
    if cloud.normals().is_some() {
        writeln!(w, "property double nx")?;
        writeln!(w, "property double ny")?;
        writeln!(w, "property double nz")?;
    }
    writeln!(w, "end_header")?;
    match cloud.normals() {
        Some(normals) => {
            for (p, n) in cloud.points().iter().zip(normals) {
                writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, n.nx, n.ny, n.nz)?;
            }
        }
        None => {
            for p in cloud.points() {
                writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
            }
        }
    }
    Ok(())
}
