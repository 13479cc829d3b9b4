//! ASCII Wavefront OBJ reading and writing (v and f records only).

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{MeshError, TriangleMesh};

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let text = fs::read_to_string(path)?;
    parse_obj(&text)
}

/// Parses OBJ text. Polygons are fan-triangulated; normals, texture
/// coordinates and all other record types are ignored.
pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut positions: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| MeshError::Parse {
                        line,
                        message: "vertex record needs three coordinates".into(),
                    })?;
                    *c = tok
                        .parse()
                        .map_err(|_| MeshError::Parse { line, message: format!("invalid coordinate {tok:?}") })?;
                }
                positions.push(Vector3::from(xyz));
            }
            Some("f") => {
                let mut poly = Vec::with_capacity(4);
                for tok in tokens {
                    let idx_tok = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_tok
                        .parse()
                        .map_err(|_| MeshError::Parse { line, message: format!("invalid face index {tok:?}") })?;
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => positions.len() as i64 + i,
                        _ => return Err(MeshError::Parse { line, message: "face index 0 is invalid".into() }),
                    };
                    if resolved < 0 || resolved as usize >= positions.len() {
                        return Err(MeshError::IndexOutOfRange {
                            face: faces.len(),
                            index: idx,
                            count: positions.len(),
                        });
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(MeshError::Parse { line, message: "face needs at least three vertices".into() });
                }
                for i in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[i], poly[i + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(positions, faces)
}

/// Writes positions and 1-based triangle records. `header` lines become `#` comments.
pub fn write_obj<W: Write>(
    mut out: W,
    positions: &[Vector3<f64>],
    faces: &[[usize; 3]],
    header: &[String],
) -> io::Result<()> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    for p in positions {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for f in faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    out.flush()
}

pub fn write_obj_file(
    path: impl AsRef<Path>,
    positions: &[Vector3<f64>],
    faces: &[[usize; 3]],
    header: &[String],
) -> io::Result<()> {
    let file = io::BufWriter::new(fs::File::create(path)?);
    write_obj(file, positions, faces, header)
}
