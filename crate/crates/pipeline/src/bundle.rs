//! Session bundle and its file format.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` zero, `u64` header
//! length, UTF-8 JSON header, zero padding to a multiple of 8, then the data
//! blocks as little-endian `f64`. Each block descriptor in the header gives
//! its name, byte offset from the start of the data section, and shape.
//! Every 2×2 tensor is stored row-major.

use std::path::Path;

use diffstruct::eigen::{ModeSet, Normalization};
use serde::{Deserialize, Serialize};

use crate::config::SessionConfig;
use crate::error::{PipelineError, Stage};
use crate::timing::TimingRecord;

pub const MAGIC: [u8; 8] = *b"DSTRUCT\0";
pub const FORMAT_VERSION: u32 = 1;

/// Per-face stress at the bundle's current `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressSummary {
    /// `[λ1, λ2]` with `|λ1| ≤ |λ2|`.
    pub eigenvalues: Vec<[f64; 2]>,
    /// `[v1x, v1y, v2x, v2y]` in face-frame coordinates; `v2` is the major direction.
    pub eigenvectors: Vec<[f64; 4]>,
    pub isotropic: Vec<bool>,
    pub von_mises: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionBundle {
    /// Incremented by every recompute.
    pub session_version: u64,
    pub config: SessionConfig,
    pub gamma: f64,
    pub positions: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    /// Displacement at unit force scale.
    pub base_displacement: Vec<[f64; 3]>,
    /// Tangent stress at unit force scale.
    pub base_stress: Vec<[f64; 4]>,
    pub stress: StressSummary,
    pub tensors_major: Vec<[f64; 4]>,
    pub tensors_minor: Vec<[f64; 4]>,
    pub mass: Vec<f64>,
    pub modes_u: ModeSet,
    pub modes_w: ModeSet,
    pub timings: TimingRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub offset: u64,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeHeader {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub normalization: Normalization,
    pub constant_mode_excluded: bool,
}

impl ModeHeader {
    fn of(m: &ModeSet) -> Self {
        Self {
            eigenvalues: m.eigenvalues.clone(),
            residuals: m.residuals.clone(),
            normalization: m.normalization,
            constant_mode_excluded: m.constant_mode_excluded,
        }
    }
}

/// JSON part of the file; also served alone as the session summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleHeader {
    pub format_version: u32,
    pub session_version: u64,
    pub vertex_count: usize,
    pub face_count: usize,
    pub k: usize,
    pub gamma: f64,
    pub anisotropic_faces: usize,
    pub config: SessionConfig,
    pub timings: TimingRecord,
    pub modes_u: ModeHeader,
    pub modes_w: ModeHeader,
    pub blocks: Vec<BlockInfo>,
}

fn err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::new(Stage::Bundle, e)
}

struct Block {
    name: &'static str,
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn flat<const N: usize>(v: &[[f64; N]]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

fn chunks<const N: usize>(v: &[f64]) -> Vec<[f64; N]> {
    v.chunks_exact(N).map(|c| c.try_into().unwrap()).collect()
}

impl SessionBundle {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn k(&self) -> usize {
        self.modes_u.len()
    }

    /// Checks array lengths against `|V|`, `|F|` and `k`.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let (nv, nf, k) = (self.vertex_count(), self.face_count(), self.k());
        let checks = [
            ("base_displacement", self.base_displacement.len(), nv),
            ("mass", self.mass.len(), nv),
            ("base_stress", self.base_stress.len(), nf),
            ("stress_eigenvalues", self.stress.eigenvalues.len(), nf),
            ("stress_eigenvectors", self.stress.eigenvectors.len(), nf),
            ("isotropic", self.stress.isotropic.len(), nf),
            ("von_mises", self.stress.von_mises.len(), nf),
            ("tensors_major", self.tensors_major.len(), nf),
            ("tensors_minor", self.tensors_minor.len(), nf),
            ("modes_w", self.modes_w.len(), k),
            ("eigenvalues_u", self.modes_u.eigenvalues.len(), k),
            ("eigenvalues_w", self.modes_w.eigenvalues.len(), k),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(err(format!("{name} has length {got}, expected {want}")));
            }
        }
        for (set, name) in [(&self.modes_u, "modes_u"), (&self.modes_w, "modes_w")] {
            if set.vectors.iter().any(|v| v.len() != nv) {
                return Err(err(format!("{name} vector length differs from vertex count {nv}")));
            }
        }
        if let Some(f) = self.faces.iter().flatten().find(|&&i| i >= nv) {
            return Err(err(format!("face index {f} out of range")));
        }
        Ok(())
    }

    fn blocks(&self) -> Vec<Block> {
        let (nv, nf, k) = (self.vertex_count(), self.face_count(), self.k());
        let modes = |m: &ModeSet| m.vectors.iter().flatten().copied().collect();
        vec![
            Block { name: "positions", shape: vec![nv, 3], data: flat(&self.positions) },
            Block { name: "faces", shape: vec![nf, 3], data: self.faces.iter().flatten().map(|&i| i as f64).collect() },
            Block { name: "base_displacement", shape: vec![nv, 3], data: flat(&self.base_displacement) },
            Block { name: "base_stress", shape: vec![nf, 2, 2], data: flat(&self.base_stress) },
            Block { name: "stress_eigenvalues", shape: vec![nf, 2], data: flat(&self.stress.eigenvalues) },
            Block { name: "stress_eigenvectors", shape: vec![nf, 2, 2], data: flat(&self.stress.eigenvectors) },
            Block {
                name: "isotropic",
                shape: vec![nf],
                data: self.stress.isotropic.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            },
            Block { name: "von_mises", shape: vec![nf], data: self.stress.von_mises.clone() },
            Block { name: "tensors_major", shape: vec![nf, 2, 2], data: flat(&self.tensors_major) },
            Block { name: "tensors_minor", shape: vec![nf, 2, 2], data: flat(&self.tensors_minor) },
            Block { name: "mass", shape: vec![nv], data: self.mass.clone() },
            Block { name: "modes_u", shape: vec![k, nv], data: modes(&self.modes_u) },
            Block { name: "modes_w", shape: vec![k, nv], data: modes(&self.modes_w) },
        ]
    }

    pub fn header(&self) -> BundleHeader {
        let mut offset = 0u64;
        let blocks = self
            .blocks()
            .into_iter()
            .map(|b| {
                let info = BlockInfo { name: b.name.to_string(), offset, shape: b.shape };
                offset += 8 * b.data.len() as u64;
                info
            })
            .collect();
        BundleHeader {
            format_version: FORMAT_VERSION,
            session_version: self.session_version,
            vertex_count: self.vertex_count(),
            face_count: self.face_count(),
            k: self.k(),
            gamma: self.gamma,
            anisotropic_faces: self.stress.isotropic.iter().filter(|&&i| !i).count(),
            config: self.config.clone(),
            timings: self.timings,
            modes_u: ModeHeader::of(&self.modes_u),
            modes_w: ModeHeader::of(&self.modes_w),
            blocks,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let mut out = Vec::with_capacity(header.len() + 32);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.resize(out.len().next_multiple_of(8), 0);
        for b in self.blocks() {
            for x in b.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Data blocks only; equal for runs that differ only in timings.
    pub fn data_bytes(&self) -> Vec<u8> {
        self.blocks().iter().flat_map(|b| b.data.iter().flat_map(|x| x.to_le_bytes())).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PipelineError> {
        if bytes.len() < 24 || bytes[..8] != MAGIC {
            return Err(err("not a bundle file (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(err(format!("unsupported bundle format version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let header_end =
            24usize.checked_add(header_len).filter(|&e| e <= bytes.len()).ok_or_else(|| err("truncated header"))?;
        let header: BundleHeader = serde_json::from_slice(&bytes[24..header_end]).map_err(err)?;
        let data = &bytes[header_end.next_multiple_of(8).min(bytes.len())..];

        let block = |name: &str| -> Result<Vec<f64>, PipelineError> {
            let info =
                header.blocks.iter().find(|b| b.name == name).ok_or_else(|| err(format!("missing block {name}")))?;
            let count: usize = info.shape.iter().product();
            let start = info.offset as usize;
            let end = start
                .checked_add(8 * count)
                .filter(|&e| e <= data.len())
                .ok_or_else(|| err(format!("block {name} out of range")))?;
            Ok(data[start..end].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        };
        let modes = |name: &str, h: &ModeHeader| -> Result<ModeSet, PipelineError> {
            let raw = block(name)?;
            let vectors = if header.vertex_count == 0 {
                Vec::new()
            } else {
                raw.chunks(header.vertex_count).map(<[f64]>::to_vec).collect()
            };
            Ok(ModeSet {
                eigenvalues: h.eigenvalues.clone(),
                vectors,
                normalization: h.normalization,
                residuals: h.residuals.clone(),
                constant_mode_excluded: h.constant_mode_excluded,
            })
        };
        let faces = block("faces")?
            .chunks_exact(3)
            .map(|c| {
                let idx = |x: f64| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(err(format!("bad face index {x}")))
                    }
                };
                Ok([idx(c[0])?, idx(c[1])?, idx(c[2])?])
            })
            .collect::<Result<Vec<_>, _>>()?;

        let bundle = SessionBundle {
            session_version: header.session_version,
            config: header.config.clone(),
            gamma: header.gamma,
            positions: chunks(&block("positions")?),
            faces,
            base_displacement: chunks(&block("base_displacement")?),
            base_stress: chunks(&block("base_stress")?),
            stress: StressSummary {
                eigenvalues: chunks(&block("stress_eigenvalues")?),
                eigenvectors: chunks(&block("stress_eigenvectors")?),
                isotropic: block("isotropic")?.iter().map(|&x| x != 0.0).collect(),
                von_mises: block("von_mises")?,
            },
            tensors_major: chunks(&block("tensors_major")?),
            tensors_minor: chunks(&block("tensors_minor")?),
            mass: block("mass")?,
            modes_u: modes("modes_u", &header.modes_u)?,
            modes_w: modes("modes_w", &header.modes_w)?,
            timings: header.timings,
        };
        if bundle.vertex_count() != header.vertex_count || bundle.face_count() != header.face_count {
            return Err(err("header counts disagree with blocks"));
        }
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| err(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let bytes = std::fs::read(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}
