//! Exact triangle mesh of the region `max(s1, s2) > 0`.
//!
//! count crossings → refine multiply-crossed faces → cut along level lines →
//! discard outside pieces.

pub mod crossings;
mod cut;
mod subdivide;

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crossings::{count_crossings, levels_between, CrossingReport, LevelId};
pub use cut::{cut_and_discard, CutResult};
pub use subdivide::{adaptive_subdivide, RefinedMesh};

use crate::mesh::{self, MeshError, TriangleMesh};
use crate::stripes::{inside, StripeError, StripeField, StripeParams};

pub const DEFAULT_MAX_DEPTH: u32 = 10;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Stripe(#[from] StripeError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractOptions {
    pub max_depth: u32,
    /// Triangles at or below this area are dropped; `None` uses the input
    /// mesh's area epsilon.
    pub area_epsilon: Option<f64>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { max_depth: DEFAULT_MAX_DEPTH, area_epsilon: None }
    }
}

/// Extraction output with provenance and interpolated mode values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedMesh {
    pub positions: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
    /// Input face each output triangle lies in.
    pub source_face: Vec<usize>,
    /// `[υ, ω]` per output vertex.
    pub values: Vec<[f64; 2]>,
    pub params: StripeParams,
    pub kept_area: f64,
    pub discarded_area: f64,
    pub refined_area: f64,
    pub refined_face_count: usize,
    pub unresolved_faces: usize,
}

impl ExtractedMesh {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| mesh::triangle_area(&self.positions[f[0]], &self.positions[f[1]], &self.positions[f[2]]))
            .sum()
    }

    /// Stripe field on the output vertices.
    pub fn stripe_field(&self) -> StripeField {
        StripeField {
            upsilon: self.values.iter().map(|v| v[0]).collect(),
            omega: self.values.iter().map(|v| v[1]).collect(),
            params: self.params,
        }
    }

    /// Indicator at a barycentric point of an output triangle.
    pub fn indicator(&self, face: usize, bary: [f64; 3]) -> bool {
        let f = self.faces[face];
        let lerp = |k: usize| (0..3).map(|i| bary[i] * self.values[f[i]][k]).sum::<f64>();
        let field = StripeField { upsilon: Vec::new(), omega: Vec::new(), params: self.params };
        let (s1, s2) = field.eval_values(lerp(0), lerp(1));
        inside(s1, s2)
    }

    pub fn to_mesh(&self) -> Result<TriangleMesh, MeshError> {
        TriangleMesh::new(self.positions.clone(), self.faces.clone())
    }

    pub fn write_obj<W: Write>(&self, writer: W, header: &[String]) -> std::io::Result<()> {
        mesh::write_obj(writer, &self.positions, &self.faces, header)
    }

    pub fn write_obj_file(&self, path: &Path, header: &[String]) -> std::io::Result<()> {
        mesh::write_obj_file(path, &self.positions, &self.faces, header)
    }

    /// `source_face` as JSON, one entry per output triangle.
    pub fn provenance_json(&self) -> String {
        serde_json::json!({ "source_face": self.source_face }).to_string()
    }
}

/// Per-face crossing counts on the unrefined mesh.
pub fn crossing_report(mesh: &TriangleMesh, field: &StripeField) -> CrossingReport {
    let (major, minor) = (field.major(), field.minor());
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for f in mesh.faces() {
        a.push(count_crossings(&major, f.map(|v| field.upsilon[v])));
        b.push(count_crossings(&minor, f.map(|v| field.omega[v])));
    }
    CrossingReport { major: a, minor: b }
}

pub fn extract(
    mesh: &TriangleMesh,
    field: &StripeField,
    options: &ExtractOptions,
) -> Result<ExtractedMesh, ExtractError> {
    field.check_mesh(mesh)?;
    field.params.validate()?;
    let refined = adaptive_subdivide(mesh, field, options.max_depth);
    let eps = options.area_epsilon.unwrap_or_else(|| mesh.area_epsilon());
    let cut = cut_and_discard(&refined, field, eps);

    // compact, keeping surviving input vertices first and in order
    let mut used = vec![false; cut.positions.len()];
    for f in &cut.faces {
        for &v in f {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; cut.positions.len()];
    let (mut positions, mut values) = (Vec::new(), Vec::new());
    for (v, &u) in used.iter().enumerate() {
        if u {
            remap[v] = positions.len();
            positions.push(cut.positions[v]);
            values.push(cut.values[v]);
        }
    }
    Ok(ExtractedMesh {
        positions,
        faces: cut.faces.iter().map(|f| f.map(|v| remap[v])).collect(),
        source_face: cut.refined_face.iter().map(|&f| refined.source[f]).collect(),
        values,
        params: field.params,
        kept_area: cut.kept_area,
        discarded_area: cut.discarded_area,
        refined_area: refined.total_area(),
        refined_face_count: refined.faces.len(),
        unresolved_faces: refined.unresolved,
    })
}
