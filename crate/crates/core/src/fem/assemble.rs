//! Global energy, gradient and rest Hessian of the shell.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::bending::HingeElement;
use super::element::MembraneElement;
use super::{FemError, MaterialParams};
use crate::mesh::{build_hinges, TriangleMesh};
use crate::sparse::CsrMatrix;

/// Rest-state element data for the whole mesh.
#[derive(Debug, Clone)]
pub struct ShellModel {
    pub membranes: Vec<MembraneElement>,
    pub hinges: Vec<HingeElement>,
    pub material: MaterialParams,
    rest: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl ShellModel {
    pub fn new(mesh: &TriangleMesh, material: MaterialParams) -> Result<Self, FemError> {
        material.validate()?;
        let membranes = (0..mesh.face_count())
            .map(|f| MembraneElement::new(&mesh.corners(f)).map_err(|e| e.at_face(f)))
            .collect::<Result<Vec<_>, _>>()?;
        let hinges = build_hinges(mesh).iter().map(HingeElement::new).collect();
        Ok(Self { membranes, hinges, material, rest: mesh.positions().to_vec(), faces: mesh.faces().to_vec() })
    }

    pub fn dof_count(&self) -> usize {
        3 * self.rest.len()
    }

    pub fn rest_positions(&self) -> &[Vector3<f64>] {
        &self.rest
    }

    fn bending_active(&self) -> bool {
        self.material.bending_enabled && self.material.bending_stiffness > 0.0
    }

    pub fn energy(&self, x: &[Vector3<f64>]) -> Result<f64, FemError> {
        let mut total = 0.0;
        for (f, el) in self.membranes.iter().enumerate() {
            let c = self.faces[f].map(|v| x[v]);
            total += el.energy(&c, &self.material).map_err(|e| e.at_face(f))?;
        }
        if self.bending_active() {
            for h in &self.hinges {
                total += h.energy(&h.stencil.map(|v| x[v]), self.material.bending_stiffness);
            }
        }
        Ok(total)
    }

    /// Stacked `3|V|` gradient.
    pub fn gradient(&self, x: &[Vector3<f64>]) -> Result<Vec<f64>, FemError> {
        let mut g = vec![0.0; self.dof_count()];
        for (f, el) in self.membranes.iter().enumerate() {
            let tri = self.faces[f];
            let ge = el.gradient(&tri.map(|v| x[v]), &self.material).map_err(|e| e.at_face(f))?;
            for (a, &v) in tri.iter().enumerate() {
                for d in 0..3 {
                    g[3 * v + d] += ge[3 * a + d];
                }
            }
        }
        if self.bending_active() {
            for h in &self.hinges {
                let ge = h.gradient(&h.stencil.map(|v| x[v]), self.material.bending_stiffness);
                for (a, &v) in h.stencil.iter().enumerate() {
                    for d in 0..3 {
                        g[3 * v + d] += ge[3 * a + d];
                    }
                }
            }
        }
        Ok(g)
    }

    /// Membrane Hessian at rest. `face_scale` multiplies each face's stiffness.
    pub fn membrane_hessian(&self, face_scale: Option<&[f64]>) -> CsrMatrix {
        let blocks: Vec<_> = self
            .membranes
            .par_iter()
            .enumerate()
            .map(|(f, el)| {
                let s = face_scale.map_or(1.0, |w| w[f]);
                (self.faces[f], el.rest_hessian(&self.material) * s)
            })
            .collect();
        let mut triplets = Vec::with_capacity(blocks.len() * 45);
        for (tri, k) in &blocks {
            push_block(&mut triplets, tri, k.as_slice(), 3);
        }
        CsrMatrix::from_symmetric_triplets(self.dof_count(), triplets)
    }

    /// Bending Hessian at rest; `None` when bending is disabled. A hinge
    /// uses the smaller scale of its two faces.
    pub fn bending_hessian(&self, face_scale: Option<&[f64]>) -> Option<CsrMatrix> {
        if !self.material.bending_enabled {
            return None;
        }
        let k = self.material.bending_stiffness;
        let blocks: Vec<_> = self
            .hinges
            .par_iter()
            .map(|h| {
                let s = face_scale.map_or(1.0, |w| w[h.faces[0]].min(w[h.faces[1]]));
                (h.stencil, h.rest_hessian(&h.stencil.map(|v| self.rest[v]), k) * s)
            })
            .collect();
        let mut triplets = Vec::with_capacity(blocks.len() * 78);
        for (st, m) in &blocks {
            push_block(&mut triplets, st, m.as_slice(), 4);
        }
        Some(CsrMatrix::from_symmetric_triplets(self.dof_count(), triplets))
    }
}

/// Scatters a column-major `3n × 3n` element block onto global DOFs.
fn push_block(out: &mut Vec<(usize, usize, f64)>, verts: &[usize], block: &[f64], n: usize) {
    let m = 3 * n;
    for b in 0..m {
        let gb = 3 * verts[b / 3] + b % 3;
        for a in 0..m {
            let ga = 3 * verts[a / 3] + a % 3;
            if ga <= gb {
                out.push((ga, gb, block[b * m + a]));
            }
        }
    }
}

/// Full rest Hessian `H = ∂²ψ/∂x²` (membrane plus optional bending).
pub fn assemble_hessian(mesh: &TriangleMesh, material: &MaterialParams) -> Result<CsrMatrix, FemError> {
    assemble_hessian_scaled(mesh, material, None)
}

/// Rest Hessian with per-face stiffness multipliers.
pub fn assemble_hessian_scaled(
    mesh: &TriangleMesh,
    material: &MaterialParams,
    face_scale: Option<&[f64]>,
) -> Result<CsrMatrix, FemError> {
    let model = ShellModel::new(mesh, *material)?;
    let membrane = model.membrane_hessian(face_scale);
    Ok(match model.bending_hessian(face_scale) {
        Some(b) => membrane.add(&b),
        None => membrane,
    })
}
