//! Per-face Cauchy stress from small displacements, and von Mises.

use nalgebra::{Matrix3, Vector3};

use super::element::MembraneElement;
use super::{FemError, MaterialParams};
use crate::mesh::TriangleMesh;

/// Per-face symmetric 3×3 world-space stress with the face normal in its kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct StressField {
    pub tensors: Vec<Matrix3<f64>>,
}

impl StressField {
    pub fn zeros(face_count: usize) -> Self {
        Self { tensors: vec![Matrix3::zeros(); face_count] }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { tensors: self.tensors.iter().map(|s| s * c).collect() }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }
}

/// Plane-stress Cauchy stress per face.
///
/// The strain is `ε = sym(δF)` with `δF` the extrinsic deformation gradient
/// linearized in `u`, so the stress is exactly linear in the displacement.
/// `σ = 2μ ε_t + λ tr(ε_t) P_t` with `ε_t = P_t ε P_t`.
pub fn cauchy_stress(
    mesh: &TriangleMesh,
    u: &[Vector3<f64>],
    material: &MaterialParams,
) -> Result<StressField, FemError> {
    let (mu, lambda) = material.lame();
    let tensors = (0..mesh.face_count())
        .map(|f| {
            let el = MembraneElement::new(&mesh.corners(f)).map_err(|e| e.at_face(f))?;
            let du = mesh.faces()[f].map(|v| u[v]);
            let df = el.linearized_gradient(&du);
            let eps = 0.5 * (df + df.transpose());
            let n = el.rest_normal;
            let p = Matrix3::identity() - n * n.transpose();
            let eps_t = p * eps * p;
            let s = 2.0 * mu * eps_t + lambda * eps_t.trace() * p;
            Ok(0.5 * (s + s.transpose()))
        })
        .collect::<Result<Vec<_>, FemError>>()?;
    Ok(StressField { tensors })
}

pub fn von_mises(s: &Matrix3<f64>) -> f64 {
    let d = (s[(0, 0)] - s[(1, 1)]).powi(2) + (s[(1, 1)] - s[(2, 2)]).powi(2) + (s[(2, 2)] - s[(0, 0)]).powi(2);
    let off = s[(0, 1)].powi(2) + s[(1, 2)].powi(2) + s[(0, 2)].powi(2);
    (0.5 * d + 3.0 * off).sqrt()
}

pub fn von_mises_field(field: &StressField) -> Vec<f64> {
    field.tensors.iter().map(von_mises).collect()
}
