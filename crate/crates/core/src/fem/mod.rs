//! Linear thin-shell statics: extrinsic StVK membrane plus hinge bending,
//! linearized at the rest state.

mod assemble;
pub mod bending;
pub mod boundary;
pub mod element;
mod solve;
mod stress;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assemble::{assemble_hessian, assemble_hessian_scaled, ShellModel};
pub use boundary::{BoundaryConditions, BoundaryError, BoundarySpec, FixedSpec, ForceSpec, Selection};
pub use element::{deformation_gradient, face_projection, stvk_energy, MembraneElement};
pub use solve::{compliance, factor_reduced, solve_with, static_solve, ReducedSystem, StaticsSolution};
pub use stress::{cauchy_stress, von_mises, von_mises_field, StressField};

#[derive(Debug, Error, PartialEq)]
pub enum FemError {
    #[error("degenerate rest face{}", fmt_face(*.face))]
    DegenerateFace { face: Option<usize> },
    #[error("degenerate deformed face{}", fmt_face(*.face))]
    DegenerateDeformed { face: Option<usize> },
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("component {component} is insufficiently constrained: {detail}")]
    InsufficientConstraints { component: usize, detail: String },
    #[error("linear solve residual {relative:e} too large in component {component}")]
    Residual { component: usize, relative: f64 },
}

fn fmt_face(face: Option<usize>) -> String {
    face.map(|f| format!(" {f}")).unwrap_or_default()
}

impl FemError {
    pub(crate) fn at_face(self, f: usize) -> Self {
        match self {
            FemError::DegenerateFace { .. } => FemError::DegenerateFace { face: Some(f) },
            FemError::DegenerateDeformed { .. } => FemError::DegenerateDeformed { face: Some(f) },
            other => other,
        }
    }
}

/// Shell constitutive and bending parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialParams {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub thickness: f64,
    pub bending_stiffness: f64,
    pub bending_enabled: bool,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { young_modulus: 1e3, poisson_ratio: 0.3, thickness: 1e-2, bending_stiffness: 1e-3, bending_enabled: true }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), FemError> {
        let bad = |m: &str| Err(FemError::InvalidMaterial(m.into()));
        if !(self.young_modulus > 0.0) {
            return bad("young_modulus must be positive");
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return bad("poisson_ratio must lie in (-1, 0.5)");
        }
        if !(self.thickness > 0.0) {
            return bad("thickness must be positive");
        }
        if !(self.bending_stiffness >= 0.0) {
            return bad("bending_stiffness must be non-negative");
        }
        Ok(())
    }

    /// Lamé parameters `(μ, λ)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young_modulus, self.poisson_ratio);
        (e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))
    }
}
