//! Dirichlet constraints and external loads, plus their JSON description.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriangleMesh;

#[derive(Debug, Error, PartialEq)]
pub enum BoundaryError {
    #[error("{what} selection #{index} matches no vertices")]
    EmptySelection { what: &'static str, index: usize },
    #[error("vertex index {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("duplicate fixed degree of freedom {0}")]
    DuplicateDof(usize),
    #[error("force vector on vertex {0} has the wrong length")]
    ForceLength(usize),
}

/// Vertex set used by fixed and force entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Indices(Vec<usize>),
    /// Axis-aligned box, bounds inclusive.
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
    All,
}

impl Selection {
    pub fn resolve(&self, mesh: &TriangleMesh) -> Result<Vec<usize>, BoundaryError> {
        match self {
            Selection::Indices(ids) => {
                if let Some(&bad) = ids.iter().find(|&&i| i >= mesh.vertex_count()) {
                    return Err(BoundaryError::VertexOutOfRange(bad));
                }
                let mut ids = ids.clone();
                ids.sort_unstable();
                ids.dedup();
                Ok(ids)
            }
            Selection::Box { min, max } => Ok(mesh
                .positions()
                .iter()
                .enumerate()
                .filter(|(_, p)| (0..3).all(|d| p[d] >= min[d] && p[d] <= max[d]))
                .map(|(i, _)| i)
                .collect()),
            Selection::All => Ok((0..mesh.vertex_count()).collect()),
        }
    }
}

fn all_axes() -> [bool; 3] {
    [true; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedSpec {
    pub selection: Selection,
    /// Which of x, y, z are held.
    #[serde(default = "all_axes")]
    pub axes: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    pub selection: Selection,
    pub vector: [f64; 3],
    /// Divide `vector` evenly over the selection instead of applying it to
    /// every selected vertex.
    #[serde(default)]
    pub split: bool,
}

/// JSON form of [`BoundaryConditions`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    #[serde(default)]
    pub fixed: Vec<FixedSpec>,
    #[serde(default)]
    pub forces: Vec<ForceSpec>,
}

impl BoundarySpec {
    pub fn resolve(&self, mesh: &TriangleMesh) -> Result<BoundaryConditions, BoundaryError> {
        let mut fixed = Vec::new();
        for (index, spec) in self.fixed.iter().enumerate() {
            let verts = spec.selection.resolve(mesh)?;
            if verts.is_empty() {
                return Err(BoundaryError::EmptySelection { what: "fixed", index });
            }
            for v in verts {
                for (axis, &on) in spec.axes.iter().enumerate() {
                    if on {
                        fixed.push(3 * v + axis);
                    }
                }
            }
        }
        fixed.sort_unstable();
        fixed.dedup();

        let mut forces = vec![Vector3::zeros(); mesh.vertex_count()];
        for (index, spec) in self.forces.iter().enumerate() {
            let verts = spec.selection.resolve(mesh)?;
            if verts.is_empty() {
                return Err(BoundaryError::EmptySelection { what: "force", index });
            }
            let mut f = Vector3::from(spec.vector);
            if spec.split {
                f /= verts.len() as f64;
            }
            for v in verts {
                forces[v] += f;
            }
        }
        BoundaryConditions::new(mesh.vertex_count(), fixed, forces)
    }
}

/// Fixed degrees of freedom (`3·vertex + axis`) and per-vertex external forces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    fixed: Vec<usize>,
    forces: Vec<Vector3<f64>>,
}

impl BoundaryConditions {
    pub fn new(vertex_count: usize, mut fixed: Vec<usize>, forces: Vec<Vector3<f64>>) -> Result<Self, BoundaryError> {
        if forces.len() != vertex_count {
            return Err(BoundaryError::ForceLength(forces.len()));
        }
        fixed.sort_unstable();
        if let Some(w) = fixed.windows(2).find(|w| w[0] == w[1]) {
            return Err(BoundaryError::DuplicateDof(w[0]));
        }
        if let Some(&bad) = fixed.iter().find(|&&d| d >= 3 * vertex_count) {
            return Err(BoundaryError::VertexOutOfRange(bad / 3));
        }
        Ok(Self { fixed, forces })
    }

    pub fn fixed_dofs(&self) -> &[usize] {
        &self.fixed
    }

    pub fn forces(&self) -> &[Vector3<f64>] {
        &self.forces
    }

    pub fn force_vector(&self) -> Vec<f64> {
        self.forces.iter().flat_map(|f| [f.x, f.y, f.z]).collect()
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed.binary_search(&dof).is_ok()
    }

    /// Complement of the fixed set, ascending.
    pub fn free_dofs(&self) -> Vec<usize> {
        let n = 3 * self.forces.len();
        let mut out = Vec::with_capacity(n - self.fixed.len());
        let mut it = self.fixed.iter().peekable();
        for d in 0..n {
            if it.peek() == Some(&&d) {
                it.next();
            } else {
                out.push(d);
            }
        }
        out
    }
}
