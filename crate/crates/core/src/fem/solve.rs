//! Dirichlet-projected linear statics solve `H u = γ f`.

use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};

use super::boundary::BoundaryConditions;
use super::FemError;
use crate::mesh::TriangleMesh;
use crate::sparse::{self, Cholesky, CsrMatrix};

/// Relative residual accepted after refinement.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Reduced Hessian factored per connected component.
#[derive(Debug)]
pub struct ReducedSystem {
    dof_count: usize,
    blocks: Vec<(Vec<usize>, CsrMatrix, Cholesky)>,
}

impl ReducedSystem {
    pub fn free_dof_count(&self) -> usize {
        self.blocks.iter().map(|b| b.0.len()).sum()
    }

    /// Solves for a full-length right-hand side; fixed entries are ignored
    /// and returned as zero. One step of iterative refinement is applied.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        assert_eq!(rhs.len(), self.dof_count);
        let mut u = vec![0.0; self.dof_count];
        for (component, (dofs, h, chol)) in self.blocks.iter().enumerate() {
            let f: Vec<f64> = dofs.iter().map(|&d| rhs[d]).collect();
            let fnorm = sparse::norm(&f);
            if fnorm == 0.0 {
                continue;
            }
            let mut x = chol.solve(&f);
            let r: Vec<f64> = f.iter().zip(h.mul_vec(&x)).map(|(a, b)| a - b).collect();
            let dx = chol.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
            let res: Vec<f64> = f.iter().zip(h.mul_vec(&x)).map(|(a, b)| a - b).collect();
            let rel = sparse::norm(&res) / fnorm;
            if !(rel <= RESIDUAL_TOLERANCE) {
                return Err(FemError::Residual { component, relative: rel });
            }
            for (&d, v) in dofs.iter().zip(x) {
                u[d] = v;
            }
        }
        Ok(u)
    }
}

/// Displacements at force scale `gamma`, with the factorization kept for reuse.
#[derive(Debug, Clone)]
pub struct StaticsSolution {
    base: Vec<Vector3<f64>>,
    displacement: Vec<Vector3<f64>>,
    gamma: f64,
    system: Arc<ReducedSystem>,
}

impl StaticsSolution {
    pub fn displacement(&self) -> &[Vector3<f64>] {
        &self.displacement
    }

    /// Displacement for unit force scale.
    pub fn base_displacement(&self) -> &[Vector3<f64>] {
        &self.base
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn system(&self) -> &Arc<ReducedSystem> {
        &self.system
    }

    /// `u′ = γ′ u₁`; no refactorization or re-solve.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            base: self.base.clone(),
            displacement: self.base.iter().map(|u| u * gamma).collect(),
            gamma,
            system: Arc::clone(&self.system),
        }
    }

    pub fn displacement_vector(&self) -> Vec<f64> {
        self.displacement.iter().flat_map(|u| [u.x, u.y, u.z]).collect()
    }
}

/// Factors the reduced Hessian after checking that the constraints remove
/// every zero-energy mode of each component.
pub fn factor_reduced(mesh: &TriangleMesh, h: &CsrMatrix, bc: &BoundaryConditions) -> Result<ReducedSystem, FemError> {
    let n = 3 * mesh.vertex_count();
    assert_eq!(h.dim(), n);
    let vcomp = mesh.vertex_components();
    check_rigid_modes(mesh, &vcomp, bc)?;

    let mut per_component: Vec<Vec<usize>> = vec![Vec::new(); mesh.component_count()];
    for d in bc.free_dofs() {
        per_component[vcomp[d / 3]].push(d);
    }
    let max_diag = h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut blocks = Vec::new();
    for (component, dofs) in per_component.into_iter().enumerate() {
        if dofs.is_empty() {
            continue;
        }
        let sub = h.principal_submatrix(&dofs);
        if let Some(k) = sub.diagonal().iter().position(|&d| !(d > 1e-12 * max_diag)) {
            return Err(FemError::InsufficientConstraints {
                component,
                detail: format!("free dof {} has no stiffness", dofs[k]),
            });
        }
        let chol = sub.cholesky().map_err(|_| FemError::InsufficientConstraints {
            component,
            detail: "reduced Hessian is not positive definite".into(),
        })?;
        blocks.push((dofs, sub, chol));
    }
    Ok(ReducedSystem { dof_count: n, blocks })
}

fn check_rigid_modes(mesh: &TriangleMesh, vcomp: &[usize], bc: &BoundaryConditions) -> Result<(), FemError> {
    let ncomp = mesh.component_count();
    let mut centroid = vec![Vector3::zeros(); ncomp];
    let mut count = vec![0usize; ncomp];
    for (v, p) in mesh.positions().iter().enumerate() {
        centroid[vcomp[v]] += p;
        count[vcomp[v]] += 1;
    }
    let mut radius = vec![0.0f64; ncomp];
    for c in 0..ncomp {
        centroid[c] /= count[c] as f64;
    }
    for (v, p) in mesh.positions().iter().enumerate() {
        let c = vcomp[v];
        radius[c] = radius[c].max((p - centroid[c]).norm());
    }
    let mut rows: Vec<Vec<[f64; 6]>> = vec![Vec::new(); ncomp];
    for &d in bc.fixed_dofs() {
        let (v, axis) = (d / 3, d % 3);
        let c = vcomp[v];
        let r = (mesh.positions()[v] - centroid[c]) / radius[c].max(f64::MIN_POSITIVE);
        let mut row = [0.0; 6];
        row[axis] = 1.0;
        for k in 0..3 {
            // axis component of e_k × r
            let mut e = Vector3::zeros();
            e[k] = 1.0;
            row[3 + k] = e.cross(&r)[axis];
        }
        rows[c].push(row);
    }
    for (component, r) in rows.iter().enumerate() {
        let rank = if r.len() < 6 {
            r.len().min(6)
        } else {
            let m = DMatrix::from_fn(r.len(), 6, |i, j| r[i][j]);
            let sv = m.svd(false, false).singular_values;
            let smax = sv.max();
            sv.iter().filter(|&&s| s > 1e-10 * smax).count()
        };
        if rank < 6 {
            return Err(FemError::InsufficientConstraints {
                component,
                detail: format!("fixed degrees of freedom leave {} rigid mode(s) free", 6 - rank),
            });
        }
    }
    Ok(())
}

/// Solves `H_ff u_f = γ f_f` with fixed DOFs projected out.
pub fn static_solve(
    mesh: &TriangleMesh,
    h: &CsrMatrix,
    bc: &BoundaryConditions,
    gamma: f64,
) -> Result<StaticsSolution, FemError> {
    let system = Arc::new(factor_reduced(mesh, h, bc)?);
    solve_with(system, bc, gamma)
}

/// Solves with an existing factorization.
pub fn solve_with(
    system: Arc<ReducedSystem>,
    bc: &BoundaryConditions,
    gamma: f64,
) -> Result<StaticsSolution, FemError> {
    let u1 = system.solve(&bc.force_vector())?;
    let base: Vec<Vector3<f64>> = u1.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
    Ok(StaticsSolution { displacement: base.iter().map(|u| u * gamma).collect(), base, gamma, system })
}

/// `fᵀu` for the external load at the solution's force scale.
pub fn compliance(bc: &BoundaryConditions, solution: &StaticsSolution) -> f64 {
    bc.forces().iter().zip(solution.displacement()).map(|(f, u)| solution.gamma() * f.dot(u)).sum()
}
