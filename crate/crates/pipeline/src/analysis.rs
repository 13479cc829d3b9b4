//! Structural evaluation of extracted structures: stress alignment and
//! compliance of the kept material.

use diffstruct::eigen::{solve_modes, EigenOptions, ModeSet};
use diffstruct::extract::{extract, ExtractOptions, ExtractedMesh};
use diffstruct::fem::{assemble_hessian_scaled, compliance, static_solve, BoundarySpec, MaterialParams};
use diffstruct::mesh::{build_face_frames, TriangleMesh};
use diffstruct::operators::{assemble_isotropic, hat_gradients};
use diffstruct::stripes::{StripeField, StripeParams};
use nalgebra::Vector2;
use serde::Serialize;

use crate::bundle::SessionBundle;
use crate::error::{PipelineError, Stage};
use crate::session::bundle_mesh;

/// Stiffness multiplier for faces with no kept material.
pub const VOID_DENSITY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alignment {
    /// Mean angle in degrees between the isoline direction of the U mode and
    /// the major stress direction.
    pub to_major: f64,
    pub to_minor: f64,
    pub faces: usize,
}

/// Per-face angles between level lines of `U_a` and the principal directions,
/// averaged over anisotropic faces.
pub fn alignment(bundle: &SessionBundle, a: usize) -> Result<Alignment, PipelineError> {
    let mesh = bundle_mesh(bundle)?;
    let frames = build_face_frames(&mesh).map_err(|e| PipelineError::new(Stage::Mesh, e))?;
    let u = bundle.modes_u.mode(a).ok_or_else(|| PipelineError::new(Stage::Extract, format!("no U mode {a}")))?;
    let (mut major, mut minor, mut faces) = (0.0, 0.0, 0usize);
    for f in 0..mesh.face_count() {
        if bundle.stress.isotropic[f] {
            continue;
        }
        let g = hat_gradients(&frames[f], &mesh.corners(f));
        let v = mesh.faces()[f];
        let grad = g[0] * u[v[0]] + g[1] * u[v[1]] + g[2] * u[v[2]];
        if grad.norm() == 0.0 {
            continue;
        }
        let dir = Vector2::new(-grad.y, grad.x).normalize();
        let e = bundle.stress.eigenvectors[f];
        let angle = |w: Vector2<f64>| dir.dot(&w).abs().min(1.0).acos().to_degrees();
        major += angle(Vector2::new(e[2], e[3]));
        minor += angle(Vector2::new(e[0], e[1]));
        faces += 1;
    }
    let n = faces.max(1) as f64;
    Ok(Alignment { to_major: major / n, to_minor: minor / n, faces })
}

/// Kept-area fraction of each input face, floored at [`VOID_DENSITY`].
pub fn face_density(mesh: &TriangleMesh, structure: &ExtractedMesh) -> Vec<f64> {
    let mut kept = vec![0.0; mesh.face_count()];
    for (t, f) in structure.faces.iter().enumerate() {
        let p = &structure.positions;
        kept[structure.source_face[t]] += diffstruct::mesh::triangle_area(&p[f[0]], &p[f[1]], &p[f[2]]);
    }
    kept.iter().enumerate().map(|(f, k)| (k / mesh.face_area(f)).clamp(VOID_DENSITY, 1.0)).collect()
}

/// `fᵀu` at unit force scale for the shell whose face stiffness is scaled
/// by the kept-area density.
pub fn structure_compliance(
    mesh: &TriangleMesh,
    material: &MaterialParams,
    boundary: &BoundarySpec,
    structure: &ExtractedMesh,
) -> Result<f64, PipelineError> {
    let bc = boundary.resolve(mesh).map_err(|e| PipelineError::new(Stage::Boundary, e))?;
    let density = face_density(mesh, structure);
    let h =
        assemble_hessian_scaled(mesh, material, Some(&density)).map_err(|e| PipelineError::new(Stage::Membrane, e))?;
    let sol = static_solve(mesh, &h, &bc, 1.0).map_err(|e| PipelineError::new(Stage::Statics, e))?;
    Ok(compliance(&bc, &sol))
}

/// Modes of the isotropic operator with the bundle's mass and normalization.
pub fn isotropic_modes(bundle: &SessionBundle) -> Result<ModeSet, PipelineError> {
    let mesh = bundle_mesh(bundle)?;
    let frames = build_face_frames(&mesh).map_err(|e| PipelineError::new(Stage::Mesh, e))?;
    let l = assemble_isotropic(&mesh, &frames);
    let options = EigenOptions { normalization: bundle.config.normalization, ..Default::default() };
    solve_modes(&l, &bundle.mass, &mesh.vertex_components(), bundle.k(), &options)
        .map_err(|e| PipelineError::new(Stage::Modes, e))
}

/// Bisects a common threshold `mU = mW` so the structure built from
/// `modes` covers `target` of the area within relative `tolerance`.
/// Returns the closest structure found.
pub fn match_coverage(
    mesh: &TriangleMesh,
    modes: &ModeSet,
    template: StripeParams,
    target: f64,
    tolerance: f64,
    max_depth: u32,
) -> Result<(ExtractedMesh, f64), PipelineError> {
    let total = mesh.total_area();
    let build = |m: f64| -> Result<ExtractedMesh, PipelineError> {
        let params = StripeParams { m_u: m, m_w: m, ..template };
        let field = StripeField::from_modes(modes, modes, params).map_err(|e| PipelineError::new(Stage::Extract, e))?;
        extract(mesh, &field, &ExtractOptions { max_depth, ..Default::default() })
            .map_err(|e| PipelineError::new(Stage::Extract, e))
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut best: Option<(ExtractedMesh, f64, f64)> = None;
    for _ in 0..40 {
        let m = 0.5 * (lo + hi);
        let out = build(m)?;
        let cov = out.area() / total;
        let err = (cov - target).abs() / target;
        let better = best.as_ref().is_none_or(|b| err < b.2);
        if better {
            best = Some((out, m, err));
        }
        if err <= tolerance {
            break;
        }
        // coverage falls as the threshold rises
        if cov > target {
            lo = m;
        } else {
            hi = m;
        }
    }
    let (out, m, _) = best.expect("at least one bisection step");
    Ok((out, m))
}
