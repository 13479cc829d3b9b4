//! Precompute chain, partial recomputes and extraction on a bundle.

use std::time::Instant;

use diffstruct::eigen::{solve_modes, EigenOptions, ModeSet};
use diffstruct::extract::{extract, ExtractOptions, ExtractedMesh};
use diffstruct::fem::{cauchy_stress, factor_reduced, solve_with, ShellModel};
use diffstruct::mesh::{build_face_frames, load_obj, FaceFrame, TriangleMesh};
use diffstruct::operators::{assemble_mass, assemble_stiffness};
use diffstruct::sparse::CsrMatrix;
use diffstruct::stripes::{StripeField, StripeParams};
use diffstruct::tensor::{diffusion_tensors, project_to_tangent, DiffusionTensors, TangentStress};
use nalgebra::{Matrix2, Vector3};

use crate::bundle::{SessionBundle, StressSummary};
use crate::config::SessionConfig;
use crate::error::{PipelineError, Stage};
use crate::timing::{timed, TimingRecord};

fn tag<E: std::fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

fn to_matrix(m: &[f64; 4]) -> Matrix2<f64> {
    Matrix2::new(m[0], m[1], m[2], m[3])
}

fn to_row_major(m: &Matrix2<f64>) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Loads the OBJ named by `config.mesh`.
pub fn load_mesh(config: &SessionConfig) -> Result<TriangleMesh, PipelineError> {
    let path = config.mesh.as_ref().ok_or_else(|| PipelineError::new(Stage::Config, "config names no mesh"))?;
    load_obj(path).map_err(|e| PipelineError::new(Stage::Mesh, format!("{}: {e}", path.display())))
}

/// Rebuilds the mesh stored in a bundle.
pub fn bundle_mesh(bundle: &SessionBundle) -> Result<TriangleMesh, PipelineError> {
    let positions = bundle.positions.iter().map(|p| Vector3::from(*p)).collect();
    TriangleMesh::new(positions, bundle.faces.clone()).map_err(tag(Stage::Mesh))
}

struct Derived {
    tensors: DiffusionTensors,
    l_major: CsrMatrix,
    l_minor: CsrMatrix,
}

/// Stress summary, tensors and both operators at force scale `gamma`.
fn derive(
    mesh: &TriangleMesh,
    frames: &[FaceFrame],
    base_stress: &[[f64; 4]],
    config: &SessionConfig,
    gamma: f64,
) -> (StressSummary, f64, Derived, f64) {
    let (tangent, stress_time) =
        timed(|| base_stress.iter().map(|m| TangentStress::new(to_matrix(m) * gamma)).collect::<Vec<_>>());
    let ((tensors, l_major, l_minor), diffusion_time) = timed(|| {
        let tensors = diffusion_tensors(&tangent, &config.anisotropy);
        let (a, b) = std::thread::scope(|s| {
            let a = s.spawn(|| assemble_stiffness(mesh, frames, &tensors.major));
            let b = assemble_stiffness(mesh, frames, &tensors.minor);
            (a.join().expect("assembly thread"), b)
        });
        (tensors, a, b)
    });
    let stress = StressSummary {
        eigenvalues: tangent.iter().map(|t| t.eigenvalues).collect(),
        eigenvectors: tangent
            .iter()
            .map(|t| [t.eigenvectors[(0, 0)], t.eigenvectors[(1, 0)], t.eigenvectors[(0, 1)], t.eigenvectors[(1, 1)]])
            .collect(),
        isotropic: tensors.isotropic.clone(),
        von_mises: von_mises(base_stress).into_iter().map(|v| v * gamma.abs()).collect(),
    };
    (stress, stress_time, Derived { tensors, l_major, l_minor }, diffusion_time)
}

fn solve_pair(
    mesh: &TriangleMesh,
    d: &Derived,
    mass: &[f64],
    config: &SessionConfig,
    warm: Option<(&ModeSet, &ModeSet)>,
) -> Result<(ModeSet, ModeSet), PipelineError> {
    let components = mesh.vertex_components();
    let options = |prev: Option<&ModeSet>| EigenOptions {
        normalization: config.normalization,
        warm_start: prev.map(|m| m.vectors.clone()),
        ..Default::default()
    };
    let (ou, ow) = (options(warm.map(|w| w.0)), options(warm.map(|w| w.1)));
    let (u, w) = std::thread::scope(|s| {
        let u = s.spawn(|| solve_modes(&d.l_major, mass, &components, config.k, &ou));
        let w = solve_modes(&d.l_minor, mass, &components, config.k, &ow);
        (u.join().expect("eigensolver thread"), w)
    });
    Ok((u.map_err(tag(Stage::Modes))?, w.map_err(tag(Stage::Modes))?))
}

/// Full chain: frames, shell Hessian, static solve at unit force, stress,
/// remap, operators, modes.
pub fn precompute(config: &SessionConfig, mesh: &TriangleMesh) -> Result<SessionBundle, PipelineError> {
    let start = Instant::now();
    config.validate()?;
    let bc = config.boundary.resolve(mesh).map_err(tag(Stage::Boundary))?;
    let frames = build_face_frames(mesh).map_err(tag(Stage::Mesh))?;

    let (model, t_model) = timed(|| ShellModel::new(mesh, config.material));
    let model = model.map_err(tag(Stage::Membrane))?;
    let (membrane, t_membrane) = timed(|| model.membrane_hessian(None));
    let (bending, t_bending) = timed(|| model.bending_hessian(None));
    let bending_time = bending.as_ref().map(|_| t_bending);
    let h = match bending {
        Some(b) => membrane.add(&b),
        None => membrane,
    };

    let (solution, t_statics) = timed(|| -> Result<_, PipelineError> {
        let system = factor_reduced(mesh, &h, &bc).map_err(tag(Stage::Statics))?;
        solve_with(std::sync::Arc::new(system), &bc, 1.0).map_err(tag(Stage::Statics))
    });
    let solution = solution?;

    let (base, t_base_stress) = timed(|| -> Result<_, PipelineError> {
        let field = cauchy_stress(mesh, solution.base_displacement(), &config.material).map_err(tag(Stage::Stress))?;
        let tangent = project_to_tangent(&field, &frames);
        Ok(tangent.iter().map(|t| to_row_major(&t.matrix)).collect::<Vec<_>>())
    });
    let base_stress = base?;

    let (stress, t_stress, derived, t_diffusion) = derive(mesh, &frames, &base_stress, config, config.gamma);
    let (mass, t_mass) = timed(|| assemble_mass(mesh, config.mass_lumping));
    let ((modes_u, modes_w), t_modes) = {
        let (r, t) = timed(|| solve_pair(mesh, &derived, &mass, config, None));
        (r?, t)
    };

    let timings = TimingRecord {
        membrane: t_model + t_membrane,
        bending: bending_time,
        statics: t_statics,
        stress: t_base_stress + t_stress,
        diffusion: t_diffusion + t_mass,
        modes: t_modes,
        total: start.elapsed().as_secs_f64(),
    };
    Ok(SessionBundle {
        session_version: 1,
        config: config.clone(),
        gamma: config.gamma,
        positions: mesh.positions().iter().map(|p| [p.x, p.y, p.z]).collect(),
        faces: mesh.faces().to_vec(),
        base_displacement: solution.base_displacement().iter().map(|u| [u.x, u.y, u.z]).collect(),
        base_stress,
        stress,
        tensors_major: derived.tensors.major.iter().map(to_row_major).collect(),
        tensors_minor: derived.tensors.minor.iter().map(to_row_major).collect(),
        mass,
        modes_u,
        modes_w,
        timings,
    })
}

/// Loads the config's mesh and runs [`precompute`].
pub fn precompute_from_file(config: &SessionConfig) -> Result<SessionBundle, PipelineError> {
    precompute(config, &load_mesh(config)?)
}

/// Re-derives tensors, operators and modes from the stored unit-force stress.
fn rederive(
    bundle: &SessionBundle,
    config: SessionConfig,
    gamma: f64,
    stress_stage: bool,
) -> Result<SessionBundle, PipelineError> {
    let start = Instant::now();
    config.validate()?;
    let mesh = bundle_mesh(bundle)?;
    let frames = build_face_frames(&mesh).map_err(tag(Stage::Mesh))?;
    let (stress, t_stress, derived, t_diffusion) = derive(&mesh, &frames, &bundle.base_stress, &config, gamma);
    let warm = (bundle.k() > 0).then_some((&bundle.modes_u, &bundle.modes_w));
    let (pair, t_modes) = timed(|| solve_pair(&mesh, &derived, &bundle.mass, &config, warm));
    let (modes_u, modes_w) = pair?;
    let timings = TimingRecord {
        membrane: 0.0,
        bending: config.material.bending_enabled.then_some(0.0),
        statics: 0.0,
        stress: if stress_stage { t_stress } else { 0.0 },
        diffusion: t_diffusion + if stress_stage { 0.0 } else { t_stress },
        modes: t_modes,
        total: start.elapsed().as_secs_f64(),
    };
    Ok(SessionBundle {
        session_version: bundle.session_version + 1,
        config,
        gamma,
        positions: bundle.positions.clone(),
        faces: bundle.faces.clone(),
        base_displacement: bundle.base_displacement.clone(),
        base_stress: bundle.base_stress.clone(),
        stress,
        tensors_major: derived.tensors.major.iter().map(to_row_major).collect(),
        tensors_minor: derived.tensors.minor.iter().map(to_row_major).collect(),
        mass: bundle.mass.clone(),
        modes_u,
        modes_w,
        timings,
    })
}

/// von Mises stress of row-major tangent tensors (zero normal components).
fn von_mises(stress: &[[f64; 4]]) -> Vec<f64> {
    stress
        .iter()
        .map(|m| {
            let (a, b, c) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
            (a * a - a * c + c * c + 3.0 * b * b).max(0.0).sqrt()
        })
        .collect()
}

/// New anisotropy ratio: skips statics and stress.
pub fn recompute_r(bundle: &SessionBundle, r: f64) -> Result<SessionBundle, PipelineError> {
    let mut config = bundle.config.clone();
    config.anisotropy.r = r;
    rederive(bundle, config, bundle.gamma, false)
}

/// New force scale: rescales the stored stress; the Hessian is never refactored.
pub fn recompute_gamma(bundle: &SessionBundle, gamma: f64) -> Result<SessionBundle, PipelineError> {
    let mut config = bundle.config.clone();
    config.gamma = gamma;
    rederive(bundle, config, gamma, true)
}

/// New mode count.
pub fn recompute_k(bundle: &SessionBundle, k: usize) -> Result<SessionBundle, PipelineError> {
    let mut config = bundle.config.clone();
    config.k = k;
    rederive(bundle, config, bundle.gamma, false)
}

/// Mode-value field for `params` on the bundle's modes.
pub fn stripe_field(bundle: &SessionBundle, params: StripeParams) -> Result<StripeField, PipelineError> {
    if let Some(g) = params.gamma.filter(|&g| g != bundle.gamma) {
        log::warn!("params gamma {g} differs from bundle gamma {}; using bundle modes", bundle.gamma);
    }
    if let Some(r) = params.r.filter(|&r| r != bundle.config.anisotropy.r) {
        log::warn!("params r {r} differs from bundle r {}; using bundle modes", bundle.config.anisotropy.r);
    }
    StripeField::from_modes(&bundle.modes_u, &bundle.modes_w, params).map_err(tag(Stage::Extract))
}

pub fn extract_structure(
    bundle: &SessionBundle,
    params: StripeParams,
    max_depth: Option<u32>,
) -> Result<ExtractedMesh, PipelineError> {
    let mesh = bundle_mesh(bundle)?;
    let field = stripe_field(bundle, params)?;
    let options = ExtractOptions { max_depth: max_depth.unwrap_or(bundle.config.max_depth), ..Default::default() };
    extract(&mesh, &field, &options).map_err(tag(Stage::Extract))
}

/// OBJ comment lines recording where an extraction came from.
pub fn obj_header(bundle: &SessionBundle, out: &ExtractedMesh) -> Vec<String> {
    vec![
        "diffusion structure".to_string(),
        format!("params {}", serde_json::to_string(&out.params).unwrap_or_default()),
        format!("session_version {}", bundle.session_version),
        format!("gamma {} r {}", bundle.gamma, bundle.config.anisotropy.r),
        format!("faces {} unresolved {}", out.face_count(), out.unresolved_faces),
    ]
}

/// OBJ text of an extraction.
pub fn obj_text(bundle: &SessionBundle, out: &ExtractedMesh) -> String {
    let mut buf = Vec::new();
    out.write_obj(&mut buf, &obj_header(bundle, out)).expect("writing to memory");
    String::from_utf8(buf).expect("OBJ is ASCII")
}
