//! Stress to diffusion-tensor remapping in each face's tangent frame.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::StressField;
use crate::mesh::FaceFrame;

pub const MAX_ANISOTROPY: f64 = 1e4;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("isotropy tolerance must lie in (0, 1), got {0}")]
    Tolerance(f64),
    #[error("stress floor must be finite and non-negative, got {0}")]
    Floor(f64),
    #[error("anisotropy ratio must be finite, got {0}")]
    Ratio(f64),
}

/// Magnitude below which a face's stress counts as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressFloor {
    /// Fraction of the largest `|λ2|` over the mesh.
    Relative(f64),
    /// Absolute stress value.
    Absolute(f64),
}

impl Default for StressFloor {
    fn default() -> Self {
        StressFloor::Relative(1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnisotropySettings {
    pub r: f64,
    pub isotropy_tolerance: f64,
    pub stress_floor: StressFloor,
}

impl Default for AnisotropySettings {
    fn default() -> Self {
        Self { r: 100.0, isotropy_tolerance: 1e-3, stress_floor: StressFloor::default() }
    }
}

impl AnisotropySettings {
    pub fn validate(&self) -> Result<(), TensorError> {
        if !self.r.is_finite() {
            return Err(TensorError::Ratio(self.r));
        }
        if !(self.isotropy_tolerance > 0.0 && self.isotropy_tolerance < 1.0) {
            return Err(TensorError::Tolerance(self.isotropy_tolerance));
        }
        let f = match self.stress_floor {
            StressFloor::Relative(f) | StressFloor::Absolute(f) => f,
        };
        if !(f >= 0.0 && f.is_finite()) {
            return Err(TensorError::Floor(f));
        }
        Ok(())
    }

    /// `r` clamped to `[1, MAX_ANISOTROPY]`.
    pub fn ratio(&self) -> f64 {
        let r = self.r.clamp(1.0, MAX_ANISOTROPY);
        if r != self.r {
            log::warn!("anisotropy ratio {} clamped to {}", self.r, r);
        }
        r
    }
}

/// Symmetric 2×2 stress in a face frame with `|λ1| ≤ |λ2|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentStress {
    pub matrix: Matrix2<f64>,
    pub eigenvalues: [f64; 2],
    /// Columns are the unit eigenvectors of `eigenvalues[0]` and `eigenvalues[1]`.
    pub eigenvectors: Matrix2<f64>,
}

impl TangentStress {
    pub fn new(m: Matrix2<f64>) -> Self {
        let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
        let mean = 0.5 * (a + c);
        let rad = (0.5 * (a - c)).hypot(b);
        let theta = 0.5 * b.atan2(0.5 * (a - c));
        let (s, co) = theta.sin_cos();
        // (co, s) belongs to mean + rad
        let (hi, lo) = (mean + rad, mean - rad);
        let (vhi, vlo) = (Vector2::new(co, s), Vector2::new(-s, co));
        let (eigenvalues, v1, v2) = if lo.abs() <= hi.abs() { ([lo, hi], vlo, vhi) } else { ([hi, lo], vhi, vlo) };
        Self { matrix: Matrix2::new(a, b, b, c), eigenvalues, eigenvectors: Matrix2::from_columns(&[v1, v2]) }
    }

    pub fn reconstruct(&self) -> Matrix2<f64> {
        let r = self.eigenvectors;
        r * Matrix2::from_diagonal(&Vector2::new(self.eigenvalues[0], self.eigenvalues[1])) * r.transpose()
    }

    /// Unit eigenvector of the larger-magnitude eigenvalue.
    pub fn major(&self) -> Vector2<f64> {
        self.eigenvectors.column(1).into()
    }

    pub fn minor(&self) -> Vector2<f64> {
        self.eigenvectors.column(0).into()
    }
}

/// `S₂ = Bᵀ σ B` with `B = [t1 t2]`.
pub fn project_to_tangent(field: &StressField, frames: &[FaceFrame]) -> Vec<TangentStress> {
    assert_eq!(field.len(), frames.len());
    field
        .tensors
        .iter()
        .zip(frames)
        .map(|(s, fr)| {
            let (st1, st2) = (s * fr.t1, s * fr.t2);
            TangentStress::new(Matrix2::new(fr.t1.dot(&st1), fr.t1.dot(&st2), fr.t2.dot(&st1), fr.t2.dot(&st2)))
        })
        .collect()
}

/// Isotropic iff `|λ2| ≤ floor` or `1 − |λ1|/|λ2| ≤ τ`.
pub fn classify(ts: &TangentStress, tolerance: f64, floor: f64) -> bool {
    let (l1, l2) = (ts.eigenvalues[0].abs(), ts.eigenvalues[1].abs());
    l2 <= floor || 1.0 - l1 / l2 <= tolerance
}

/// Returns `(σ′, σ″)`: `σ′` has `r` on the major direction, `σ″` on the minor one.
pub fn remap(ts: &TangentStress, isotropic: bool, r: f64) -> (Matrix2<f64>, Matrix2<f64>) {
    if isotropic {
        return (Matrix2::identity(), Matrix2::identity());
    }
    let (v1, v2) = (ts.minor(), ts.major());
    let (p1, p2) = (v1 * v1.transpose(), v2 * v2.transpose());
    (r * p2 + p1, p2 + r * p1)
}

/// Per-face diffusion tensor pair in face-frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTensors {
    pub major: Vec<Matrix2<f64>>,
    pub minor: Vec<Matrix2<f64>>,
    pub isotropic: Vec<bool>,
    pub r: f64,
}

impl DiffusionTensors {
    pub fn identity(face_count: usize) -> Self {
        Self {
            major: vec![Matrix2::identity(); face_count],
            minor: vec![Matrix2::identity(); face_count],
            isotropic: vec![true; face_count],
            r: 1.0,
        }
    }

    pub fn anisotropic_count(&self) -> usize {
        self.isotropic.iter().filter(|&&i| !i).count()
    }
}

/// Absolute floor implied by `settings` for this stress field.
pub fn absolute_floor(tangent: &[TangentStress], settings: &AnisotropySettings) -> f64 {
    match settings.stress_floor {
        StressFloor::Absolute(f) => f,
        StressFloor::Relative(f) => f * tangent.iter().fold(0.0f64, |m, t| m.max(t.eigenvalues[1].abs())),
    }
}

pub fn diffusion_tensors(tangent: &[TangentStress], settings: &AnisotropySettings) -> DiffusionTensors {
    let floor = absolute_floor(tangent, settings);
    let r = settings.ratio();
    let mut out = DiffusionTensors {
        major: Vec::with_capacity(tangent.len()),
        minor: Vec::with_capacity(tangent.len()),
        isotropic: Vec::with_capacity(tangent.len()),
        r,
    };
    for ts in tangent {
        let iso = classify(ts, settings.isotropy_tolerance, floor);
        let (a, b) = remap(ts, iso, r);
        out.major.push(a);
        out.minor.push(b);
        out.isotropic.push(iso);
    }
    out
}
