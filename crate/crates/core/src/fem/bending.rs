//! Hinge bending energy `k · (θ − θ̄)² · ‖ē‖² / Ā` per interior edge.

use nalgebra::{SMatrix, SVector, Vector3};

use crate::mesh::{dihedral_angle, EdgeHinge};

pub type HingeVector = SVector<f64, 12>;
pub type HingeMatrix = SMatrix<f64, 12, 12>;

/// Gradient of the signed dihedral angle with respect to the stencil
/// `(x0, x1, x2, x3)` used by [`dihedral_angle`].
pub fn dihedral_gradient(x: &[Vector3<f64>; 4]) -> [Vector3<f64>; 4] {
    let e = x[1] - x[0];
    let len2 = e.norm_squared();
    let len = len2.sqrt();
    let n0 = e.cross(&(x[2] - x[0]));
    let n1 = (x[3] - x[0]).cross(&e);
    let g2 = -len / n0.norm_squared() * n0;
    let g3 = -len / n1.norm_squared() * n1;
    let a = (x[2] - x[0]).dot(&e) / len2;
    let b = (x[3] - x[0]).dot(&e) / len2;
    let g0 = -(1.0 - a) * g2 - (1.0 - b) * g3;
    let g1 = -a * g2 - b * g3;
    [g0, g1, g2, g3]
}

fn stack(v: &[Vector3<f64>; 4]) -> HingeVector {
    HingeVector::from_iterator(v.iter().flat_map(|p| [p.x, p.y, p.z]))
}

/// Bending element with rest weights frozen.
#[derive(Debug, Clone, Copy)]
pub struct HingeElement {
    pub stencil: [usize; 4],
    pub faces: [usize; 2],
    pub rest_angle: f64,
    /// `‖ē‖² / Ā`.
    pub weight: f64,
}

impl HingeElement {
    pub fn new(hinge: &EdgeHinge) -> Self {
        Self {
            stencil: hinge.stencil(),
            faces: hinge.faces,
            rest_angle: hinge.rest_angle,
            weight: hinge.length * hinge.length / hinge.area,
        }
    }

    pub fn energy(&self, x: &[Vector3<f64>; 4], stiffness: f64) -> f64 {
        let d = wrap_angle(dihedral_angle(x) - self.rest_angle);
        stiffness * self.weight * d * d
    }

    pub fn gradient(&self, x: &[Vector3<f64>; 4], stiffness: f64) -> HingeVector {
        let d = wrap_angle(dihedral_angle(x) - self.rest_angle);
        2.0 * stiffness * self.weight * d * stack(&dihedral_gradient(x))
    }

    /// Hessian at the rest configuration: `2kw ∇θ ∇θᵀ` (the `∇²θ` term is
    /// multiplied by `θ − θ̄ = 0`).
    pub fn rest_hessian(&self, rest: &[Vector3<f64>; 4], stiffness: f64) -> HingeMatrix {
        let g = stack(&dihedral_gradient(rest));
        2.0 * stiffness * self.weight * g * g.transpose()
    }
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if a > PI {
        a - TAU
    } else if a < -PI {
        a + TAU
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stencil() -> [Vector3<f64>; 4] {
        [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.1, 0.0),
            Vector3::new(0.4, 0.9, 0.2),
            Vector3::new(0.6, -0.8, 0.3),
        ]
    }

    #[test]
    fn angle_gradient_matches_finite_differences() {
        let x = stencil();
        let g = dihedral_gradient(&x);
        let h = 1e-6;
        for k in 0..12 {
            let (mut xp, mut xm) = (x, x);
            xp[k / 3][k % 3] += h;
            xm[k / 3][k % 3] -= h;
            let fd = (dihedral_angle(&xp) - dihedral_angle(&xm)) / (2.0 * h);
            assert!((fd - g[k / 3][k % 3]).abs() < 1e-7, "dof {k}: {fd} vs {}", g[k / 3][k % 3]);
        }
    }

    #[test]
    fn angle_gradient_is_translation_invariant() {
        let g = dihedral_gradient(&stencil());
        assert!((g[0] + g[1] + g[2] + g[3]).norm() < 1e-12);
    }

    #[test]
    fn rest_hessian_matches_fd_of_gradient() {
        let x = stencil();
        let el = HingeElement { stencil: [0, 1, 2, 3], faces: [0, 1], rest_angle: dihedral_angle(&x), weight: 1.7 };
        let hess = el.rest_hessian(&x, 0.3);
        let h = 1e-6;
        for k in 0..12 {
            let (mut xp, mut xm) = (x, x);
            xp[k / 3][k % 3] += h;
            xm[k / 3][k % 3] -= h;
            let col = (el.gradient(&xp, 0.3) - el.gradient(&xm, 0.3)) / (2.0 * h);
            assert!((col - hess.column(k)).norm() < 1e-6 * hess.norm());
        }
    }
}
