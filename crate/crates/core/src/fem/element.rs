//! Extrinsic StVK membrane element on a single triangle.
//!
//! The deformation gradient maps rest 3D vectors to deformed ones: the
//! tangential part follows the linear shape functions, the rest normal is
//! carried onto the deformed normal.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use super::{FemError, MaterialParams};

pub type Corners = [Vector3<f64>; 3];
pub type ElementVector = SVector<f64, 9>;
pub type ElementMatrix = SMatrix<f64, 9, 9>;

/// Least-squares barycentric projection of the rest triangle.
///
/// With `Z = [x̄0 − x̄2, x̄1 − x̄2]` and `A = (ZᵀZ)⁻¹Zᵀ`, rows are `A₀`, `A₁`
/// and `−(A₀ + A₁)`: applied to a 3D vector it returns barycentric deltas.
pub fn face_projection(rest: &Corners) -> Result<Matrix3<f64>, FemError> {
    let z = nalgebra::Matrix3x2::from_columns(&[rest[0] - rest[2], rest[1] - rest[2]]);
    let ztz = z.transpose() * z;
    let scale = ztz.trace().max(f64::MIN_POSITIVE);
    if ztz.determinant().abs() <= 1e-24 * scale * scale {
        return Err(FemError::DegenerateFace { face: None });
    }
    let inv = ztz.try_inverse().ok_or(FemError::DegenerateFace { face: None })?;
    let a = inv * z.transpose();
    let r0 = a.row(0).into_owned();
    let r1 = a.row(1).into_owned();
    Ok(Matrix3::from_rows(&[r0, r1, -(r0 + r1)]))
}

pub fn unit_normal(c: &Corners) -> Option<Vector3<f64>> {
    let n = (c[1] - c[0]).cross(&(c[2] - c[0]));
    let len = n.norm();
    (len > 0.0 && len.is_finite()).then(|| n / len)
}

fn corner_matrix(c: &Corners) -> Matrix3<f64> {
    Matrix3::from_columns(c)
}

/// `F = [x0 x1 x2] φ + n n̄ᵀ`.
pub fn deformation_gradient(rest: &Corners, deformed: &Corners) -> Result<Matrix3<f64>, FemError> {
    let phi = face_projection(rest)?;
    let rest_normal = unit_normal(rest).ok_or(FemError::DegenerateFace { face: None })?;
    let normal = unit_normal(deformed).ok_or(FemError::DegenerateDeformed { face: None })?;
    Ok(corner_matrix(deformed) * phi + normal * rest_normal.transpose())
}

pub fn green_strain(f: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (f.transpose() * f - Matrix3::identity())
}

/// `thickness · area · (μ‖E‖²_F + λ/2 · tr(E)²)` with `E = ½(FᵀF − I)`.
pub fn stvk_energy(f: &Matrix3<f64>, material: &MaterialParams, area: f64) -> f64 {
    let (mu, lambda) = material.lame();
    let e = green_strain(f);
    let tr = e.trace();
    material.thickness * area * (mu * e.norm_squared() + 0.5 * lambda * tr * tr)
}

/// Rest-state data shared by the energy, gradient and Hessian of one face.
#[derive(Debug, Clone, Copy)]
pub struct MembraneElement {
    pub phi: Matrix3<f64>,
    pub rest_normal: Vector3<f64>,
    pub rest_edges: [Vector3<f64>; 2],
    pub area: f64,
}

impl MembraneElement {
    pub fn new(rest: &Corners) -> Result<Self, FemError> {
        let phi = face_projection(rest)?;
        let e1 = rest[1] - rest[0];
        let e2 = rest[2] - rest[0];
        let cross = e1.cross(&e2);
        Ok(Self { phi, rest_normal: cross.normalize(), rest_edges: [e1, e2], area: 0.5 * cross.norm() })
    }

    pub fn deformation_gradient(&self, deformed: &Corners) -> Result<Matrix3<f64>, FemError> {
        let n = unit_normal(deformed).ok_or(FemError::DegenerateDeformed { face: None })?;
        Ok(corner_matrix(deformed) * self.phi + n * self.rest_normal.transpose())
    }

    pub fn energy(&self, deformed: &Corners, material: &MaterialParams) -> Result<f64, FemError> {
        Ok(stvk_energy(&self.deformation_gradient(deformed)?, material, self.area))
    }

    /// Gradient of the energy with respect to the nine corner coordinates.
    pub fn gradient(&self, deformed: &Corners, material: &MaterialParams) -> Result<ElementVector, FemError> {
        let (mu, lambda) = material.lame();
        let f = self.deformation_gradient(deformed)?;
        let e = green_strain(&f);
        let s = 2.0 * mu * e + lambda * e.trace() * Matrix3::identity();
        let p = material.thickness * self.area * f * s;

        let in_plane = p * self.phi.transpose();
        let mut g = [in_plane.column(0).into_owned(), in_plane.column(1).into_owned(), in_plane.column(2).into_owned()];

        let e1 = deformed[1] - deformed[0];
        let e2 = deformed[2] - deformed[0];
        let c = e1.cross(&e2);
        let len = c.norm();
        let n = c / len;
        let pn = p * self.rest_normal;
        let w = (pn - n * n.dot(&pn)) / len;
        let g1 = e2.cross(&w);
        let g2 = w.cross(&e1);
        g[1] += g1;
        g[2] += g2;
        g[0] -= g1 + g2;

        Ok(ElementVector::from_iterator(g.iter().flat_map(|v| v.iter().copied())))
    }

    /// Linearized deformation gradient increment `δF(δx)` at the rest state.
    pub fn linearized_gradient(&self, delta: &Corners) -> Matrix3<f64> {
        let [e1, e2] = self.rest_edges;
        let c = e1.cross(&e2);
        let len = c.norm();
        let n = self.rest_normal;
        let de1 = delta[1] - delta[0];
        let de2 = delta[2] - delta[0];
        let dc = de1.cross(&e2) + e1.cross(&de2);
        let dn = (dc - n * n.dot(&dc)) / len;
        corner_matrix(delta) * self.phi + dn * n.transpose()
    }

    /// Exact Hessian at the rest configuration, where `F = I` and the
    /// first Piola stress vanishes: `hA · (2μ sym(δF):sym(δF) + λ tr(δF)²)`.
    pub fn rest_hessian(&self, material: &MaterialParams) -> ElementMatrix {
        let (mu, lambda) = material.lame();
        let scale = material.thickness * self.area;
        let strains: Vec<Matrix3<f64>> = (0..9)
            .map(|k| {
                let mut d = [Vector3::zeros(); 3];
                d[k / 3][k % 3] = 1.0;
                let df = self.linearized_gradient(&d);
                0.5 * (df + df.transpose())
            })
            .collect();
        let mut h = ElementMatrix::zeros();
        for a in 0..9 {
            for b in a..9 {
                let v = scale
                    * (2.0 * mu * strains[a].component_mul(&strains[b]).sum()
                        + lambda * strains[a].trace() * strains[b].trace());
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        h
    }
}
