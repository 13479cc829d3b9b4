//! Anisotropic stiffness `L` and lumped mass `M` on piecewise-linear elements.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{FaceFrame, TriangleMesh};
use crate::sparse::CsrMatrix;

/// Gradients of the three hat functions of a face, in its tangent basis.
pub fn hat_gradients(frame: &FaceFrame, corners: &[nalgebra::Vector3<f64>; 3]) -> [Vector2<f64>; 3] {
    let e1 = frame.to_tangent(&(corners[1] - corners[0]));
    let e2 = frame.to_tangent(&(corners[2] - corners[0]));
    // Eᵀ [g1 g2] = I
    let e = Matrix2::from_columns(&[e1, e2]);
    let g = e.transpose().try_inverse().expect("degenerate face reached operator assembly");
    let (g1, g2) = (g.column(0).into_owned(), g.column(1).into_owned());
    [-g1 - g2, g1, g2]
}

/// `L_ij = Σ_f area_f g_iᵀ D_f g_j`.
pub fn assemble_stiffness(mesh: &TriangleMesh, frames: &[FaceFrame], tensors: &[Matrix2<f64>]) -> CsrMatrix {
    assert_eq!(frames.len(), mesh.face_count());
    assert_eq!(tensors.len(), mesh.face_count());
    let triplets: Vec<(usize, usize, f64)> = (0..mesh.face_count())
        .into_par_iter()
        .flat_map_iter(|f| {
            let g = hat_gradients(&frames[f], &mesh.corners(f));
            let d = tensors[f];
            let area = frames[f].area;
            let verts = mesh.faces()[f];
            let mut out = Vec::with_capacity(9);
            for a in 0..3 {
                let dg = d * g[a];
                for b in 0..3 {
                    out.push((verts[a], verts[b], area * g[b].dot(&dg)));
                }
            }
            out
        })
        .collect();
    CsrMatrix::from_symmetric_triplets(mesh.vertex_count(), triplets)
}

/// Isotropic stiffness (`D = I` on every face).
pub fn assemble_isotropic(mesh: &TriangleMesh, frames: &[FaceFrame]) -> CsrMatrix {
    assemble_stiffness(mesh, frames, &vec![Matrix2::identity(); mesh.face_count()])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassLumping {
    /// One third of each incident face area.
    #[default]
    Barycentric,
    /// Mixed Voronoi areas with the obtuse-triangle fallback.
    Voronoi,
}

/// Diagonal lumped mass.
pub fn assemble_mass(mesh: &TriangleMesh, lumping: MassLumping) -> Vec<f64> {
    let mut m = vec![0.0; mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let verts = mesh.faces()[f];
        let x = mesh.corners(f);
        let area = mesh.face_area(f);
        let share = match lumping {
            MassLumping::Barycentric => [area / 3.0; 3],
            MassLumping::Voronoi => voronoi_shares(&x, area),
        };
        for k in 0..3 {
            m[verts[k]] += share[k];
        }
    }
    m
}

fn voronoi_shares(x: &[nalgebra::Vector3<f64>; 3], area: f64) -> [f64; 3] {
    let edge = |i: usize, j: usize| x[j] - x[i];
    let dots: [f64; 3] = std::array::from_fn(|i| edge(i, (i + 1) % 3).dot(&edge(i, (i + 2) % 3)));
    if let Some(obtuse) = dots.iter().position(|&d| d < 0.0) {
        let mut s = [area / 4.0; 3];
        s[obtuse] = area / 2.0;
        return s;
    }
    // cot at corner i = dot / |cross| = dot / (2A)
    let cot: [f64; 3] = std::array::from_fn(|i| dots[i] / (2.0 * area));
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (edge(i, j).norm_squared() * cot[k] + edge(i, k).norm_squared() * cot[j]) / 8.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_face_frames, primitives};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn cotan_oracle(mesh: &TriangleMesh) -> CsrMatrix {
        let mut t = Vec::new();
        for f in mesh.faces() {
            for k in 0..3 {
                let (i, j, o) = (f[(k + 1) % 3], f[(k + 2) % 3], f[k]);
                let p = mesh.positions();
                let (u, v) = (p[i] - p[o], p[j] - p[o]);
                let w = 0.5 * u.dot(&v) / u.cross(&v).norm();
                t.extend([(i, j, -w), (j, i, -w), (i, i, w), (j, j, w)]);
            }
        }
        CsrMatrix::from_triplets(mesh.vertex_count(), t)
    }

    #[test]
    fn identity_tensor_matches_cotan_laplacian() {
        for mesh in
            [primitives::icosphere(3, 1.3), primitives::grid(5, 4, 2.0, 1.0), primitives::torus(2.0, 0.6, 12, 8)]
        {
            let frames = build_face_frames(&mesh).unwrap();
            let l = assemble_isotropic(&mesh, &frames);
            let o = cotan_oracle(&mesh);
            let diff = l.add(&o.scaled(-1.0));
            assert!(diff.max_abs() <= 1e-10 * o.max_abs());
            let ones = vec![1.0; mesh.vertex_count()];
            assert!(l.mul_vec(&ones).iter().all(|v| v.abs() <= 1e-12 * l.max_abs()));
            assert_eq!(l.asymmetry(), 0.0);
        }
    }

    #[test]
    fn one_element_hand_calculation() {
        let mesh = TriangleMesh::new(
            vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let frames = build_face_frames(&mesh).unwrap();
        let r = 7.0;
        let l = assemble_stiffness(&mesh, &frames, &[Matrix2::new(1.0, 0.0, 0.0, r)]);
        // gradients (-1,-1), (1,0), (0,1); area 1/2
        assert_relative_eq!(l.get(0, 0), 0.5 * (1.0 + r), epsilon = 1e-14);
        assert_relative_eq!(l.get(1, 1), 0.5, epsilon = 1e-14);
        assert_relative_eq!(l.get(2, 2), 0.5 * r, epsilon = 1e-14);
        assert_relative_eq!(l.get(0, 1), -0.5, epsilon = 1e-14);
        assert_relative_eq!(l.get(0, 2), -0.5 * r, epsilon = 1e-14);
    }

    #[test]
    fn mass_partitions_area() {
        let mesh = primitives::icosphere(3, 1.0);
        for lumping in [MassLumping::Barycentric, MassLumping::Voronoi] {
            let m = assemble_mass(&mesh, lumping);
            assert!(m.iter().all(|&v| v > 0.0));
            assert_relative_eq!(m.iter().sum::<f64>(), mesh.total_area(), max_relative = 1e-10);
        }
        let grid = primitives::grid(4, 4, 4.0, 4.0);
        let m = assemble_mass(&grid, MassLumping::Barycentric);
        // interior vertex of the alternating grid touches six or eight half-unit triangles
        let interior = grid.positions().iter().position(|p| (p - Vector3::new(2.0, 2.0, 0.0)).norm() < 1e-12).unwrap();
        let incident: f64 =
            (0..grid.face_count()).filter(|&f| grid.faces()[f].contains(&interior)).map(|f| grid.face_area(f)).sum();
        assert_relative_eq!(m[interior], incident / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn voronoi_obtuse_fallback() {
        let x = [Vector3::zeros(), Vector3::new(4.0, 0.0, 0.0), Vector3::new(2.0, 0.5, 0.0)];
        let s = voronoi_shares(&x, 1.0);
        assert_eq!(s, [0.25, 0.25, 0.5]);
        let eq = [Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.5, 3f64.sqrt() / 2.0, 0.0)];
        let a = 3f64.sqrt() / 4.0;
        let s = voronoi_shares(&eq, a);
        for v in s {
            assert_relative_eq!(v, a / 3.0, epsilon = 1e-14);
        }
    }
}
