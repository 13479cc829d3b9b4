//! Procedural meshes used by tests, examples and the bundled data files.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use super::TriangleMesh;

/// Rectangle `[0, width] × [0, height]` in the z = 0 plane split into
/// `nx × ny` cells, each cut into two triangles with alternating diagonals.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> TriangleMesh {
    assert!(nx > 0 && ny > 0);
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Vector3::new(width * i as f64 / nx as f64, height * j as f64 / ny as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    TriangleMesh::new(positions, faces).expect("grid is a valid mesh")
}

/// Geodesic sphere: an icosahedron with vertices on the ±z poles whose faces
/// are split into `frequency²` triangles and projected to the sphere.
/// Has `20 · frequency²` faces.
pub fn icosphere(frequency: usize, radius: f64) -> TriangleMesh {
    assert!(frequency > 0);
    let z = 1.0 / 5f64.sqrt();
    let rho = 2.0 * z;
    let mut base = vec![Vector3::new(0.0, 0.0, 1.0)];
    for k in 0..5 {
        let t = TAU * k as f64 / 5.0;
        base.push(Vector3::new(rho * t.cos(), rho * t.sin(), z));
    }
    for k in 0..5 {
        let t = TAU * k as f64 / 5.0 + PI / 5.0;
        base.push(Vector3::new(rho * t.cos(), rho * t.sin(), -z));
    }
    base.push(Vector3::new(0.0, 0.0, -1.0));
    let (top, bottom) = (0, 11);
    let up = |k: usize| 1 + k % 5;
    let lo = |k: usize| 6 + k % 5;
    let mut coarse = Vec::with_capacity(20);
    for k in 0..5 {
        coarse.push([top, up(k), up(k + 1)]);
        coarse.push([up(k), lo(k), up(k + 1)]);
        coarse.push([up(k + 1), lo(k), lo(k + 1)]);
        coarse.push([bottom, lo(k + 1), lo(k)]);
    }

    let n = frequency;
    let mut positions: Vec<Vector3<f64>> = Vec::new();
    let mut lookup: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertex = |p: Vector3<f64>| -> usize {
        let q = p.normalize();
        let key = [q.x, q.y, q.z].map(|c| (c * 1e9).round() as i64);
        *lookup.entry(key).or_insert_with(|| {
            positions.push(q * radius);
            positions.len() - 1
        })
    };
    let mut faces = Vec::with_capacity(20 * n * n);
    for [a, b, c] in coarse {
        let (pa, pb, pc) = (base[a], base[b], base[c]);
        let point = |i: usize, j: usize| {
            // i steps towards b, j towards c
            let (fi, fj) = (i as f64 / n as f64, j as f64 / n as f64);
            pa * (1.0 - fi - fj) + pb * fi + pc * fj
        };
        let mut idx = vec![vec![0usize; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=(n - i) {
                idx[i][j] = vertex(point(i, j));
            }
        }
        for i in 0..n {
            for j in 0..(n - i) {
                faces.push([idx[i][j], idx[i + 1][j], idx[i][j + 1]]);
                if i + j + 1 < n {
                    faces.push([idx[i + 1][j], idx[i + 1][j + 1], idx[i][j + 1]]);
                }
            }
        }
    }
    TriangleMesh::new(positions, faces).expect("icosphere is a valid mesh")
}

/// Torus around the z axis with tube radius `minor`.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriangleMesh {
    assert!(nu >= 3 && nv >= 3);
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            positions.push(Vector3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(positions, faces).expect("torus is a valid mesh")
}

pub fn tetrahedron() -> TriangleMesh {
    let positions = vec![
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -1.0, -1.0),
        Vector3::new(-1.0, 1.0, -1.0),
        Vector3::new(-1.0, -1.0, 1.0),
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriangleMesh::new(positions, faces).expect("tetrahedron is a valid mesh")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for n in [1, 2, 3, 7] {
            let m = icosphere(n, 1.0);
            assert_eq!(m.face_count(), 20 * n * n);
            assert_eq!(m.vertex_count(), 10 * n * n + 2);
            assert_eq!(m.boundary_edge_count(), 0);
        }
    }

    #[test]
    fn icosphere_has_pole_vertices_and_outward_normals() {
        let m = icosphere(4, 2.0);
        assert!(m.positions().iter().any(|p| (p - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-12));
        assert!(m.positions().iter().any(|p| (p - Vector3::new(0.0, 0.0, -2.0)).norm() < 1e-12));
        for f in 0..m.face_count() {
            let [a, b, c] = m.corners(f);
            let n = (b - a).cross(&(c - a));
            assert!(n.dot(&(a + b + c)) > 0.0);
        }
    }

    #[test]
    fn grid_normals_point_up() {
        let m = grid(3, 2, 3.0, 2.0);
        for f in 0..m.face_count() {
            let [a, b, c] = m.corners(f);
            assert!((b - a).cross(&(c - a)).z > 0.0);
        }
        assert!((m.total_area() - 6.0).abs() < 1e-12);
    }
}
