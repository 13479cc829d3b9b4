//! Triangle mesh container, per-face frames and bending hinges.

mod obj;
pub mod primitives;

use std::collections::{HashMap, VecDeque};

use nalgebra::Vector3;
use thiserror::Error;

pub use obj::{load_obj, parse_obj, write_obj, write_obj_file};

/// Degenerate-face threshold relative to the squared bounding-box diagonal.
pub const AREA_EPSILON_FACTOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: i64, count: usize },
    #[error("mesh has no faces")]
    Empty,
    #[error("face {face} is degenerate (area {area:e} below {epsilon:e})")]
    DegenerateFace { face: usize, area: f64, epsilon: f64 },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("edge ({0}, {1}) is shared by more than two faces")]
    NonManifoldEdge(usize, usize),
    #[error("mesh is not orientable (conflict at face {face})")]
    NonOrientable { face: usize },
    #[error("vertex {0} is not referenced by any face")]
    UnreferencedVertex(usize),
}

/// An undirected mesh edge with its (one or two) incident faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub faces: [usize; 2],
    pub face_count: u8,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.face_count == 1
    }
}

/// An open or closed orientable 2-manifold triangle mesh.
///
/// Construction validates indices, rejects degenerate faces and non-manifold
/// edges, and makes the winding consistent within each connected component.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    positions: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// `face_edges[f][i]` is the edge between corners `i` and `i + 1`.
    face_edges: Vec<[usize; 3]>,
    face_component: Vec<usize>,
    component_count: usize,
}

impl TriangleMesh {
    pub fn new(positions: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = positions.len();
        let mut referenced = vec![false; n];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange { face: fi, index: v as i64, count: n });
                }
                referenced[v] = true;
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::RepeatedVertex { face: fi });
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(MeshError::UnreferencedVertex(v));
        }

        let epsilon = area_epsilon(&positions);
        for (fi, f) in faces.iter().enumerate() {
            let area = triangle_area(&positions[f[0]], &positions[f[1]], &positions[f[2]]);
            if !(area >= epsilon) {
                return Err(MeshError::DegenerateFace { face: fi, area, epsilon });
            }
        }

        let mut faces = faces;
        let (edges, mut face_edges) = build_edges(&faces)?;
        let (face_component, component_count) = orient_faces(&mut faces, &edges, &mut face_edges)?;

        Ok(Self { positions, faces, edges, face_edges, face_component, component_count })
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn face_component(&self) -> &[usize] {
        &self.face_component
    }

    /// Component id of every vertex.
    pub fn vertex_components(&self) -> Vec<usize> {
        let mut out = vec![0; self.vertex_count()];
        for (f, tri) in self.faces.iter().enumerate() {
            for &v in tri {
                out[v] = self.face_component[f];
            }
        }
        out
    }

    pub fn corners(&self, face: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.positions[a], self.positions[b], self.positions[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.corners(face);
        triangle_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.face_count()).map(|f| self.face_area(f)).sum()
    }

    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        bounding_box(&self.positions)
    }

    pub fn area_epsilon(&self) -> f64 {
        area_epsilon(&self.positions)
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edges.len() as i64 + self.face_count() as i64
    }

    /// Applies `map` to every position; connectivity is kept.
    pub fn map_positions(&self, map: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Result<Self, MeshError> {
        Self::new(self.positions.iter().map(map).collect(), self.faces.clone())
    }

    /// One round of 1→4 midpoint subdivision.
    pub fn subdivided(&self) -> Self {
        let mut positions = self.positions.clone();
        let base = positions.len();
        positions
            .extend(self.edges.iter().map(|e| 0.5 * (self.positions[e.vertices[0]] + self.positions[e.vertices[1]])));
        let mut faces = Vec::with_capacity(4 * self.faces.len());
        for (f, &[a, b, c]) in self.faces.iter().enumerate() {
            let [eab, ebc, eca] = self.face_edges[f].map(|e| base + e);
            faces.push([a, eab, eca]);
            faces.push([eab, b, ebc]);
            faces.push([eca, ebc, c]);
            faces.push([eab, ebc, eca]);
        }
        Self::new(positions, faces).expect("midpoint subdivision of a valid mesh is valid")
    }
}

pub fn triangle_area(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn bounding_box(points: &[Vector3<f64>]) -> (Vector3<f64>, Vector3<f64>) {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

pub fn area_epsilon(points: &[Vector3<f64>]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (lo, hi) = bounding_box(points);
    AREA_EPSILON_FACTOR * (hi - lo).norm_squared()
}

fn build_edges(faces: &[[usize; 3]]) -> Result<(Vec<Edge>, Vec<[usize; 3]>), MeshError> {
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 2);
    let mut edges: Vec<Edge> = Vec::with_capacity(faces.len() * 2);
    let mut face_edges = vec![[0usize; 3]; faces.len()];
    for (fi, f) in faces.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (f[i], f[(i + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let ei = *index.entry(key).or_insert_with(|| {
                edges.push(Edge { vertices: [key.0, key.1], faces: [usize::MAX; 2], face_count: 0 });
                edges.len() - 1
            });
            let e = &mut edges[ei];
            if e.face_count == 2 {
                return Err(MeshError::NonManifoldEdge(key.0, key.1));
            }
            e.faces[e.face_count as usize] = fi;
            e.face_count += 1;
            face_edges[fi][i] = ei;
        }
    }
    Ok((edges, face_edges))
}

/// Whether `face` traverses the edge `a → b` in its winding order.
fn has_directed_edge(face: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|i| face[i] == a && face[(i + 1) % 3] == b)
}

/// BFS over face adjacency flipping faces to agree with the first face of
/// their component. Returns per-face component ids.
fn orient_faces(
    faces: &mut [[usize; 3]],
    edges: &[Edge],
    face_edges: &mut [[usize; 3]],
) -> Result<(Vec<usize>, usize), MeshError> {
    let nf = faces.len();
    let mut component = vec![usize::MAX; nf];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for seed in 0..nf {
        if component[seed] != usize::MAX {
            continue;
        }
        component[seed] = count;
        queue.push_back(seed);
        while let Some(f) = queue.pop_front() {
            for i in 0..3 {
                let e = &edges[face_edges[f][i]];
                if e.face_count < 2 {
                    continue;
                }
                let g = if e.faces[0] == f { e.faces[1] } else { e.faces[0] };
                let (a, b) = (faces[f][i], faces[f][(i + 1) % 3]);
                let consistent = has_directed_edge(&faces[g], b, a);
                if component[g] == usize::MAX {
                    if !consistent {
                        faces[g].swap(1, 2);
                        face_edges[g].swap(0, 2);
                    }
                    component[g] = count;
                    queue.push_back(g);
                } else if !consistent {
                    return Err(MeshError::NonOrientable { face: g });
                }
            }
        }
        count += 1;
    }
    Ok((component, count))
}

/// Orthonormal tangent frame, unit normal and area of one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub t1: Vector3<f64>,
    pub t2: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub area: f64,
}

impl FaceFrame {
    pub fn from_corners(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Self {
        let e1 = b - a;
        let cross = e1.cross(&(c - a));
        let area = 0.5 * cross.norm();
        let normal = cross.normalize();
        let t1 = e1.normalize();
        let t2 = normal.cross(&t1);
        Self { t1, t2, normal, area }
    }

    /// Expresses a world vector in the (t1, t2) tangent basis.
    pub fn to_tangent(&self, v: &Vector3<f64>) -> nalgebra::Vector2<f64> {
        nalgebra::Vector2::new(self.t1.dot(v), self.t2.dot(v))
    }

    pub fn to_world(&self, v: &nalgebra::Vector2<f64>) -> Vector3<f64> {
        self.t1 * v.x + self.t2 * v.y
    }
}

pub fn build_face_frames(mesh: &TriangleMesh) -> Result<Vec<FaceFrame>, MeshError> {
    let epsilon = mesh.area_epsilon();
    (0..mesh.face_count())
        .map(|f| {
            let [a, b, c] = mesh.corners(f);
            let frame = FaceFrame::from_corners(&a, &b, &c);
            if !(frame.area >= epsilon) {
                return Err(MeshError::DegenerateFace { face: f, area: frame.area, epsilon });
            }
            Ok(frame)
        })
        .collect()
}

/// Interior edge with its two incident faces and rest dihedral angle.
///
/// `faces[0]` winds `vertices[0] → vertices[1]`, `faces[1]` winds the edge the
/// other way; `opposite[i]` is the corner of `faces[i]` not on the edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeHinge {
    pub vertices: [usize; 2],
    pub faces: [usize; 2],
    pub opposite: [usize; 2],
    pub rest_angle: f64,
    pub length: f64,
    /// One third of the summed incident face areas.
    pub area: f64,
}

impl EdgeHinge {
    /// The four stencil vertices in the order (edge start, edge end, opposite 0, opposite 1).
    pub fn stencil(&self) -> [usize; 4] {
        [self.vertices[0], self.vertices[1], self.opposite[0], self.opposite[1]]
    }
}

/// Signed dihedral angle of the hinge `x0 → x1` with wings `x2` (face 0) and `x3` (face 1).
pub fn dihedral_angle(x: &[Vector3<f64>; 4]) -> f64 {
    let e = x[1] - x[0];
    let n0 = e.cross(&(x[2] - x[0]));
    let n1 = (x[3] - x[0]).cross(&e);
    let sin = n0.cross(&n1).dot(&e) / e.norm();
    let cos = n0.dot(&n1);
    sin.atan2(cos)
}

pub fn build_hinges(mesh: &TriangleMesh) -> Vec<EdgeHinge> {
    let faces = mesh.faces();
    mesh.edges()
        .iter()
        .filter(|e| e.face_count == 2)
        .map(|e| {
            let [a, b] = e.vertices;
            let (f0, f1) = if has_directed_edge(&faces[e.faces[0]], a, b) {
                (e.faces[0], e.faces[1])
            } else {
                (e.faces[1], e.faces[0])
            };
            let opp = |f: usize| *faces[f].iter().find(|&&v| v != a && v != b).unwrap();
            let opposite = [opp(f0), opp(f1)];
            let p = mesh.positions();
            let x = [p[a], p[b], p[opposite[0]], p[opposite[1]]];
            EdgeHinge {
                vertices: [a, b],
                faces: [f0, f1],
                opposite,
                rest_angle: dihedral_angle(&x),
                length: (x[1] - x[0]).norm(),
                area: (mesh.face_area(f0) + mesh.face_area(f1)) / 3.0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    fn right_triangle() -> TriangleMesh {
        TriangleMesh::new(vec![v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.)], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn frame_of_right_triangle() {
        let mesh = right_triangle();
        let frames = build_face_frames(&mesh).unwrap();
        assert_eq!(frames.len(), 1);
        assert!((frames[0].area - 0.5).abs() < 1e-15);
        assert!((frames[0].normal - v(0., 0., 1.)).norm() < 1e-15);
    }

    #[test]
    fn flipped_winding_flips_normal() {
        let mesh = TriangleMesh::new(vec![v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.)], vec![[0, 2, 1]]).unwrap();
        let frames = build_face_frames(&mesh).unwrap();
        assert!((frames[0].normal - v(0., 0., -1.)).norm() < 1e-15);
    }

    #[test]
    fn frames_are_orthonormal() {
        let mesh = primitives::icosphere(3, 1.0);
        for fr in build_face_frames(&mesh).unwrap() {
            for (a, b) in [(fr.t1, fr.t2), (fr.t1, fr.normal), (fr.t2, fr.normal)] {
                assert!(a.dot(&b).abs() < 1e-12);
            }
            for x in [fr.t1, fr.t2, fr.normal] {
                assert!((x.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_scales_areas_quadratically() {
        let mesh = primitives::icosphere(2, 1.0);
        let big = mesh.map_positions(|p| 2.0 * p).unwrap();
        for f in 0..mesh.face_count() {
            assert!((big.face_area(f) - 4.0 * mesh.face_area(f)).abs() < 1e-12);
        }
    }

    #[test]
    fn rigid_motion_preserves_total_area() {
        let mesh = primitives::torus(1.0, 0.3, 24, 12);
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let moved = mesh.map_positions(|p| rot * p + v(3.0, -2.0, 0.5)).unwrap();
        let (a, b) = (mesh.total_area(), moved.total_area());
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn flat_hinge_has_zero_angle() {
        let mesh = primitives::grid(1, 1, 1.0, 1.0);
        let hinges = build_hinges(&mesh);
        assert_eq!(hinges.len(), 1);
        assert!(hinges[0].rest_angle.abs() < 1e-15);
    }

    #[test]
    fn single_triangle_has_no_hinges() {
        assert!(build_hinges(&right_triangle()).is_empty());
    }

    #[test]
    fn tetrahedron_has_six_hinges() {
        let mesh = primitives::tetrahedron();
        // brute-force edge enumeration over face corner pairs
        let mut seen = HashSet::new();
        for f in mesh.faces() {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        seen.insert((f[i].min(f[j]), f[i].max(f[j])));
                    }
                }
            }
        }
        assert_eq!(seen.len(), 6);
        let hinges = build_hinges(&mesh);
        assert_eq!(hinges.len(), 6);
        // convex closed surface: all dihedrals share a sign and lie in (−π, π)
        let s = hinges[0].rest_angle.signum();
        for h in &hinges {
            assert!(h.rest_angle.abs() < std::f64::consts::PI);
            assert_eq!(h.rest_angle.signum(), s);
        }
    }

    #[test]
    fn hinge_count_matches_edge_map_oracle() {
        for mesh in
            [primitives::grid(7, 4, 2.0, 1.0), primitives::icosphere(4, 1.0), primitives::torus(2.0, 0.5, 16, 9)]
        {
            let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
            for f in mesh.faces() {
                for i in 0..3 {
                    let (a, b) = (f[i], f[(i + 1) % 3]);
                    *counts.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            let interior = counts.values().filter(|&&c| c == 2).count();
            assert_eq!(build_hinges(&mesh).len(), interior);
        }
    }

    #[test]
    fn euler_characteristic_of_known_genus() {
        assert_eq!(primitives::icosphere(5, 1.0).euler_characteristic(), 2);
        assert_eq!(primitives::tetrahedron().euler_characteristic(), 2);
        assert_eq!(primitives::torus(1.0, 0.25, 20, 10).euler_characteristic(), 0);
        assert_eq!(primitives::grid(5, 3, 1.0, 1.0).euler_characteristic(), 1);
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let p = vec![v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.), v(0., -1., 0.), v(0., 0., 1.)];
        let err = TriangleMesh::new(p, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge(0, 1)));
    }

    #[test]
    fn rejects_degenerate_face() {
        let p = vec![v(0., 0., 0.), v(1., 0., 0.), v(2., 0., 0.), v(0., 1., 0.)];
        let err = TriangleMesh::new(p, vec![[0, 1, 2], [0, 1, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { face: 0, .. }));
    }

    #[test]
    fn reorients_inconsistent_winding() {
        let mesh = primitives::grid(3, 3, 1.0, 1.0);
        let mut faces = mesh.faces().to_vec();
        faces[4].swap(0, 1);
        let fixed = TriangleMesh::new(mesh.positions().to_vec(), faces).unwrap();
        for fr in build_face_frames(&fixed).unwrap() {
            assert!(fr.normal.z > 0.0);
        }
    }

    #[test]
    fn rejects_mobius_strip() {
        let n = 12;
        let mut p = Vec::new();
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            for s in [-0.3, 0.3] {
                let (c, si) = ((t / 2.0).cos(), (t / 2.0).sin());
                let r = 1.0 + s * c;
                p.push(v(r * t.cos(), r * t.sin(), s * si));
            }
        }
        let mut faces = Vec::new();
        for i in 0..n {
            let (a, b) = (2 * i, 2 * i + 1);
            let (c, d) = if i + 1 < n { (2 * (i + 1), 2 * (i + 1) + 1) } else { (1, 0) };
            faces.push([a, c, b]);
            faces.push([b, c, d]);
        }
        assert!(matches!(TriangleMesh::new(p, faces), Err(MeshError::NonOrientable { .. })));
    }

    #[test]
    fn components_are_counted() {
        let a = primitives::grid(2, 2, 1.0, 1.0);
        let mut p = a.positions().to_vec();
        let off = p.len();
        p.extend(a.positions().iter().map(|q| q + v(5., 0., 0.)));
        let mut f = a.faces().to_vec();
        f.extend(a.faces().iter().map(|t| t.map(|i| i + off)));
        let two = TriangleMesh::new(p, f).unwrap();
        assert_eq!(two.component_count(), 2);
    }

    #[test]
    fn subdivision_preserves_area_and_quadruples_faces() {
        let mesh = primitives::grid(4, 2, 2.0, 1.0);
        let sub = mesh.subdivided();
        assert_eq!(sub.face_count(), 4 * mesh.face_count());
        assert!((sub.total_area() - mesh.total_area()).abs() < 1e-12);
    }
}
