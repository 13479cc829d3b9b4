//! Adaptive red refinement of multiply-crossed faces with green closure.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::crossings::count_crossings;
use crate::mesh::TriangleMesh;
use crate::stripes::StripeField;

/// Conforming refinement of the input with interpolated mode values.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedMesh {
    pub positions: Vec<Vector3<f64>>,
    /// `[υ, ω]` per vertex.
    pub values: Vec<[f64; 2]>,
    pub faces: Vec<[usize; 3]>,
    /// Input face each refined face descends from.
    pub source: Vec<usize>,
    pub depth: Vec<u32>,
    /// Faces still crossed more than once by some family at `max_depth`.
    pub unresolved: usize,
}

impl RefinedMesh {
    pub fn face_values(&self, face: usize, family: usize) -> [f64; 3] {
        self.faces[face].map(|v| self.values[v][family])
    }

    pub fn total_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| crate::mesh::triangle_area(&self.positions[f[0]], &self.positions[f[1]], &self.positions[f[2]]))
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Leaf {
    v: [usize; 3],
    depth: u32,
    source: usize,
}

struct Builder<'a> {
    field: &'a StripeField,
    positions: Vec<Vector3<f64>>,
    values: Vec<[f64; 2]>,
    mids: HashMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Builder<'_> {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        if let Some(&m) = self.mids.get(&key(a, b)) {
            return m;
        }
        let m = self.positions.len();
        self.positions.push(0.5 * (self.positions[a] + self.positions[b]));
        let (va, vb) = (self.values[a], self.values[b]);
        self.values.push([0.5 * (va[0] + vb[0]), 0.5 * (va[1] + vb[1])]);
        self.mids.insert(key(a, b), m);
        m
    }

    fn multiply_crossed(&self, leaf: &Leaf) -> bool {
        let u = leaf.v.map(|i| self.values[i][0]);
        let w = leaf.v.map(|i| self.values[i][1]);
        count_crossings(&self.field.major(), u) > 1 || count_crossings(&self.field.minor(), w) > 1
    }

    fn red(&mut self, leaf: &Leaf, out: &mut Vec<Leaf>) {
        let [a, b, c] = leaf.v;
        let (ab, bc, ca) = (self.midpoint(a, b), self.midpoint(b, c), self.midpoint(c, a));
        let depth = leaf.depth + 1;
        for v in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            out.push(Leaf { v, depth, source: leaf.source });
        }
    }

    /// Hanging midpoints per edge `(v[k], v[k+1])`, and whether any edge is
    /// split more than once.
    fn hanging(&self, leaf: &Leaf) -> ([Option<usize>; 3], bool) {
        let mut mids = [None; 3];
        let mut nested = false;
        for k in 0..3 {
            let (a, b) = (leaf.v[k], leaf.v[(k + 1) % 3]);
            if let Some(&m) = self.mids.get(&key(a, b)) {
                mids[k] = Some(m);
                nested |= self.mids.contains_key(&key(a, m)) || self.mids.contains_key(&key(m, b));
            }
        }
        (mids, nested)
    }
}

/// Splits faces crossed more than once by either family until every face is
/// crossed at most once per family or reaches `max_depth`.
pub fn adaptive_subdivide(mesh: &TriangleMesh, field: &StripeField, max_depth: u32) -> RefinedMesh {
    let mut builder = Builder {
        field,
        positions: mesh.positions().to_vec(),
        values: field.upsilon.iter().zip(&field.omega).map(|(&u, &w)| [u, w]).collect(),
        mids: HashMap::new(),
    };
    let mut leaves: Vec<Leaf> =
        mesh.faces().iter().enumerate().map(|(source, &v)| Leaf { v, depth: 0, source }).collect();

    loop {
        let mut next = Vec::with_capacity(leaves.len());
        let mut refined = false;
        for leaf in &leaves {
            if leaf.depth < max_depth && builder.multiply_crossed(leaf) {
                builder.red(leaf, &mut next);
                refined = true;
            } else {
                next.push(*leaf);
            }
        }
        leaves = next;
        if !refined {
            break;
        }
    }

    // closure: at most one hanging midpoint per face
    loop {
        let mut next = Vec::with_capacity(leaves.len());
        let mut refined = false;
        for leaf in &leaves {
            let (mids, nested) = builder.hanging(leaf);
            if nested || mids.iter().flatten().count() >= 2 {
                builder.red(leaf, &mut next);
                refined = true;
            } else {
                next.push(*leaf);
            }
        }
        leaves = next;
        if !refined {
            break;
        }
    }

    let unresolved = leaves.iter().filter(|l| l.depth >= max_depth && builder.multiply_crossed(l)).count();
    if unresolved > 0 {
        log::warn!("{unresolved} faces still crossed more than once at max depth {max_depth}");
    }

    let mut faces = Vec::with_capacity(leaves.len());
    let mut source = Vec::with_capacity(leaves.len());
    let mut depth = Vec::with_capacity(leaves.len());
    for leaf in &leaves {
        let (mids, _) = builder.hanging(leaf);
        match mids.iter().position(Option::is_some) {
            Some(k) => {
                let m = mids[k].unwrap();
                let (a, b, o) = (leaf.v[k], leaf.v[(k + 1) % 3], leaf.v[(k + 2) % 3]);
                faces.extend([[a, m, o], [m, b, o]]);
                source.extend([leaf.source; 2]);
                depth.extend([leaf.depth; 2]);
            }
            None => {
                faces.push(leaf.v);
                source.push(leaf.source);
                depth.push(leaf.depth);
            }
        }
    }
    RefinedMesh { positions: builder.positions, values: builder.values, faces, source, depth, unresolved }
}
