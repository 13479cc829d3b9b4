//! Cutting refined faces along level lines and discarding outside pieces.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::crossings::{argument_range, levels_between, tolerance, LevelId};
use super::subdivide::RefinedMesh;
use crate::mesh::triangle_area;
use crate::stripes::{inside, Family, StripeField};

/// Kept triangles of a refined mesh, before vertex compaction.
#[derive(Debug, Clone)]
pub struct CutResult {
    pub positions: Vec<Vector3<f64>>,
    pub values: Vec<[f64; 2]>,
    pub faces: Vec<[usize; 3]>,
    /// Refined face each kept triangle comes from.
    pub refined_face: Vec<usize>,
    pub kept_area: f64,
    pub discarded_area: f64,
}

struct Cutter<'a> {
    positions: Vec<Vector3<f64>>,
    values: Vec<[f64; 2]>,
    points: HashMap<(usize, usize, LevelId), usize>,
    families: [Family; 2],
    field: &'a StripeField,
}

impl Cutter<'_> {
    fn argument(&self, v: usize, family: usize) -> f64 {
        self.families[family].argument(self.values[v][family])
    }

    fn crossing(&mut self, p: usize, q: usize, level: LevelId, t: f64) -> usize {
        let (a, b) = (p.min(q), p.max(q));
        if let Some(&x) = self.points.get(&(a, b, level)) {
            return x;
        }
        let fam = level.family as usize;
        let (ta, tb) = (self.argument(a, fam), self.argument(b, fam));
        let l = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let x = self.positions.len();
        self.positions.push(self.positions[a] + l * (self.positions[b] - self.positions[a]));
        let (va, vb) = (self.values[a], self.values[b]);
        self.values.push([va[0] + l * (vb[0] - va[0]), va[1] + l * (vb[1] - va[1])]);
        self.points.insert((a, b, level), x);
        x
    }

    /// Splits a convex polygon by the line `t_family = t`.
    fn split(&mut self, poly: Vec<usize>, level: LevelId, t: f64, out: &mut Vec<Vec<usize>>) {
        let fam = level.family as usize;
        let tol = tolerance(t);
        let side: Vec<i8> = poly
            .iter()
            .map(|&v| {
                let tv = self.argument(v, fam);
                if tv > t + tol {
                    1
                } else if tv < t - tol {
                    -1
                } else {
                    0
                }
            })
            .collect();
        if !side.contains(&1) || !side.contains(&-1) {
            out.push(poly);
            return;
        }
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        let n = poly.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if side[i] <= 0 {
                lo.push(poly[i]);
            }
            if side[i] >= 0 {
                hi.push(poly[i]);
            }
            if side[i] * side[j] < 0 {
                let x = self.crossing(poly[i], poly[j], level, t);
                lo.push(x);
                hi.push(x);
            }
        }
        out.push(lo);
        out.push(hi);
    }

    fn is_inside(&self, poly: &[usize]) -> bool {
        let n = poly.len() as f64;
        let (mut u, mut w) = (0.0, 0.0);
        for &v in poly {
            u += self.values[v][0];
            w += self.values[v][1];
        }
        let (s1, s2) = self.field.eval_values(u / n, w / n);
        inside(s1, s2)
    }

    fn area(&self, t: [usize; 3]) -> f64 {
        triangle_area(&self.positions[t[0]], &self.positions[t[1]], &self.positions[t[2]])
    }

    /// Fan from the apex whose smallest triangle is largest.
    fn triangulate(&self, poly: &[usize]) -> Vec<[usize; 3]> {
        let n = poly.len();
        if n == 3 {
            return vec![[poly[0], poly[1], poly[2]]];
        }
        let fan = |apex: usize| -> Vec<[usize; 3]> {
            (1..n - 1).map(|i| [poly[apex], poly[(apex + i) % n], poly[(apex + i + 1) % n]]).collect()
        };
        (0..n)
            .map(|apex| {
                let tris = fan(apex);
                let worst = tris.iter().map(|&t| self.area(t)).fold(f64::INFINITY, f64::min);
                (worst, tris)
            })
            .fold((f64::NEG_INFINITY, Vec::new()), |best, cand| if cand.0 > best.0 { cand } else { best })
            .1
    }
}

/// Cuts every refined face along all level lines of both families (major
/// first), keeps pieces whose centroid is inside and drops triangles with
/// area at most `area_epsilon`.
pub fn cut_and_discard(refined: &RefinedMesh, field: &StripeField, area_epsilon: f64) -> CutResult {
    let mut cutter = Cutter {
        positions: refined.positions.clone(),
        values: refined.values.clone(),
        points: HashMap::new(),
        families: [field.major(), field.minor()],
        field,
    };
    let mut result = CutResult {
        positions: Vec::new(),
        values: Vec::new(),
        faces: Vec::new(),
        refined_face: Vec::new(),
        kept_area: 0.0,
        discarded_area: 0.0,
    };
    for (f, &face) in refined.faces.iter().enumerate() {
        let mut pieces = vec![face.to_vec()];
        for fam in 0..2 {
            let family = cutter.families[fam];
            let (lo, hi) = argument_range(&family, face.map(|v| refined.values[v][fam]));
            for (level, t) in levels_between(lo, hi, family.threshold, fam as u8) {
                let mut next = Vec::with_capacity(pieces.len() + 1);
                for piece in pieces {
                    cutter.split(piece, level, t, &mut next);
                }
                pieces = next;
            }
        }
        for piece in pieces {
            let keep = cutter.is_inside(&piece);
            for tri in cutter.triangulate(&piece) {
                let a = cutter.area(tri);
                if keep && a > area_epsilon {
                    result.faces.push(tri);
                    result.refined_face.push(f);
                    result.kept_area += a;
                } else {
                    result.discarded_area += a;
                }
            }
        }
    }
    result.positions = cutter.positions;
    result.values = cutter.values;
    result
}
