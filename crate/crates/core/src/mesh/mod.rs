//! Triangle meshes: parametric building solids, direct DSM meshes for
//! irregular buildings, and quadric-error simplification.

mod dsm;
mod model;
mod simplify;

pub use crate::decompose::iou_rects_vs_mask;
pub use dsm::{dsm_to_mesh, irregular_mesh};
pub use model::model_to_mesh;
pub use simplify::{simplify_mesh, DEFAULT_MAX_FACES};

use std::collections::HashMap;

use serde::Serialize;

pub const IRREGULAR_IOU: f64 = 0.65;
pub const IRREGULAR_AREA_PX: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularity {
    Regular,
    Irregular,
}

/// A building is meshed from the DSM when its rectangles explain the
/// footprint poorly and it is large.
pub fn irregular_decision(iou: f64, area_px: usize, iou_thresh: f64, area_thresh: usize) -> Regularity {
    if iou < iou_thresh && area_px > area_thresh {
        Regularity::Irregular
    } else {
        Regularity::Regular
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl TriMesh {
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Twice the area vector of a face.
    pub fn face_normal(&self, f: usize) -> [f64; 3] {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        cross(sub(b, a), sub(c, a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * norm(self.face_normal(f))
    }

    /// Every edge is used by exactly two faces, once in each direction.
    pub fn is_watertight(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Positive when faces wind counter-clockwise seen from outside.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    pub fn flip(&mut self) {
        for f in &mut self.faces {
            f.swap(1, 2);
        }
    }

    pub fn bbox(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                [lo[0].min(v[0]), lo[1].min(v[1]), lo[2].min(v[2])],
                [hi[0].max(v[0]), hi[1].max(v[1]), hi[2].max(v[2])],
            )
        }))
    }

    /// Indices in range and no zero-area faces.
    pub fn is_valid(&self) -> bool {
        let n = self.vertices.len();
        self.faces.iter().all(|f| f.iter().all(|&i| i < n))
            && (0..self.faces.len()).all(|f| self.face_area(f) > 1e-12)
    }

    pub fn append(&mut self, other: &TriMesh) {
        let off = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces.extend(other.faces.iter().map(|f| f.map(|i| i + off)));
    }

    /// Drop vertices no face refers to.
    pub fn compact(&mut self) {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        for f in &mut self.faces {
            for i in f.iter_mut() {
                if remap[*i] == usize::MAX {
                    remap[*i] = verts.len();
                    verts.push(self.vertices[*i]);
                }
                *i = remap[*i];
            }
        }
        self.vertices = verts;
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let used: std::collections::HashSet<usize> = self.faces.iter().flatten().copied().collect();
        used.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }
}
