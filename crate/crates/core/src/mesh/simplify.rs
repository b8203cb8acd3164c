use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::mesh::{cross, dot, norm, sub, TriMesh};

pub const DEFAULT_MAX_FACES: usize = 1000;

/// Symmetric 4x4 quadric, upper triangle row by row.
#[derive(Debug, Clone, Copy, Default)]
struct Quadric([f64; 10]);

impl Quadric {
    fn plane(n: [f64; 3], d: f64, weight: f64) -> Self {
        let p = [n[0], n[1], n[2], d];
        let mut q = [0.0; 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                q[k] = weight * p[i] * p[j];
                k += 1;
            }
        }
        Quadric(q)
    }

    fn add(&mut self, o: &Quadric) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }

    fn error(&self, v: [f64; 3]) -> f64 {
        let q = &self.0;
        let [x, y, z] = v;
        q[0] * x * x + 2.0 * q[1] * x * y + 2.0 * q[2] * x * z + 2.0 * q[3] * x
            + q[4] * y * y
            + 2.0 * q[5] * y * z
            + 2.0 * q[6] * y
            + q[7] * z * z
            + 2.0 * q[8] * z
            + q[9]
    }
}

#[derive(Debug, Clone, Copy)]
struct Collapse {
    cost: f64,
    len2: f64,
    keep: usize,
    drop: usize,
    stamp: (u32, u32),
    pos: [f64; 3],
}

impl PartialEq for Collapse {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Collapse {}
impl PartialOrd for Collapse {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Collapse {
    // min-heap on cost; equal costs (flat regions) take the shorter edge
    // first so that no single vertex swallows a whole plane
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost
            .total_cmp(&self.cost)
            .then_with(|| o.len2.total_cmp(&self.len2))
            .then_with(|| (o.keep, o.drop).cmp(&(self.keep, self.drop)))
    }
}

struct State {
    verts: Vec<[f64; 3]>,
    faces: Vec<Option<[usize; 3]>>,
    vf: Vec<Vec<usize>>,
    quadric: Vec<Quadric>,
    stamp: Vec<u32>,
    live: usize,
}

impl State {
    /// Sorted, distinct.
    fn neighbours(&self, v: usize) -> Vec<usize> {
        let mut s = Vec::with_capacity(2 * self.vf[v].len());
        for &f in &self.vf[v] {
            if let Some(t) = self.faces[f] {
                s.extend(t.iter().copied().filter(|&i| i != v));
            }
        }
        s.sort_unstable();
        s.dedup();
        s
    }

    fn candidate(&self, a: usize, b: usize) -> Collapse {
        let (keep, drop) = (a.min(b), a.max(b));
        let mut q = self.quadric[keep];
        q.add(&self.quadric[drop]);
        let (pa, pb) = (self.verts[keep], self.verts[drop]);
        let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0];
        let (cost, pos) = [pa, pb, mid]
            .into_iter()
            .map(|p| (q.error(p).max(0.0), p))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        let d = sub(pa, pb);
        Collapse {
            cost,
            len2: dot(d, d),
            keep,
            drop,
            stamp: (self.stamp[keep], self.stamp[drop]),
            pos,
        }
    }

    /// Manifold link condition and no flipped or degenerate faces.
    fn allowed(&self, c: &Collapse) -> bool {
        let (u, v) = (c.keep, c.drop);
        let shared: Vec<usize> = self.vf[u]
            .iter()
            .filter_map(|&f| self.faces[f])
            .filter(|t| t.contains(&v))
            .map(|t| t.iter().copied().find(|&i| i != u && i != v).unwrap())
            .collect();
        let nu = self.neighbours(u);
        let nv = self.neighbours(v);
        let common = nu.iter().filter(|i| nv.binary_search(i).is_ok()).count();
        if common != shared.len() || shared.len() != 2 || self.live <= 4 {
            return false;
        }
        for &w in &[u, v] {
            for &f in &self.vf[w] {
                let Some(t) = self.faces[f] else { continue };
                if t.contains(&u) && t.contains(&v) {
                    continue;
                }
                let old = t.map(|i| self.verts[i]);
                let new = t.map(|i| if i == u || i == v { c.pos } else { self.verts[i] });
                let n0 = cross(sub(old[1], old[0]), sub(old[2], old[0]));
                let n1 = cross(sub(new[1], new[0]), sub(new[2], new[0]));
                let (l0, l1) = (norm(n0), norm(n1));
                if l1 <= 1e-12 || dot(n0, n1) <= 1e-3 * l0 * l1 {
                    return false;
                }
            }
        }
        true
    }

    fn apply(&mut self, c: &Collapse) {
        let (u, v) = (c.keep, c.drop);
        for f in std::mem::take(&mut self.vf[v]) {
            let Some(mut t) = self.faces[f] else { continue };
            if t.contains(&u) {
                self.faces[f] = None;
                self.live -= 1;
                continue;
            }
            for i in t.iter_mut() {
                if *i == v {
                    *i = u;
                }
            }
            self.faces[f] = Some(t);
            self.vf[u].push(f);
        }
        let faces = &self.faces;
        self.vf[u].retain(|&f| faces[f].is_some());
        self.verts[u] = c.pos;
        let qv = self.quadric[v];
        self.quadric[u].add(&qv);
        self.stamp[u] += 1;
        self.stamp[v] += 1;
    }
}

/// Greedy quadric-error edge collapse until the mesh has fewer than
/// `max_faces` faces or no admissible collapse is left. Meshes already
/// under budget come back unchanged.
pub fn simplify_mesh(mesh: &TriMesh, max_faces: usize) -> TriMesh {
    if mesh.faces.len() < max_faces {
        return mesh.clone();
    }
    let n = mesh.vertices.len();
    let mut st = State {
        verts: mesh.vertices.clone(),
        faces: mesh.faces.iter().map(|&f| Some(f)).collect(),
        vf: vec![Vec::new(); n],
        quadric: vec![Quadric::default(); n],
        stamp: vec![0; n],
        live: mesh.faces.len(),
    };
    for (fi, f) in mesh.faces.iter().enumerate() {
        let nrm = mesh.face_normal(fi);
        let len = norm(nrm);
        if len > 0.0 {
            let unit = nrm.map(|c| c / len);
            let q = Quadric::plane(unit, -dot(unit, mesh.vertices[f[0]]), 0.5 * len);
            for &i in f {
                st.quadric[i].add(&q);
            }
        }
        for &i in f {
            st.vf[i].push(fi);
        }
    }
    let mut heap = BinaryHeap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a < b {
                heap.push(st.candidate(a, b));
            }
        }
    }
    while st.live >= max_faces {
        let Some(c) = heap.pop() else { break };
        if c.stamp != (st.stamp[c.keep], st.stamp[c.drop]) || !st.allowed(&c) {
            continue;
        }
        st.apply(&c);
        for w in st.neighbours(c.keep) {
            heap.push(st.candidate(c.keep, w));
        }
    }
    let mut out = TriMesh {
        vertices: st.verts,
        faces: st.faces.into_iter().flatten().collect(),
    };
    out.compact();
    out
}
