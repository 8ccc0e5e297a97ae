use std::collections::HashMap;

use super::{Result, SurfError};
use crate::surfgen::geom::{add, cross, dot, norm, scale, sub, Vec3};

/// Indexed triangle surface. Coordinates are millimetres; faces are
/// counter-clockwise seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

/// Edge-to-face incidence of a mesh. Edges are keyed `(min, max)`.
#[derive(Debug, Clone)]
pub struct EdgeMap {
    pub edges: HashMap<(usize, usize), Vec<usize>>,
}

impl EdgeMap {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Sorted edge list, for deterministic iteration.
    pub fn sorted_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edges.keys().copied().collect();
        e.sort_unstable();
        e
    }
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices and faces that repeat a vertex.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= n) {
                return Err(SurfError::IndexOutOfRange { face: fi, index: bad, vertices: n });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(SurfError::DegenerateFace { face: fi });
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal, length = twice the area.
    pub fn face_normal_raw(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        cross(sub(b, a), sub(c, a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * norm(self.face_normal_raw(f))
    }

    pub fn total_area(&self) -> f64 {
        pairwise_sum((0..self.faces.len()).map(|f| self.face_area(f)).collect())
    }

    /// One third of the incident triangle areas per vertex.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let a = self.face_area(fi) / 3.0;
            for &v in f {
                out[v] += a;
            }
        }
        out
    }

    /// Area-weighted unit vertex normals. Isolated vertices get a zero vector.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut out = vec![[0.0; 3]; self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let n = self.face_normal_raw(fi);
            for &v in f {
                out[v] = add(out[v], n);
            }
        }
        for n in &mut out {
            let l = norm(*n);
            if l > 0.0 {
                *n = scale(*n, 1.0 / l);
            }
        }
        out
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        let terms = self
            .faces
            .iter()
            .map(|&[a, b, c]| {
                dot(self.vertices[a], cross(self.vertices[b], self.vertices[c])) / 6.0
            })
            .collect();
        pairwise_sum(terms)
    }

    pub fn edge_map(&self) -> EdgeMap {
        let mut edges: HashMap<(usize, usize), Vec<usize>> =
            HashMap::with_capacity(self.faces.len() * 3 / 2 + 1);
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        EdgeMap { edges }
    }

    /// Sorted, deduplicated neighbor lists.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                nb[a].push(b);
                nb[b].push(a);
            }
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    /// Checks that every edge has exactly two incident faces traversing it in
    /// opposite directions.
    pub fn check_closed_manifold(&self) -> Result<EdgeMap> {
        let em = self.edge_map();
        for (a, b) in em.sorted_edges() {
            let faces = &em.edges[&(a, b)];
            if faces.len() != 2 {
                return Err(SurfError::NonManifold { edge: (a, b), incident_faces: faces.len() });
            }
            let d0 = self.traverses(faces[0], a, b);
            let d1 = self.traverses(faces[1], a, b);
            if d0 == d1 {
                return Err(SurfError::InconsistentOrientation { edge: (a, b) });
            }
        }
        Ok(em)
    }

    /// Checks edge-manifoldness allowing boundary edges (one incident face).
    pub fn check_manifold_with_boundary(&self) -> Result<EdgeMap> {
        let em = self.edge_map();
        for (a, b) in em.sorted_edges() {
            let faces = &em.edges[&(a, b)];
            match faces.len() {
                1 => {}
                2 => {
                    if self.traverses(faces[0], a, b) == self.traverses(faces[1], a, b) {
                        return Err(SurfError::InconsistentOrientation { edge: (a, b) });
                    }
                }
                n => return Err(SurfError::NonManifold { edge: (a, b), incident_faces: n }),
            }
        }
        Ok(em)
    }

    fn traverses(&self, face: usize, a: usize, b: usize) -> bool {
        let f = self.faces[face];
        (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b)
    }

    /// Connected components over faces; returns a component id per vertex
    /// (isolated vertices get their own id) and the component count.
    /// Ids are ordered by lowest vertex index.
    pub fn vertex_components(&self) -> (Vec<usize>, usize) {
        let n = self.vertices.len();
        let mut uf = UnionFind::new(n);
        for f in &self.faces {
            uf.union(f[0], f[1]);
            uf.union(f[1], f[2]);
        }
        let mut label = vec![usize::MAX; n];
        let mut root_label = HashMap::new();
        let mut next = 0;
        for (v, l) in label.iter_mut().enumerate() {
            let r = uf.find(v);
            *l = *root_label.entry(r).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
        (label, next)
    }

    /// Mesh restricted to faces whose vertices all satisfy `keep`; vertices
    /// are reindexed in ascending order.
    pub fn submesh(&self, keep: impl Fn(usize) -> bool) -> TriangleMesh {
        let mut map = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (v, m) in map.iter_mut().enumerate() {
            if keep(v) {
                *m = vertices.len();
                vertices.push(self.vertices[v]);
            }
        }
        let faces = self
            .faces
            .iter()
            .filter(|f| f.iter().all(|&v| map[v] != usize::MAX))
            .map(|f| f.map(|v| map[v]))
            .collect();
        TriangleMesh { vertices, faces }
    }

    pub fn mean_edge_length_sq(&self) -> f64 {
        let em = self.edge_map();
        if em.is_empty() {
            return 0.0;
        }
        let sq: Vec<f64> = em
            .sorted_edges()
            .into_iter()
            .map(|(a, b)| {
                let d = sub(self.vertices[a], self.vertices[b]);
                dot(d, d)
            })
            .collect();
        pairwise_sum(sq) / em.len() as f64
    }

    pub fn translated(&self, t: Vec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| add(v, t)).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| scale(v, s)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Disjoint union; `other`'s indices are shifted past `self`'s vertices.
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let off = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| f.map(|v| v + off)));
        TriangleMesh { vertices, faces }
    }
}

/// Pairwise (cascade) summation; deterministic for a given input order.
pub fn pairwise_sum(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    while v.len() > 1 {
        let half = v.len().div_ceil(2);
        for i in 0..v.len() / 2 {
            v[i] = v[2 * i] + v[2 * i + 1];
        }
        if v.len() % 2 == 1 {
            v[half - 1] = v[v.len() - 1];
        }
        v.truncate(half);
    }
    v[0]
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
