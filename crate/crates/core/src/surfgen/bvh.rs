//! Axis-aligned bounding-box hierarchy over mesh faces.

use super::geom::{closest_point_on_triangle, dist_sq, Vec3};
use super::TriangleMesh;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] }
    }

    pub fn of_points(pts: &[Vec3]) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.grow(*p);
        }
        b
    }

    pub fn grow(&mut self, p: Vec3) {
        for a in 0..3 {
            self.lo[a] = self.lo[a].min(p[a]);
            self.hi[a] = self.hi[a].max(p[a]);
        }
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        let mut b = *self;
        b.grow(o.lo);
        b.grow(o.hi);
        b
    }

    pub fn overlaps(&self, o: &Aabb, tol: f64) -> bool {
        (0..3).all(|a| self.lo[a] <= o.hi[a] + tol && o.lo[a] <= self.hi[a] + tol)
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn dist_sq(&self, p: Vec3) -> f64 {
        (0..3)
            .map(|a| {
                let d = (self.lo[a] - p[a]).max(0.0).max(p[a] - self.hi[a]);
                d * d
            })
            .sum()
    }

    fn centre(&self, a: usize) -> f64 {
        0.5 * (self.lo[a] + self.hi[a])
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Closest surface point to a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub face: usize,
    pub point: Vec3,
    pub dist_sq: f64,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    items: Vec<usize>,
    boxes: Vec<Aabb>,
}

impl Bvh {
    /// Hierarchy over the faces of `mesh`.
    pub fn build(mesh: &TriangleMesh) -> Self {
        let boxes = (0..mesh.faces.len()).map(|f| Aabb::of_points(&mesh.triangle(f))).collect();
        Self::from_boxes(boxes)
    }

    pub fn from_boxes(boxes: Vec<Aabb>) -> Self {
        let mut bvh = Bvh { nodes: Vec::new(), items: (0..boxes.len()).collect(), boxes };
        if !bvh.boxes.is_empty() {
            bvh.split(0, bvh.items.len());
        }
        bvh
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        let bounds = self.items[start..end].iter().fold(Aabb::empty(), |b, &i| b.union(&self.boxes[i]));
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return self.nodes.len() - 1;
        }
        let ext: Vec<f64> = (0..3).map(|a| bounds.hi[a] - bounds.lo[a]).collect();
        let axis = (0..3).max_by(|&a, &b| ext[a].total_cmp(&ext[b]).then(b.cmp(&a))).unwrap();
        let mid = (start + end) / 2;
        let boxes = &self.boxes;
        self.items[start..end].sort_by(|&i, &j| {
            boxes[i].centre(axis).total_cmp(&boxes[j].centre(axis)).then(i.cmp(&j))
        });
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    /// Nearest point on `mesh` (the mesh this hierarchy was built from).
    /// Ties resolve to the lowest face index.
    pub fn closest_point(&self, mesh: &TriangleMesh, p: Vec3) -> Option<ClosestHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<ClosestHit> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if best.is_some_and(|b| node.bounds().dist_sq(p) > b.dist_sq) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.items[start..end] {
                        let [a, b, c] = mesh.triangle(f);
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d = dist_sq(p, q);
                        let better = match best {
                            None => true,
                            Some(h) => d < h.dist_sq || (d == h.dist_sq && f < h.face),
                        };
                        if better {
                            best = Some(ClosestHit { face: f, point: q, dist_sq: d });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let (dl, dr) = (self.nodes[left].bounds().dist_sq(p), self.nodes[right].bounds().dist_sq(p));
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// All item pairs `(i, j)`, `i < j`, whose boxes overlap within `tol`, sorted.
    pub fn overlapping_pairs(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            if !na.bounds().overlaps(nb.bounds(), tol) {
                continue;
            }
            match (na, nb) {
                (Node::Leaf { start: s1, end: e1, .. }, Node::Leaf { start: s2, end: e2, .. }) => {
                    for x in *s1..*e1 {
                        let lo = if a == b { x + 1 } else { *s2 };
                        for y in lo..*e2 {
                            let (i, j) = (self.items[x], self.items[y]);
                            if self.boxes[i].overlaps(&self.boxes[j], tol) {
                                out.push((i.min(j), i.max(j)));
                            }
                        }
                    }
                }
                (Node::Inner { left, right, .. }, _) if a == b => {
                    stack.push((*left, *left));
                    stack.push((*right, *right));
                    stack.push((*left, *right));
                }
                (Node::Inner { left, right, .. }, Node::Leaf { .. }) => {
                    stack.push((*left, b));
                    stack.push((*right, b));
                }
                (_, Node::Inner { left, right, .. }) => {
                    stack.push((a, *left));
                    stack.push((a, *right));
                }
            }
        }
        out.sort_unstable();
        out
    }
}
