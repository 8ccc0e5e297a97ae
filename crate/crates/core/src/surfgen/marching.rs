//! Marching cubes on binary masks.
//!
//! Cells span eight neighboring voxel centers. Each cell face contributes
//! segments between the midpoints of its sign-changing edges; on the
//! ambiguous face configuration (two diagonal inside corners) each inside
//! corner is cut off separately. Both cells sharing a face see the same
//! decision, so the segments chain into closed loops per cell that glue into
//! a watertight, consistently oriented surface. Loops are fan triangulated.

use std::collections::HashMap;

use super::geom::Vec3;
use super::{Result, SurfError, TriangleMesh};
use crate::voxelgrid::BinaryMask;

/// Corner offsets of a cell, bit `k` of the index is the k-th axis offset.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Cell faces as (fixed axis, side); corners listed in cyclic order.
struct CellFace {
    corners: [usize; 4],
    normal: [f64; 3],
}

fn cell_faces() -> [CellFace; 6] {
    [
        CellFace { corners: [0, 2, 6, 4], normal: [-1.0, 0.0, 0.0] },
        CellFace { corners: [1, 3, 7, 5], normal: [1.0, 0.0, 0.0] },
        CellFace { corners: [0, 1, 5, 4], normal: [0.0, -1.0, 0.0] },
        CellFace { corners: [2, 3, 7, 6], normal: [0.0, 1.0, 0.0] },
        CellFace { corners: [0, 1, 3, 2], normal: [0.0, 0.0, -1.0] },
        CellFace { corners: [4, 5, 7, 6], normal: [0.0, 0.0, 1.0] },
    ]
}

/// Cell edge between corners `a` and `b` as (lower corner, axis).
fn edge_of(a: usize, b: usize) -> (usize, usize) {
    let (lo, hi) = (a.min(b), a.max(b));
    let axis = (hi ^ lo).trailing_zeros() as usize;
    (lo, axis)
}

fn corner_pos(c: usize) -> Vec3 {
    CORNERS[c].map(|v| v as f64)
}

fn edge_mid_local(e: (usize, usize)) -> Vec3 {
    let mut p = corner_pos(e.0);
    p[e.1] += 0.5;
    p
}

/// Faces of the cell touching a cell edge: bitmask over the 6 faces.
fn faces_of_edge(e: (usize, usize), faces: &[CellFace; 6]) -> u8 {
    let other = e.0 | (1 << e.1);
    let mut m = 0;
    for (i, f) in faces.iter().enumerate() {
        if f.corners.contains(&e.0) && f.corners.contains(&other) {
            m |= 1 << i;
        }
    }
    m
}

/// Per configuration: loops of cell edges, oriented outward.
type CaseLoops = Vec<Vec<(usize, usize)>>;

fn build_case(config: u8, faces: &[CellFace; 6]) -> CaseLoops {
    let inside = |c: usize| config & (1 << c) != 0;
    // directed segments: from edge -> to edge
    let mut next: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for f in faces {
        let c = f.corners;
        let crossings: Vec<(usize, usize)> = (0..4)
            .filter(|&i| inside(c[i]) != inside(c[(i + 1) % 4]))
            .map(|i| edge_of(c[i], c[(i + 1) % 4]))
            .collect();
        let segments: Vec<((usize, usize), (usize, usize), usize)> = match crossings.len() {
            0 => Vec::new(),
            2 => {
                // any inside corner orients the segment
                let ic = *c.iter().find(|&&k| inside(k)).unwrap();
                vec![(crossings[0], crossings[1], ic)]
            }
            4 => {
                // diagonal pattern: cut off each inside corner on its own
                c.iter()
                    .enumerate()
                    .filter(|(_, &k)| inside(k))
                    .map(|(i, &k)| {
                        let prev = c[(i + 3) % 4];
                        let nxt = c[(i + 1) % 4];
                        (edge_of(prev, k), edge_of(k, nxt), k)
                    })
                    .collect()
            }
            _ => unreachable!("a square has an even number of sign changes"),
        };
        for (e1, e2, ic) in segments {
            let (a, b) = (edge_mid_local(e1), edge_mid_local(e2));
            let cp = corner_pos(ic);
            let ab = super::geom::sub(b, a);
            let ac = super::geom::sub(cp, a);
            let s = super::geom::dot(super::geom::cross(ab, ac), f.normal);
            let (from, to) = if s < 0.0 { (e1, e2) } else { (e2, e1) };
            let prev = next.insert(from, to);
            debug_assert!(prev.is_none(), "edge leaves twice in config {config}");
        }
    }
    let mut keys: Vec<_> = next.keys().copied().collect();
    keys.sort_unstable();
    let mut used = HashMap::new();
    let mut loops = Vec::new();
    for start in keys {
        if used.contains_key(&start) {
            continue;
        }
        let mut lp = vec![start];
        used.insert(start, ());
        let mut cur = next[&start];
        while cur != start {
            used.insert(cur, ());
            lp.push(cur);
            cur = next[&cur];
        }
        loops.push(lp);
    }
    loops
}

/// Triangles of a loop as local loop indices; `None` entry = extra centroid.
fn triangulate_loop(lp: &[(usize, usize)], faces: &[CellFace; 6]) -> Vec<[Option<usize>; 3]> {
    let n = lp.len();
    if n == 3 {
        return vec![[Some(0), Some(1), Some(2)]];
    }
    let fmask: Vec<u8> = lp.iter().map(|&e| faces_of_edge(e, faces)).collect();
    for apex in 0..n {
        let ok = (2..n - 1).all(|d| fmask[apex] & fmask[(apex + d) % n] == 0);
        if ok {
            return (1..n - 1)
                .map(|d| [Some(apex), Some((apex + d) % n), Some((apex + d + 1) % n)])
                .collect();
        }
    }
    (0..n).map(|i| [None, Some(i), Some((i + 1) % n)]).collect()
}

struct CaseTable {
    loops: Vec<CaseLoops>,
    tris: Vec<Vec<Vec<[Option<usize>; 3]>>>,
}

fn case_table() -> &'static CaseTable {
    use std::sync::OnceLock;
    static TABLE: OnceLock<CaseTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let faces = cell_faces();
        let loops: Vec<CaseLoops> = (0..=255u8).map(|c| build_case(c, &faces)).collect();
        let tris = loops
            .iter()
            .map(|ls| ls.iter().map(|lp| triangulate_loop(lp, &faces)).collect())
            .collect();
        CaseTable { loops, tris }
    })
}

/// Extracts the boundary surface of the foreground at iso-level 0.5.
/// Vertex coordinates are millimetres with voxel centers at index·size.
pub fn marching_cubes(mask: &BinaryMask) -> Result<TriangleMesh> {
    if mask.is_empty() {
        return Err(SurfError::EmptyMask);
    }
    let p = mask.padded(1);
    let d = p.dims();
    let vs = mask.header.spacing();
    let table = case_table();

    // vertex id per (grid point index, axis)
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for z in 0..d[2] - 1 {
        for y in 0..d[1] - 1 {
            for x in 0..d[0] - 1 {
                let mut config = 0u8;
                for (k, c) in CORNERS.iter().enumerate() {
                    if p.get(x + c[0], y + c[1], z + c[2]) {
                        config |= 1 << k;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                for (lp, tris) in table.loops[config as usize].iter().zip(&table.tris[config as usize]) {
                    let ids: Vec<usize> = lp
                        .iter()
                        .map(|&(corner, axis)| {
                            let c = CORNERS[corner];
                            let g = [x + c[0], y + c[1], z + c[2]];
                            let key = (p.header.index(g[0], g[1], g[2]), axis);
                            *edge_vertex.entry(key).or_insert_with(|| {
                                let mut pos = [0.0; 3];
                                for a in 0..3 {
                                    // padded index 1 is voxel 0
                                    let gi = g[a] as f64 - 1.0 + if a == axis { 0.5 } else { 0.0 };
                                    pos[a] = gi * vs[a];
                                }
                                vertices.push(pos);
                                vertices.len() - 1
                            })
                        })
                        .collect();
                    let mut centroid = None;
                    for t in tris {
                        let tri = t.map(|slot| match slot {
                            Some(i) => ids[i],
                            None => *centroid.get_or_insert_with(|| {
                                let mut c = [0.0; 3];
                                for &i in &ids {
                                    for a in 0..3 {
                                        c[a] += vertices[i][a] / ids.len() as f64;
                                    }
                                }
                                vertices.push(c);
                                vertices.len() - 1
                            }),
                        });
                        faces.push(tri);
                    }
                }
            }
        }
    }
    Ok(TriangleMesh { vertices, faces })
}
