//! Symmetric sparse matrices and an envelope Cholesky factorization.

use std::collections::VecDeque;

use super::{Result, SurfError};

/// Symmetric matrix in compressed-row form holding both triangles.
/// Explicit zeros are kept so the sparsity pattern mirrors mesh edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds from upper- or lower-triangle triplets `(i, j, v)`; each
    /// off-diagonal triplet is mirrored and duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < r.len() {
                let (c, mut v) = r[k];
                k += 1;
                while k < r.len() && r[k].0 == c {
                    v += r[k].1;
                    k += 1;
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of row `i` as (column, value), columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// All stored entries `(row, col, value)`, both triangles.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    /// Connected components of the sparsity graph.
    pub fn pattern_components(&self) -> usize {
        let mut uf = super::UnionFind::new(self.n);
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                uf.union(i, j);
            }
        }
        (0..self.n).filter(|&i| uf.find(i) == i).count()
    }

    /// `self + s·diag(d)`.
    pub fn add_diagonal(&self, d: &[f64], s: f64) -> SparseSymmetric {
        let mut trip: Vec<(usize, usize, f64)> =
            self.triplets().into_iter().filter(|&(i, j, _)| i <= j).collect();
        trip.extend(d.iter().enumerate().map(|(i, &v)| (i, i, s * v)));
        SparseSymmetric::from_triplets(self.n, &trip)
    }
}

/// Reverse Cuthill-McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseSymmetric) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    // farthest node from `start` (lowest degree among the last level) and its distance
    let farthest = |start: usize| -> (usize, usize) {
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::from([start]);
        dist[start] = 0;
        let mut last = start;
        while let Some(u) = q.pop_front() {
            if dist[u] > dist[last] || (dist[u] == dist[last] && degree[u] < degree[last]) {
                last = u;
            }
            for (v, _) in a.row(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        (last, dist[last])
    };
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral root
        let (mut far, mut ecc) = farthest(seed);
        for _ in 0..8 {
            let (f2, e2) = farthest(far);
            if e2 <= ecc {
                break;
            }
            far = f2;
            ecc = e2;
        }
        let root = far;
        visited[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = a.row(u).map(|(v, _)| v).filter(|&v| !visited[v]).collect();
            nb.sort_by_key(|&v| (degree[v], v));
            for v in nb {
                visited[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor `P A Pᵀ = L Lᵀ` stored row-wise.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseSymmetric) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(perm[i]).map(|(j, _)| inv[j]).filter(|&j| j <= i).min().unwrap_or(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut vals = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(perm[i]) {
                let jj = inv[j];
                if jj <= i {
                    vals[start[i] + jj - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = vals[start[i] + j - fi];
                let ri = start[i] + k0 - fi;
                let rj = start[j] + k0 - fj;
                for t in 0..j - k0 {
                    s -= vals[ri + t] * vals[rj + t];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(SurfError::NotPositiveDefinite { pivot: perm[i] });
                    }
                    vals[start[i] + i - fi] = s.sqrt();
                } else {
                    vals[start[i] + j - fi] = s / vals[start[j] + j - fj];
                }
            }
        }
        Ok(Self { perm, first, start, vals })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for (t, &l) in row[..i - fi].iter().enumerate() {
                s -= l * y[fi + t];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (t, &l) in row[..i - fi].iter().enumerate() {
                y[fi + t] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
