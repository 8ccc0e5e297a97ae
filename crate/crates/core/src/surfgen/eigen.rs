//! Smallest nonconstant generalized eigenpairs `S f = λ M f`.
//!
//! Block shift-invert subspace iteration on `K = S + σM` with the constant
//! mode projected out M-orthogonally every step, followed by Rayleigh-Ritz.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::EnvelopeCholesky;
use super::{Result, SparseSymmetric, SurfError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub k: usize,
    /// Extra block columns beyond `k`.
    pub guard: usize,
    /// Bound on ‖Sf − λMf‖₂ for M-normalized f.
    pub tol: f64,
    pub max_iter: usize,
    /// Positive shift σ; defaults to 1% of 8π/area, the sphere value of λ₁.
    pub shift: Option<f64>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { k: 3, guard: 4, tol: 1e-8, max_iter: 10_000, shift: None, seed: 0x5eed }
    }
}

/// Nonconstant Laplace-Beltrami modes in ascending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub eigenvalues: Vec<f64>,
    /// One per-vertex vector per mode.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub mass_orthonormal: bool,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl SpectralEmbedding {
    /// (f₁, f₂, f₃) of vertex `v`.
    pub fn vector(&self, v: usize) -> [f64; 3] {
        [self.eigenfunctions[0][v], self.eigenfunctions[1][v], self.eigenfunctions[2][v]]
    }
}

fn m_dot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

/// M-orthonormalizes `cols` in place against the constant and each other.
fn m_orthonormalize(cols: &mut [Vec<f64>], mass: &[f64], total: f64, rng: &mut ChaCha8Rng) {
    for j in 0..cols.len() {
        for attempt in 0..3 {
            for _ in 0..2 {
                let c = mass.iter().zip(&cols[j]).map(|(m, x)| m * x).sum::<f64>() / total;
                cols[j].iter_mut().for_each(|x| *x -= c);
                for i in 0..j {
                    let (done, rest) = cols.split_at_mut(j);
                    let r = m_dot(mass, &done[i], &rest[0]);
                    rest[0].iter_mut().zip(&done[i]).for_each(|(x, q)| *x -= r * q);
                }
            }
            let nrm = m_dot(mass, &cols[j], &cols[j]).sqrt();
            if nrm > 1e-200 && nrm.is_finite() {
                cols[j].iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            // dependent column: restart it from noise
            assert!(attempt < 2, "could not extend the M-orthonormal basis");
            cols[j].iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        }
    }
}

/// `k` smallest nonconstant eigenpairs with default options.
pub fn smallest_eigenpairs(stiffness: &SparseSymmetric, mass: &[f64], k: usize) -> Result<SpectralEmbedding> {
    smallest_eigenpairs_with(stiffness, mass, EigenOptions { k, ..EigenOptions::default() })
}

pub fn smallest_eigenpairs_with(
    stiffness: &SparseSymmetric,
    mass: &[f64],
    opts: EigenOptions,
) -> Result<SpectralEmbedding> {
    let n = stiffness.dim();
    let k = opts.k;
    if n < k + 2 {
        return Err(SurfError::TooSmall(n));
    }
    let comps = stiffness.pattern_components();
    if comps > 1 {
        return Err(SurfError::MultiComponent(comps));
    }
    let total: f64 = mass.iter().sum();
    let sigma = opts.shift.unwrap_or(0.01 * 8.0 * std::f64::consts::PI / total);
    let chol = EnvelopeCholesky::factor(&stiffness.add_diagonal(mass, sigma))?;
    let p = (k + opts.guard).min(n - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    m_orthonormalize(&mut x, mass, total, &mut rng);

    let mut lambdas = vec![0.0; p];
    let mut residuals = vec![f64::INFINITY; k];
    for it in 1..=opts.max_iter {
        let mut q: Vec<Vec<f64>> = x
            .iter()
            .map(|col| chol.solve(&col.iter().zip(mass).map(|(v, m)| v * m).collect::<Vec<_>>()))
            .collect();
        m_orthonormalize(&mut q, mass, total, &mut rng);
        let sq: Vec<Vec<f64>> = q.iter().map(|c| stiffness.mul_vec(c)).collect();
        let a = DMatrix::from_fn(p, p, |i, j| {
            let v: f64 = q[i].iter().zip(&sq[j]).map(|(a, b)| a * b).sum();
            let w: f64 = q[j].iter().zip(&sq[i]).map(|(a, b)| a * b).sum();
            0.5 * (v + w)
        });
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut new_x = vec![vec![0.0; n]; p];
        let mut new_sx = vec![vec![0.0; n]; k];
        for (c, &o) in order.iter().enumerate() {
            lambdas[c] = eig.eigenvalues[o];
            for r in 0..p {
                let w = eig.eigenvectors[(r, o)];
                new_x[c].iter_mut().zip(&q[r]).for_each(|(acc, v)| *acc += w * v);
                if c < k {
                    new_sx[c].iter_mut().zip(&sq[r]).for_each(|(acc, v)| *acc += w * v);
                }
            }
        }
        x = new_x;
        for c in 0..k {
            let l = lambdas[c];
            residuals[c] = new_sx[c]
                .iter()
                .zip(&x[c])
                .zip(mass)
                .map(|((s, f), m)| (s - l * m * f).powi(2))
                .sum::<f64>()
                .sqrt();
        }
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            log::debug!("eigensolver converged in {it} iterations (residual {worst:e})");
            // deterministic sign: first entry of largest magnitude is positive
            let mut funcs: Vec<Vec<f64>> = x.into_iter().take(k).collect();
            for f in &mut funcs {
                let imax = (0..n).max_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs()).then(b.cmp(&a))).unwrap();
                if f[imax] < 0.0 {
                    f.iter_mut().for_each(|v| *v = -*v);
                }
            }
            return Ok(SpectralEmbedding {
                eigenvalues: lambdas[..k].to_vec(),
                eigenfunctions: funcs,
                mass_orthonormal: true,
                residuals,
                iterations: it,
            });
        }
    }
    Err(SurfError::SolverNoConvergence {
        iterations: opts.max_iter,
        residual: residuals.iter().copied().fold(0.0, f64::max),
    })
}
