//! Seeded random matrix ensembles shared by tests, oracles and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{dot, norm2, DenseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// i.i.d. standard normal entries.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut r))
}

/// i.i.d. uniform ±1 entries.
pub fn sign_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| if r.random::<bool>() { 1.0 } else { -1.0 })
}

/// `(G + Gᵀ)/2` for a Gaussian `G`.
pub fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
    let g = random_matrix(n, n, seed);
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

/// `n × k` matrix with orthonormal columns (Gram-Schmidt on Gaussian columns).
pub fn random_orthonormal(n: usize, k: usize, seed: u64) -> DenseMatrix {
    assert!(k <= n);
    let mut r = rng(seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        for _ in 0..2 {
            for c in &cols {
                let p = dot(c, &x);
                x.iter_mut().zip(c).for_each(|(xi, ci)| *xi -= p * ci);
            }
        }
        let nx = norm2(&x);
        if nx > 1e-8 {
            x.iter_mut().for_each(|xi| *xi /= nx);
            cols.push(x);
        }
    }
    DenseMatrix::from_columns(n, &cols)
}

/// `U diag(spectrum) Vᵀ` with random orthonormal `U`, `V`.
pub fn matrix_with_spectrum(rows: usize, cols: usize, spectrum: &[f64], seed: u64) -> DenseMatrix {
    let r = spectrum.len();
    assert!(r <= rows.min(cols));
    let u = random_orthonormal(rows, r, seed);
    let v = random_orthonormal(cols, r, seed.wrapping_add(0x9e37_79b9));
    DenseMatrix::from_fn(rows, cols, |i, j| {
        (0..r).map(|l| u[(i, l)] * spectrum[l] * v[(j, l)]).sum()
    })
}

/// Symmetric `Q diag(eigenvalues) Qᵀ` with random orthogonal `Q`.
pub fn symmetric_with_eigenvalues(eigenvalues: &[f64], seed: u64) -> (DenseMatrix, DenseMatrix) {
    let n = eigenvalues.len();
    let q = random_orthonormal(n, n, seed);
    let h = DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|l| q[(i, l)] * eigenvalues[l] * q[(j, l)]).sum()
    });
    // exact symmetry
    let h = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    (h, q)
}
