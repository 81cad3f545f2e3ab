//! Synthetic inputs and kernel matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::quadmin::QuadraticProblem;

/// `K_ij = exp(−‖x_i − x_j‖² / (2σ²))`. Exactly symmetric with unit diagonal.
pub fn rbf_gram(points: &[Vec<f64>], sigma: f64) -> Result<DenseMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSigma(sigma));
    }
    let n = points.len();
    if n == 0 {
        return Err(Error::Config("no data points".into()));
    }
    let d = points[0].len();
    if let Some((line, p)) = points.iter().enumerate().find(|(_, p)| p.len() != d) {
        return Err(Error::RaggedRows {
            line: line + 1,
            expected: d,
            found: p.len(),
        });
    }
    let scale = -1.0 / (2.0 * sigma * sigma);
    let mut k = DenseMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = (scale * dist2).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `n` points in `ℝ^d` with i.i.d. standard normal coordinates.
pub fn synthesize_gaussian(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

/// A strictly convex instance: symmetric `A` with entries in `[−1, 1]`,
/// `d ∈ [1/2, 1]` and `b ∈ [−1, 1]`. The diagonal term `n·d_i ≥ n/2`
/// dominates the spectrum of `A`, which is at most about `2√n` in norm.
pub fn synthesize_quadratic(n: usize, seed: u64) -> QuadraticProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..=1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let d = (0..n).map(|_| rng.random_range(0.5..=1.0)).collect();
    let b = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    QuadraticProblem::new(a, d, b).expect("consistent dimensions")
}

/// `[A | d | b]`, the file layout read by the quadratic commands.
pub fn quadratic_to_matrix(p: &QuadraticProblem) -> DenseMatrix {
    let n = p.n();
    DenseMatrix::from_fn(n, n + 2, |i, j| match j {
        j if j < n => p.a()[(i, j)],
        j if j == n => p.d()[i],
        _ => p.b()[i],
    })
}

/// Inverse of [`quadratic_to_matrix`]; needs an `n × (n + 2)` matrix.
pub fn quadratic_from_matrix(m: &DenseMatrix) -> Result<QuadraticProblem> {
    let n = m.rows();
    if m.cols() != n + 2 {
        return Err(Error::DimensionMismatch {
            expected: n + 2,
            actual: m.cols(),
        });
    }
    let a = DenseMatrix::from_fn(n, n, |i, j| m[(i, j)]);
    QuadraticProblem::new(a, m.column(n), m.column(n + 1))
}
