use crate::error::{Error, Result};

use super::matrix::{dot, norm2, DenseMatrix};

const MAX_SWEEPS: usize = 30;

/// Thin singular value decomposition `A = U diag(σ) Vᵀ`.
///
/// `left_vectors` is `rows × r` and `right_vectors` is `cols × r` with
/// `r = min(rows, cols)`; both have orthonormal columns, including the ones
/// paired with zero singular values.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub left_vectors: DenseMatrix,
    pub right_vectors: DenseMatrix,
}

impl SvdResult {
    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let m = self.left_vectors.rows();
        let n = self.right_vectors.rows();
        let r = self.singular_values.len();
        DenseMatrix::from_fn(m, n, |i, j| {
            (0..r)
                .map(|l| {
                    self.left_vectors[(i, l)] * self.singular_values[l] * self.right_vectors[(j, l)]
                })
                .sum()
        })
    }
}

/// SVD by one-sided (Hestenes) Jacobi on the taller orientation of `A`.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    if a.rows() >= a.cols() {
        one_sided_jacobi(a, true)
    } else {
        let r = one_sided_jacobi(&a.transpose(), true)?;
        Ok(SvdResult {
            singular_values: r.singular_values,
            left_vectors: r.right_vectors,
            right_vectors: r.left_vectors,
        })
    }
}

/// Singular values only, nonincreasing.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    let tall = if a.rows() >= a.cols() {
        one_sided_jacobi(a, false)?
    } else {
        one_sided_jacobi(&a.transpose(), false)?
    };
    Ok(tall.singular_values)
}

/// Orthogonalises the columns of a tall matrix by plane rotations, tracking
/// the accumulated right rotations when `with_vectors` is set.
fn one_sided_jacobi(a: &DenseMatrix, with_vectors: bool) -> Result<SvdResult> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = if with_vectors {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut norms: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    // pairs are orthogonal once |cos| drops to rounding level; columns whose
    // squared norm is below rounding level of the total are left alone
    let ortho_tol = f64::EPSILON * (m as f64).sqrt();
    let negligible = (f64::EPSILON * f64::EPSILON) * norms.iter().sum::<f64>();

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= ortho_tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                if with_vectors {
                    rotate_pair(&mut v, p, q, c, s);
                }
                norms[p] = dot(&w[p], &w[p]);
                norms[q] = dot(&w[q], &w[q]);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "one-sided jacobi",
            sweeps: MAX_SWEEPS,
        });
    }

    let sigma: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();

    if !with_vectors {
        return Ok(SvdResult {
            singular_values,
            left_vectors: DenseMatrix::zeros(1, 1),
            right_vectors: DenseMatrix::zeros(1, 1),
        });
    }

    let sigma_max = singular_values[0];
    let rank_tol = sigma_max * f64::EPSILON * (m.max(n) as f64);
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if sigma[j] > rank_tol && sigma[j] > 0.0 {
            left.push(w[j].iter().map(|x| x / sigma[j]).collect());
        } else {
            pending.push(slot);
            left.push(Vec::new());
        }
    }
    complete_orthonormal(&mut left, &pending, m);

    let right: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(SvdResult {
        singular_values,
        left_vectors: DenseMatrix::from_columns(m, &left),
        right_vectors: DenseMatrix::from_columns(n, &right),
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the `pending` slots with unit vectors orthogonal to every other
/// column, drawing candidates from the standard basis.
fn complete_orthonormal(cols: &mut [Vec<f64>], pending: &[usize], dim: usize) {
    let mut candidate = 0;
    for &slot in pending {
        loop {
            assert!(candidate < dim, "ran out of basis candidates");
            let mut x = vec![0.0; dim];
            x[candidate] = 1.0;
            candidate += 1;
            // two Gram-Schmidt passes
            for _ in 0..2 {
                for (k, c) in cols.iter().enumerate() {
                    if k == slot || c.is_empty() {
                        continue;
                    }
                    let proj = dot(c, &x);
                    for (xi, ci) in x.iter_mut().zip(c) {
                        *xi -= proj * ci;
                    }
                }
            }
            let nx = norm2(&x);
            if nx > 0.5 {
                x.iter_mut().for_each(|xi| *xi /= nx);
                cols[slot] = x;
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigen::symmetric_eigen;
    use crate::linalg::random::random_matrix;

    fn orthogonality(q: &DenseMatrix) -> f64 {
        q.gram().sub(&DenseMatrix::identity(q.cols())).unwrap().max_norm()
    }

    #[test]
    fn diagonal_values() {
        let r = svd(&DenseMatrix::from_diag(&[3.0, 2.0, 1.0])).unwrap();
        assert_eq!(r.singular_values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn ones_matrix_is_rank_one() {
        for (n, m) in [(4, 7), (7, 4), (5, 5)] {
            let r = svd(&DenseMatrix::filled(n, m, 1.0)).unwrap();
            let expected = ((n * m) as f64).sqrt();
            assert!((r.singular_values[0] - expected).abs() < 1e-12 * expected);
            assert!(r.singular_values[1..].iter().all(|&s| s < 1e-12));
            assert!(orthogonality(&r.left_vectors) < 1e-12);
            assert!(orthogonality(&r.right_vectors) < 1e-12);
        }
    }

    #[test]
    fn matches_gram_eigenvalues() {
        let a = random_matrix(6, 9, 3);
        let sv = svd(&a).unwrap().singular_values;
        // AAᵀ is the smaller Gram matrix here
        let eig = symmetric_eigen(&a.transpose().gram()).unwrap();
        let mut from_gram: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0).sqrt()).collect();
        from_gram.reverse();
        for (x, y) in sv.iter().zip(&from_gram) {
            assert!((x - y).abs() <= 1e-10 * sv[0]);
        }
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        for seed in 0..5 {
            for (m, n) in [(1, 1), (1, 5), (5, 1), (12, 7), (7, 12), (30, 30)] {
                let a = random_matrix(m, n, seed);
                let r = svd(&a).unwrap();
                assert!(orthogonality(&r.left_vectors) <= 1e-8);
                assert!(orthogonality(&r.right_vectors) <= 1e-8);
                let err = r.reconstruct().sub(&a).unwrap().max_norm();
                assert!(err <= 1e-6 * a.max_norm());
                assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
                let values_only = singular_values(&a).unwrap();
                assert_eq!(values_only, r.singular_values);
            }
        }
    }

    #[test]
    fn rank_deficient_vectors_are_completed() {
        // rank 1 outer product plus a zero row
        let a = DenseMatrix::from_fn(6, 4, |i, j| if i == 5 { 0.0 } else { (i + 1) as f64 * (j as f64 - 1.5) });
        let r = svd(&a).unwrap();
        assert!(orthogonality(&r.left_vectors) <= 1e-10);
        assert!(r.reconstruct().sub(&a).unwrap().max_norm() <= 1e-12 * a.max_norm());
    }
}
