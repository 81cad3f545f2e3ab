use crate::error::{Error, Result};

use super::matrix::DenseMatrix;

/// Largest dimension handled by cyclic Jacobi; bigger matrices go through
/// Householder tridiagonalisation and implicit QL.
pub const JACOBI_MAX_DIM: usize = 96;

const JACOBI_MAX_SWEEPS: usize = 30;
const JACOBI_OFF_TOL: f64 = 1e-12;
const QL_MAX_ITER: usize = 60;

/// Eigen-decomposition `H = Q diag(values) Qᵀ` of a symmetric matrix.
///
/// `values` are nondecreasing; column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    /// `Qᵀ x`: coordinates of `x` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &[f64]) -> Vec<f64> {
        self.vectors.matvec_transposed(x)
    }

    /// `Q y`.
    pub fn from_eigenbasis(&self, y: &[f64]) -> Vec<f64> {
        self.vectors.matvec(y)
    }
}

fn check_symmetric(h: &DenseMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            actual: h.cols(),
        });
    }
    let asymmetry = h.asymmetry();
    if asymmetry > 1e-10 * h.max_norm().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Eigenvalues (nondecreasing) and orthonormal eigenvectors of a symmetric
/// matrix.
///
/// Matrices up to [`JACOBI_MAX_DIM`] use cyclic Jacobi; larger ones use
/// tridiagonal QL. Fails with `NotSymmetric` when
/// `‖H − Hᵀ‖_max > 1e-10 · max(1, ‖H‖_max)`.
pub fn symmetric_eigen(h: &DenseMatrix) -> Result<SymmetricEigen> {
    check_symmetric(h)?;
    if h.rows() <= JACOBI_MAX_DIM {
        jacobi(h)
    } else {
        tridiagonal_ql(h)
    }
}

/// Cyclic Jacobi rotations, regardless of size.
pub fn symmetric_eigen_jacobi(h: &DenseMatrix) -> Result<SymmetricEigen> {
    check_symmetric(h)?;
    jacobi(h)
}

/// Householder tridiagonalisation followed by implicit QL, regardless of size.
pub fn symmetric_eigen_ql(h: &DenseMatrix) -> Result<SymmetricEigen> {
    check_symmetric(h)?;
    tridiagonal_ql(h)
}

fn jacobi(h: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = h.rows();
    // symmetrise so that tiny asymmetries cannot leak into the result
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    // rows of `vt` are the eigenvectors
    let mut vt = DenseMatrix::identity(n);
    let tol = JACOBI_OFF_TOL * a.frobenius_norm();

    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut vt, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "jacobi",
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }
    let values = a.diagonal();
    Ok(sorted(values, vt))
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut DenseMatrix, vt: &mut DenseMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let n = a.rows();
    // rotation is negligible at working precision
    if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = 0.0;
        a[(q, p)] = 0.0;
        return;
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(p, k)];
        let akq = a[(q, k)];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        a[(p, k)] = new_p;
        a[(q, k)] = new_q;
        a[(k, p)] = new_p;
        a[(k, q)] = new_q;
    }
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    let (row_p, row_q) = two_rows(vt, p, q);
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let x = *vp;
        let y = *vq;
        *vp = c * x - s * y;
        *vq = s * x + c * y;
    }
}

fn two_rows(m: &mut DenseMatrix, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let cols = m.cols();
    let (head, tail) = m.data_mut().split_at_mut(q * cols);
    (&mut head[p * cols..(p + 1) * cols], &mut tail[..cols])
}

fn sorted(values: Vec<f64>, vt: DenseMatrix) -> SymmetricEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let vectors = DenseMatrix::from_fn(n, n, |r, c| vt[(order[c], r)]);
    let values = order.iter().map(|&i| values[i]).collect();
    SymmetricEigen { values, vectors }
}

/// Householder reduction to tridiagonal form and implicit QL with shifts,
/// after the EISPACK `tred2`/`tql2` pair.
fn tridiagonal_ql(h: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = h.rows();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (h[(i, j)] + h[(j, i)])).collect())
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    // rows of `vt` are the eigenvectors during QL
    let mut vt: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    drop(v);
    tql2(&mut vt, &mut d, &mut e)?;
    let vt = DenseMatrix::from_fn(n, n, |i, j| vt[i][j]);
    Ok(sorted(d, vt))
}

fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v[j][i] = f;
                let mut g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let g: f64 = v[..=i].iter().map(|row| row[i + 1] * row[j]).sum();
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

fn tql2(vt: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::NoConvergence {
                        routine: "tridiagonal QL",
                        sweeps: QL_MAX_ITER,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = vt.split_at_mut(i + 1);
                    let row_i = &mut lo[i];
                    let row_next = &mut hi[0];
                    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_symmetric;

    fn residual(h: &DenseMatrix, eig: &SymmetricEigen) -> f64 {
        let hq = h.matmul(&eig.vectors).unwrap();
        let n = h.rows();
        let ql = DenseMatrix::from_fn(n, n, |i, j| eig.vectors[(i, j)] * eig.values[j]);
        hq.sub(&ql).unwrap().max_norm()
    }

    fn orthogonality(q: &DenseMatrix) -> f64 {
        let g = q.gram();
        g.sub(&DenseMatrix::identity(q.cols())).unwrap().max_norm()
    }

    #[test]
    fn diagonal_example() {
        let h = DenseMatrix::from_diag(&[2.0, -1.0]);
        let eig = symmetric_eigen(&h).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0]);
        assert_eq!(eig.vector(0)[0].abs(), 0.0);
        assert_eq!(eig.vector(0)[1].abs(), 1.0);
    }

    #[test]
    fn swap_example() {
        let h = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        for eig in [symmetric_eigen_jacobi(&h).unwrap(), symmetric_eigen_ql(&h).unwrap()] {
            assert!((eig.values[0] + 1.0).abs() < 1e-14);
            assert!((eig.values[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn random_symmetric_residuals() {
        for seed in 0..10 {
            for n in [1, 2, 8, 33, 120] {
                let h = random_symmetric(n, seed);
                let scale = h.max_norm().max(1.0);
                for eig in [symmetric_eigen_jacobi(&h).unwrap(), symmetric_eigen_ql(&h).unwrap()] {
                    assert!(residual(&h, &eig) <= 1e-8 * scale);
                    assert!(orthogonality(&eig.vectors) <= 1e-10);
                    assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
                }
            }
        }
    }

    #[test]
    fn routes_agree() {
        let h = random_symmetric(40, 7);
        let a = symmetric_eigen_jacobi(&h).unwrap();
        let b = symmetric_eigen_ql(&h).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let h = DenseMatrix::from_rows(&[[0.0, 1.0], [0.5, 0.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&h), Err(Error::NotSymmetric { .. })));
        let r = DenseMatrix::zeros(2, 3);
        assert!(symmetric_eigen(&r).is_err());
    }

    #[test]
    fn zero_matrix() {
        let eig = symmetric_eigen(&DenseMatrix::zeros(4, 4)).unwrap();
        assert!(eig.values.iter().all(|&x| x == 0.0));
        assert!(orthogonality(&eig.vectors) == 0.0);
    }
}
