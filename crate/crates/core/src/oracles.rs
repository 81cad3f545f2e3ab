//! Slow reference computations used to cross-check the main solvers.
//!
//! Each oracle takes a different route from the code it validates: spectra
//! through the Gram matrix, the trust-region problem by sweeping the
//! multiplier, rank-`t` residuals by alternating least squares over explicit
//! factors, and quadratic minima by plain gradient descent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, symmetric_eigen, DenseMatrix};
use crate::quadmin::QuadraticProblem;

const SPECTRUM_LIMIT: usize = 64;
const TRS_LIMIT: usize = 32;
const RANK_LIMIT: usize = 32;
const QUADMIN_LIMIT: usize = 64;
pub const MIN_TRS_GRID: usize = 10_000;
pub const ALS_RESTARTS: usize = 16;
pub const ALS_SWEEPS: usize = 500;

/// Reference vs candidate comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub reference_value: f64,
    pub candidate_value: f64,
    pub abs_error: f64,
    /// `abs_error / max(1, |reference|)`.
    pub rel_error: f64,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, reference_value: f64, candidate_value: f64) -> Self {
        let abs_error = (reference_value - candidate_value).abs();
        Self {
            name: name.into(),
            reference_value,
            candidate_value,
            abs_error,
            rel_error: abs_error / reference_value.abs().max(1.0),
        }
    }
}

fn too_large(dims: usize, limit: usize) -> Error {
    Error::TooLarge { dims, limit }
}

/// Singular values as square roots of the eigenvalues of the smaller Gram
/// matrix, nonincreasing.
pub fn oracle_spectrum(a: &DenseMatrix) -> Result<Vec<f64>> {
    if a.min_dim() > SPECTRUM_LIMIT {
        return Err(too_large(a.min_dim(), SPECTRUM_LIMIT));
    }
    let gram = if a.rows() >= a.cols() {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let eig = symmetric_eigen(&gram)?;
    let mut sigma: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    sigma.sort_by(|x, y| y.total_cmp(x));
    Ok(sigma)
}

/// Best point found for `min vᵀHv + cᵀv` over `‖v‖ ≤ r`.
///
/// Candidates: the interior least-norm stationary point when `H ⪰ 0`; for a
/// log-spaced grid of multipliers `μ` above `max(0, −λ_min)`, the point
/// `−(H + μI)⁻¹c/2` pushed onto the sphere, either by scaling or by adding a
/// multiple of a bottom eigenvector; the sphere crossing of the multiplier
/// curve located by bisection; and a golden-section polish around the best
/// grid multiplier.
pub fn oracle_trs(h: &DenseMatrix, c: &[f64], r: f64, grid: usize) -> Result<(f64, Vec<f64>)> {
    let n = h.rows();
    if n > TRS_LIMIT {
        return Err(too_large(n, TRS_LIMIT));
    }
    if c.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: c.len() });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidRadius(r));
    }
    let grid = grid.max(MIN_TRS_GRID);
    let eig = symmetric_eigen(h)?;
    let sweep = MultiplierSweep {
        lambda: &eig.values,
        g: eig.to_eigenbasis(c),
        r,
    };

    let mut best = (f64::INFINITY, vec![0.0; n]);
    let mut consider = |y: Vec<f64>| {
        let value = sweep.objective(&y);
        if value < best.0 {
            best = (value, y);
        }
    };

    let tol = 1e-9 * h.max_norm().max(1.0);
    if eig.values[0] >= -tol {
        let y: Vec<f64> = sweep
            .lambda
            .iter()
            .zip(&sweep.g)
            .map(|(&l, &gi)| if l > tol { -gi / (2.0 * l) } else { 0.0 })
            .collect();
        if norm2(&y) <= r {
            consider(y);
        }
    }

    let lo = (-eig.values[0]).max(0.0);
    let range = norm2(&sweep.g) / (2.0 * r) + eig.values.iter().fold(0.0f64, |m, l| m.max(l.abs())) + 1.0;
    let mus: Vec<f64> = (0..=grid)
        .map(|j| lo + range * 10f64.powf(-14.0 + 14.0 * j as f64 / grid as f64))
        .collect();

    // candidates at the bottom of the multiplier range with the bottom
    // eigenspace dropped, as in the degenerate case
    for y in sweep.feasible_candidates(sweep.point(lo, true)) {
        consider(y);
    }

    let mut best_j = 0;
    let mut best_grid_value = f64::INFINITY;
    let mut prev_norm = f64::INFINITY;
    for (j, &mu) in mus.iter().enumerate() {
        let y = sweep.point(mu, false);
        let ny = norm2(&y);
        if j > 0 && prev_norm >= r && ny <= r {
            let root = sweep.bisect_crossing(mus[j - 1], mu);
            for cand in sweep.feasible_candidates(sweep.point(root, false)) {
                consider(cand);
            }
        }
        prev_norm = ny;
        for cand in sweep.feasible_candidates(y) {
            let v = sweep.objective(&cand);
            if v < best_grid_value {
                best_grid_value = v;
                best_j = j;
            }
            consider(cand);
        }
    }

    let a = mus[best_j.saturating_sub(1)];
    let b = mus[(best_j + 1).min(grid)];
    let polished = golden_section(a, b, |mu| sweep.best_feasible(mu).0);
    consider(sweep.best_feasible(polished).1);

    let (value, y) = best;
    Ok((value, eig.from_eigenbasis(&y)))
}

struct MultiplierSweep<'a> {
    lambda: &'a [f64],
    g: Vec<f64>,
    r: f64,
}

impl MultiplierSweep<'_> {
    fn objective(&self, y: &[f64]) -> f64 {
        self.lambda
            .iter()
            .zip(&self.g)
            .zip(y)
            .map(|((l, gi), yi)| l * yi * yi + gi * yi)
            .sum()
    }

    /// `y_i = −g_i / (2(λ_i + μ))`, with components whose shifted eigenvalue
    /// is not positive set to zero. With `drop_bottom` the bottom eigenspace
    /// is zeroed as well.
    fn point(&self, mu: f64, drop_bottom: bool) -> Vec<f64> {
        let bottom = self.lambda[0];
        let tol = 1e-9 * self.lambda.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        self.lambda
            .iter()
            .zip(&self.g)
            .map(|(&l, &gi)| {
                let shifted = l + mu;
                if shifted <= 0.0 || (drop_bottom && l - bottom <= tol) {
                    0.0
                } else {
                    -gi / (2.0 * shifted)
                }
            })
            .collect()
    }

    /// Points on the sphere derived from `y`: scaled down if outside,
    /// completed along the first eigenvector with both signs if inside.
    fn feasible_candidates(&self, y: Vec<f64>) -> Vec<Vec<f64>> {
        let ny = norm2(&y);
        if ny >= self.r {
            let s = self.r / ny;
            return vec![y.into_iter().map(|x| x * s).collect()];
        }
        // move along the first eigenvector until the sphere is reached
        let rest = ny * ny - y[0] * y[0];
        let target = (self.r * self.r - rest).max(0.0).sqrt();
        [target, -target]
            .into_iter()
            .map(|first| {
                let mut z = y.clone();
                z[0] = first;
                z
            })
            .collect()
    }

    fn best_feasible(&self, mu: f64) -> (f64, Vec<f64>) {
        self.feasible_candidates(self.point(mu, false))
            .into_iter()
            .map(|y| (self.objective(&y), y))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one candidate")
    }

    /// `μ` in `[a, b]` with `‖y(μ)‖ = r`, given `‖y(a)‖ ≥ r ≥ ‖y(b)‖`.
    fn bisect_crossing(&self, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if norm2(&self.point(mid, false)) >= self.r {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}

fn golden_section(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Best `‖B − UVᵀ‖_F²` over `U ∈ ℝ^{p×t}`, `V ∈ ℝ^{q×t}` found by alternating
/// least squares from `restarts` seeded random starts.
pub fn oracle_rank_residual(b: &DenseMatrix, t: usize, restarts: usize) -> Result<f64> {
    let (p, q) = b.shape();
    if p.max(q) > RANK_LIMIT {
        return Err(too_large(p.max(q), RANK_LIMIT));
    }
    if t > b.min_dim() {
        return Err(Error::RankTooLarge { t, max: b.min_dim() });
    }
    if t == 0 {
        return Ok(b.frobenius_norm_sq());
    }
    let mut best = f64::INFINITY;
    for restart in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa15 + restart as u64);
        let mut v: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..q).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let mut last = f64::INFINITY;
        for _ in 0..ALS_SWEEPS {
            orthonormalize(&mut v, &mut rng);
            // with orthonormal V the best U is BV
            let u: Vec<Vec<f64>> = v.iter().map(|vl| b.matvec(vl)).collect();
            let res = explicit_residual(b, &u, &v);
            best = best.min(res);
            if (last - res).abs() <= 1e-15 * b.frobenius_norm_sq() {
                break;
            }
            last = res;
            let mut w = u;
            orthonormalize(&mut w, &mut rng);
            v = w.iter().map(|ul| b.matvec_transposed(ul)).collect();
            let res = explicit_residual(b, &w, &v);
            best = best.min(res);
        }
    }
    Ok(best)
}

fn explicit_residual(b: &DenseMatrix, u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    let (p, q) = b.shape();
    let mut total = 0.0;
    for i in 0..p {
        for j in 0..q {
            let approx: f64 = u.iter().zip(v).map(|(ul, vl)| ul[i] * vl[j]).sum();
            let e = b[(i, j)] - approx;
            total += e * e;
        }
    }
    total
}

/// Modified Gram–Schmidt, twice; a column that collapses is replaced by a
/// fresh random direction.
fn orthonormalize(cols: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for k in 0..cols.len() {
        loop {
            let scale = norm2(&cols[k]).max(f64::MIN_POSITIVE);
            for _ in 0..2 {
                for prev in 0..k {
                    let (done, rest) = cols.split_at_mut(k);
                    let proj = dot(&done[prev], &rest[0]);
                    for (x, y) in rest[0].iter_mut().zip(&done[prev]) {
                        *x -= proj * y;
                    }
                }
            }
            let nk = norm2(&cols[k]);
            if nk > 1e-10 * scale && nk > 0.0 {
                cols[k].iter_mut().for_each(|x| *x /= nk);
                break;
            }
            let dim = cols[k].len();
            cols[k] = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        }
    }
}

/// `ψ` after `steps` gradient steps from the origin. A nonpositive
/// `step_size` selects `1/(2λ_max(H))`.
pub fn oracle_quadmin(problem: &QuadraticProblem, steps: usize, step_size: f64) -> Result<f64> {
    let n = problem.n();
    if n > QUADMIN_LIMIT {
        return Err(too_large(n, QUADMIN_LIMIT));
    }
    let (h, c) = problem.hessian_and_linear();
    let eig = symmetric_eigen(&h)?;
    let lambda_min = eig.values[0];
    if lambda_min < 1e-6 {
        return Err(Error::NotStronglyConvex { lambda_min });
    }
    let lambda_max = eig.values[n - 1];
    let eta = if step_size > 0.0 { step_size } else { 0.5 / lambda_max };
    let mut v = vec![0.0; n];
    for _ in 0..steps {
        let hv = h.matvec(&v);
        for ((vi, hvi), ci) in v.iter_mut().zip(&hv).zip(&c) {
            *vi -= eta * (2.0 * hvi + ci);
        }
    }
    problem.evaluate(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_matrix;
    use crate::linalg::singular_values;

    #[test]
    fn spectrum_examples() {
        assert_eq!(oracle_spectrum(&DenseMatrix::from_diag(&[3.0, 2.0, 1.0])).unwrap(), vec![3.0, 2.0, 1.0]);
        let ones = oracle_spectrum(&DenseMatrix::filled(4, 7, 1.0)).unwrap();
        assert!((ones[0] - 28f64.sqrt()).abs() < 1e-12);
        assert!(ones[1..].iter().all(|&s| s < 1e-6));
        let a = random_matrix(10, 10, 7);
        let svd = singular_values(&a).unwrap();
        for (x, y) in oracle_spectrum(&a).unwrap().iter().zip(&svd) {
            assert!((x - y).abs() <= 1e-8 * y.max(1.0));
        }
        assert!(matches!(oracle_spectrum(&DenseMatrix::zeros(65, 65)), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn trs_examples() {
        let (v, x) = oracle_trs(&DenseMatrix::identity(2), &[0.0, 0.0], 1.0, 10_000).unwrap();
        assert_eq!(v, 0.0);
        assert!(norm2(&x) < 1e-12);
        let (v, _) = oracle_trs(&DenseMatrix::from_diag(&[1.0, -1.0]), &[0.0, 0.0], 1.0, 10_000).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
        assert!(oracle_trs(&DenseMatrix::identity(33), &[0.0; 33], 1.0, 10_000).is_err());
    }

    #[test]
    fn rank_residual_examples() {
        let d = DenseMatrix::from_diag(&[3.0, 2.0, 1.0]);
        assert!((oracle_rank_residual(&d, 1, 4).unwrap() - 5.0).abs() < 1e-6);
        let a = random_matrix(6, 5, 2);
        assert!(oracle_rank_residual(&a, 5, 2).unwrap() < 1e-8);
        assert!(oracle_rank_residual(&a, 6, 2).is_err());
    }

    #[test]
    fn quadmin_examples() {
        // ψ = 3v² − 4v
        let p = QuadraticProblem::new(DenseMatrix::from_diag(&[3.0]), vec![0.0], vec![-4.0]).unwrap();
        assert!((oracle_quadmin(&p, 1000, 0.0).unwrap() + 4.0 / 3.0).abs() < 1e-6);
        let q = QuadraticProblem::new(DenseMatrix::identity(3), vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(oracle_quadmin(&q, 10, 0.0).unwrap(), 0.0);
        let indefinite = QuadraticProblem::new(DenseMatrix::from_diag(&[1.0, -1.0]), vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(matches!(oracle_quadmin(&indefinite, 10, 0.0), Err(Error::NotStronglyConvex { .. })));
    }

    #[test]
    fn report_errors() {
        let r = OracleReport::new("x", 10.0, 9.0);
        assert_eq!(r.abs_error, 1.0);
        assert_eq!(r.rel_error, 0.1);
        assert_eq!(OracleReport::new("y", 0.5, 0.0).rel_error, 0.5);
    }
}
