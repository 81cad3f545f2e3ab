//! Quadratic functions `ψ(v) = ⟨v, Av⟩ + n⟨v, diag(d)v⟩ + n⟨b, v⟩` and
//! their minimisation, exactly and from a random principal submatrix.
//!
//! Writing `H = (A + Aᵀ)/2 + n·diag(d)` and `c = n·b` gives
//! `ψ(v) = vᵀHv + cᵀv`, which is the form every solver here works with.

mod trs;

use serde::{Deserialize, Serialize};

pub use trs::{quadratic_form, solve_trs, KktResiduals, TrsCase, TrsSolution};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, symmetric_eigen, DenseMatrix};
use crate::sampling::{check_sample, restrict_matrix, restrict_vector, sample_indices, IndexSample};

/// The data `(A, d, b)` of a quadratic function on `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    a: DenseMatrix,
    d: Vec<f64>,
    b: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(a: DenseMatrix, d: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                actual: a.cols(),
            });
        }
        for v in [&d, &b] {
            if v.len() != a.rows() {
                return Err(Error::DimensionMismatch {
                    expected: a.rows(),
                    actual: v.len(),
                });
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteEntry { row: i, col: 0 });
            }
        }
        Ok(Self { a, d, b })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `L = max(‖A‖_max, ‖d‖_∞, ‖b‖_∞)`.
    pub fn entry_bound(&self) -> f64 {
        self.d
            .iter()
            .chain(&self.b)
            .fold(self.a.max_norm(), |m, x| m.max(x.abs()))
    }

    /// `(H, c)` with `ψ(v) = vᵀHv + cᵀv`.
    pub fn hessian_and_linear(&self) -> (DenseMatrix, Vec<f64>) {
        let n = self.n();
        let scale = n as f64;
        let mut h = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (self.a[(i, j)] + self.a[(j, i)]));
        for (i, di) in self.d.iter().enumerate() {
            h[(i, i)] += scale * di;
        }
        let c = self.b.iter().map(|x| scale * x).collect();
        (h, c)
    }

    /// The problem on the principal submatrix indexed by `indices`. Its
    /// dimension, and so the weight of the `d` and `b` terms, is `|indices|`.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            a: restrict_matrix(&self.a, indices, indices)?,
            d: restrict_vector(&self.d, indices)?,
            b: restrict_vector(&self.b, indices)?,
        })
    }

    /// `ψ(v)` computed from `(A, d, b)` directly.
    pub fn evaluate(&self, v: &[f64]) -> Result<f64> {
        evaluate_psi(self, v)
    }
}

pub fn evaluate_psi(problem: &QuadraticProblem, v: &[f64]) -> Result<f64> {
    let n = problem.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    let av = problem.a.matvec(v);
    let diag: f64 = v.iter().zip(&problem.d).map(|(x, d)| d * x * x).sum();
    Ok(dot(v, &av) + n as f64 * (diag + dot(&problem.b, v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionStatus {
    Finite,
    /// `ψ` is not bounded below; `value` is `−∞` and there is no minimiser.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadSolution {
    pub minimizer: Vec<f64>,
    pub value: f64,
    pub status: SolutionStatus,
}

impl QuadSolution {
    fn unbounded() -> Self {
        Self {
            minimizer: Vec::new(),
            value: f64::NEG_INFINITY,
            status: SolutionStatus::Unbounded,
        }
    }
}

/// Exact `min ψ` over `ℝⁿ`.
///
/// Eigenvalues of `H` within `1e-9·max(1, ‖H‖_max)` of zero count as zero.
/// The minimum is finite iff `H` is positive semidefinite and `c` has no
/// component along its null space; the minimiser returned is then the one of
/// least norm.
pub fn solve_unconstrained(problem: &QuadraticProblem) -> Result<QuadSolution> {
    let (h, c) = problem.hessian_and_linear();
    let eig = symmetric_eigen(&h)?;
    let tol = 1e-9 * h.max_norm().max(1.0);
    let g = eig.to_eigenbasis(&c);
    let g_tol = 1e-9 * norm2(&c).max(1.0);

    let mut y = vec![0.0; g.len()];
    for ((yi, &l), &gi) in y.iter_mut().zip(&eig.values).zip(&g) {
        if l < -tol || (l <= tol && gi.abs() > g_tol) {
            return Ok(QuadSolution::unbounded());
        }
        if l > tol {
            *yi = -gi / (2.0 * l);
        }
    }
    let minimizer = eig.from_eigenbasis(&y);
    let value = quadratic_form(&h, &c, &minimizer);
    Ok(QuadSolution {
        minimizer,
        value,
        status: SolutionStatus::Finite,
    })
}

/// Exact `min ψ` over the ball `‖v‖ ≤ r`.
pub fn solve_ball(problem: &QuadraticProblem, r: f64) -> Result<TrsSolution> {
    let (h, c) = problem.hessian_and_linear();
    solve_trs(&h, &c, r)
}

/// Estimate of `min ψ / n²` from the subproblem on a random index sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledMin {
    /// `min ψ_S / |S|²`.
    pub estimate: f64,
    pub sample: IndexSample,
    pub solution: QuadSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledBallMin {
    /// `min_{‖v‖ ≤ r_S} ψ_S / |S|²` with `r_S = r·sqrt(|S|/n)`.
    pub estimate: f64,
    pub sample: IndexSample,
    pub radius: f64,
    pub solution: TrsSolution,
}

/// Samples each index with probability `k/n`, solves the restricted problem
/// exactly and normalises by `|S|²`. Aborts if `|S| > 2k` or `S` is empty.
pub fn approximate_min(problem: &QuadraticProblem, k: usize, seed: u64) -> Result<SampledMin> {
    let sample = sample_indices(problem.n(), k, seed)?;
    check_sample(&sample, k)?;
    let sub = problem.restrict(sample.indices())?;
    let solution = solve_unconstrained(&sub)?;
    let s = sample.len() as f64;
    Ok(SampledMin {
        estimate: solution.value / (s * s),
        sample,
        solution,
    })
}

/// Ball-constrained counterpart of [`approximate_min`]; the radius shrinks
/// with the sample as `r·sqrt(|S|/n)`.
pub fn approximate_min_ball(problem: &QuadraticProblem, r: f64, k: usize, seed: u64) -> Result<SampledBallMin> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidRadius(r));
    }
    let sample = sample_indices(problem.n(), k, seed)?;
    check_sample(&sample, k)?;
    let sub = problem.restrict(sample.indices())?;
    let s = sample.len() as f64;
    let radius = r * (s / problem.n() as f64).sqrt();
    let solution = solve_ball(&sub, radius)?;
    Ok(SampledBallMin {
        estimate: solution.value / (s * s),
        sample,
        radius,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_symmetric;

    fn problem(a: DenseMatrix, d: &[f64], b: &[f64]) -> QuadraticProblem {
        QuadraticProblem::new(a, d.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn identity_quadratic() {
        let p = problem(DenseMatrix::identity(2), &[0.0, 0.0], &[0.0, 0.0]);
        let s = solve_unconstrained(&p).unwrap();
        assert_eq!(s.status, SolutionStatus::Finite);
        assert_eq!(s.value, 0.0);
        assert_eq!(s.minimizer, vec![0.0, 0.0]);
    }

    #[test]
    fn one_dimensional() {
        // ψ(v) = v² − v, minimum −1/4 at 1/2
        let p = problem(DenseMatrix::from_diag(&[1.0]), &[0.0], &[-1.0]);
        let s = solve_unconstrained(&p).unwrap();
        assert!((s.value + 0.25).abs() < 1e-15);
        assert!((s.minimizer[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_curvature_is_unbounded() {
        let p = problem(DenseMatrix::from_diag(&[1.0, -1.0]), &[0.0, 0.0], &[0.0, 0.0]);
        let s = solve_unconstrained(&p).unwrap();
        assert_eq!(s.status, SolutionStatus::Unbounded);
        assert_eq!(s.value, f64::NEG_INFINITY);
        assert!(s.minimizer.is_empty());
    }

    #[test]
    fn linear_term_along_null_space_is_unbounded() {
        let p = problem(DenseMatrix::from_diag(&[1.0, 0.0]), &[0.0, 0.0], &[0.0, 1.0]);
        assert_eq!(solve_unconstrained(&p).unwrap().status, SolutionStatus::Unbounded);
        // the same singular H with c in its range is fine
        let q = problem(DenseMatrix::from_diag(&[1.0, 0.0]), &[0.0, 0.0], &[1.0, 0.0]);
        let s = solve_unconstrained(&q).unwrap();
        assert_eq!(s.status, SolutionStatus::Finite);
        assert!((s.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_matches_hessian_form() {
        let a = DenseMatrix::from_fn(4, 4, |i, j| (i as f64) - 2.0 * (j as f64) + 0.5);
        let p = problem(a, &[0.1, -0.2, 0.3, 0.0], &[1.0, -1.0, 0.5, 2.0]);
        let (h, c) = p.hessian_and_linear();
        let v = [0.3, -1.2, 2.0, 0.7];
        let direct = evaluate_psi(&p, &v).unwrap();
        assert!((direct - quadratic_form(&h, &c, &v)).abs() < 1e-12);
        assert!(evaluate_psi(&p, &v[..3]).is_err());
    }

    #[test]
    fn value_matches_psi_at_minimizer() {
        for seed in 0..10 {
            let n = 12;
            let a = random_symmetric(n, seed);
            let p = problem(a, &vec![1.0; n], &(0..n).map(|i| i as f64 / 7.0 - 0.8).collect::<Vec<_>>());
            let s = solve_unconstrained(&p).unwrap();
            if s.status == SolutionStatus::Finite {
                let psi = evaluate_psi(&p, &s.minimizer).unwrap();
                assert!((psi - s.value).abs() <= 1e-8 * psi.abs().max(1.0));
            }
        }
    }

    #[test]
    fn restriction_uses_subproblem_dimension() {
        let p = problem(DenseMatrix::zeros(4, 4), &[1.0, 2.0, 3.0, 4.0], &[0.0; 4]);
        let sub = p.restrict(&[1, 3]).unwrap();
        let (h, _) = sub.hessian_and_linear();
        assert_eq!(h.diagonal(), vec![4.0, 8.0]);
    }

    #[test]
    fn full_rate_sample_equals_exact() {
        let n = 20;
        let p = problem(random_symmetric(n, 5), &vec![2.0; n], &vec![0.5; n]);
        let exact = solve_unconstrained(&p).unwrap().value / (n * n) as f64;
        let est = approximate_min(&p, n, 77).unwrap();
        assert_eq!(est.sample.len(), n);
        assert!((est.estimate - exact).abs() <= 1e-12 * exact.abs().max(1.0));

        let ball_exact = solve_ball(&p, 1.5).unwrap().value / (n * n) as f64;
        let ball = approximate_min_ball(&p, 1.5, n, 3).unwrap();
        assert!((ball.radius - 1.5).abs() < 1e-15);
        assert!((ball.estimate - ball_exact).abs() <= 1e-12 * ball_exact.abs().max(1.0));
    }

    #[test]
    fn estimate_scales_linearly() {
        let n = 40;
        let p = problem(random_symmetric(n, 8), &vec![1.5; n], &(0..n).map(|i| (i % 5) as f64 - 2.0).collect::<Vec<_>>());
        let c = 3.7;
        let q = problem(p.a().scaled(c), &p.d().iter().map(|x| c * x).collect::<Vec<_>>(), &p.b().iter().map(|x| c * x).collect::<Vec<_>>());
        for seed in 0..5 {
            let x = approximate_min(&p, 15, seed).unwrap().estimate;
            let y = approximate_min(&q, 15, seed).unwrap().estimate;
            assert!((y - c * x).abs() <= 1e-9 * (c * x).abs().max(1.0));
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(QuadraticProblem::new(DenseMatrix::zeros(2, 3), vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(QuadraticProblem::new(DenseMatrix::zeros(2, 2), vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(QuadraticProblem::new(DenseMatrix::zeros(2, 2), vec![0.0; 2], vec![f64::NAN, 0.0]).is_err());
        let p = problem(DenseMatrix::identity(3), &[0.0; 3], &[0.0; 3]);
        assert!(matches!(approximate_min(&p, 0, 1), Err(Error::InvalidRate { .. })));
        assert!(matches!(approximate_min_ball(&p, -1.0, 1, 1), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn entry_bound() {
        let p = problem(DenseMatrix::from_diag(&[0.5, -2.0]), &[1.0, 3.0], &[-4.0, 0.0]);
        assert_eq!(p.entry_bound(), 4.0);
    }
}
