//! Exact trust-region subproblem: minimise `vᵀHv + cᵀv` subject to `‖v‖ ≤ r`.
//!
//! Works in the eigenbasis of `H`. With `g = Qᵀc` the boundary candidates are
//! `y_i(μ) = −g_i / (2(λ_i + μ))` for a multiplier `μ ≥ max(0, −λ_min)`, and
//! `μ` solves the secular equation `‖y(μ)‖ = r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, symmetric_eigen, DenseMatrix, SymmetricEigen};

const SECULAR_TOL: f64 = 1e-10;
const SECULAR_MAX_ITER: usize = 200;

/// Which KKT branch produced the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrsCase {
    /// `μ = 0`, minimiser strictly inside (or on) the ball.
    Interior,
    /// `μ > 0` solves the secular equation.
    Boundary,
    /// `c` has no weight on the bottom eigenspace; `μ = −λ_min` and the
    /// minimiser is completed along a bottom eigenvector.
    HardCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrsSolution {
    pub minimizer: Vec<f64>,
    pub value: f64,
    pub multiplier: f64,
    pub case_tag: TrsCase,
}

/// Residuals of the KKT conditions at a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖v‖ − r`, positive when infeasible.
    pub norm_excess: f64,
    /// `|μ (r − ‖v‖)|`.
    pub slackness: f64,
    /// `‖2(H + μI)v + c‖`.
    pub stationarity: f64,
}

impl KktResiduals {
    /// Feasibility within `r·1e-8`, slackness within `1e-6·r`, stationarity
    /// within `1e-6·max(1, ‖c‖)`.
    pub fn within_tolerance(&self, r: f64, c_norm: f64) -> bool {
        self.norm_excess <= 1e-8 * r
            && self.slackness <= 1e-6 * r
            && self.stationarity <= 1e-6 * c_norm.max(1.0)
    }
}

impl TrsSolution {
    pub fn is_on_boundary(&self) -> bool {
        matches!(self.case_tag, TrsCase::Boundary | TrsCase::HardCase)
    }

    pub fn kkt_residuals(&self, h: &DenseMatrix, c: &[f64], r: f64) -> KktResiduals {
        let v = &self.minimizer;
        let nv = norm2(v);
        let hv = h.matvec(v);
        let grad: Vec<f64> = hv
            .iter()
            .zip(v)
            .zip(c)
            .map(|((hvi, vi), ci)| 2.0 * (hvi + self.multiplier * vi) + ci)
            .collect();
        KktResiduals {
            norm_excess: nv - r,
            slackness: (self.multiplier * (r - nv)).abs(),
            stationarity: norm2(&grad),
        }
    }
}

/// `vᵀHv + cᵀv`.
pub fn quadratic_form(h: &DenseMatrix, c: &[f64], v: &[f64]) -> f64 {
    dot(v, &h.matvec(v)) + dot(c, v)
}

/// Global minimiser of `vᵀHv + cᵀv` over `‖v‖ ≤ r` for symmetric `H`.
pub fn solve_trs(h: &DenseMatrix, c: &[f64], r: f64) -> Result<TrsSolution> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidRadius(r));
    }
    if c.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            actual: c.len(),
        });
    }
    let eig = symmetric_eigen(h)?;
    let secular = Secular::new(&eig, c, h.max_norm());
    let (coords, multiplier, case_tag) = secular.solve(r);
    let minimizer = eig.from_eigenbasis(&coords);
    let value = quadratic_form(h, c, &minimizer);
    Ok(TrsSolution {
        minimizer,
        value,
        multiplier,
        case_tag,
    })
}

struct Secular<'a> {
    lambda: &'a [f64],
    g: Vec<f64>,
    /// Eigenvalues within this of each other (or of zero) are treated as equal.
    eig_tol: f64,
    /// Weight of `g` below this on an eigenspace counts as none.
    g_tol: f64,
}

impl<'a> Secular<'a> {
    fn new(eig: &'a SymmetricEigen, c: &[f64], h_max: f64) -> Self {
        let g = eig.to_eigenbasis(c);
        let g_norm = norm2(&g);
        Self {
            lambda: &eig.values,
            g,
            eig_tol: 1e-9 * h_max.max(1.0),
            g_tol: 1e-10 * g_norm.max(1.0),
        }
    }

    fn lambda_min(&self) -> f64 {
        self.lambda[0]
    }

    fn weight_on(&self, pred: impl Fn(f64) -> bool) -> f64 {
        self.lambda
            .iter()
            .zip(&self.g)
            .filter(|(&l, _)| pred(l))
            .map(|(_, gi)| gi * gi)
            .sum::<f64>()
            .sqrt()
    }

    /// `y(μ)` with the components selected by `skip` set to zero.
    fn coords(&self, mu: f64, skip: impl Fn(f64) -> bool) -> Vec<f64> {
        self.lambda
            .iter()
            .zip(&self.g)
            .map(|(&l, &gi)| {
                if skip(l) || gi == 0.0 {
                    0.0
                } else {
                    -gi / (2.0 * (l + mu))
                }
            })
            .collect()
    }

    /// `‖y(μ)‖` and `d‖y‖²/dμ`; infinite when a weighted term has `λ_i + μ ≤ 0`.
    fn norm_and_slope(&self, mu: f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for (&l, &gi) in self.lambda.iter().zip(&self.g) {
            if gi == 0.0 {
                continue;
            }
            let shifted = l + mu;
            if shifted <= 0.0 {
                return (f64::INFINITY, f64::NEG_INFINITY);
            }
            let term = gi * gi / (4.0 * shifted * shifted);
            s += term;
            ds -= 2.0 * term / shifted;
        }
        (s.sqrt(), ds)
    }

    fn solve(&self, r: f64) -> (Vec<f64>, f64, TrsCase) {
        let lambda_min = self.lambda_min();
        let tol = self.eig_tol;

        if lambda_min >= -tol && self.weight_on(|l| l <= tol) <= self.g_tol {
            let y = self.coords(0.0, |l| l <= tol);
            if norm2(&y) <= r {
                return (y, 0.0, TrsCase::Interior);
            }
        }

        let lo = (-lambda_min).max(0.0);
        let is_bottom = |l: f64| l - lambda_min <= tol;
        if lambda_min < -tol && self.weight_on(is_bottom) <= self.g_tol {
            let y = self.coords(lo, is_bottom);
            if norm2(&y) <= r {
                return (self.complete_along_bottom(y, r), lo, TrsCase::HardCase);
            }
        }

        let g_norm = norm2(&self.g);
        let hi = (g_norm / (2.0 * r) - lambda_min + 1.0).max(lo + 1.0);
        match self.find_root(r, lo, hi) {
            Ok(mu) => (self.coords(mu, |_| false), mu, TrsCase::Boundary),
            Err(mu_inside) => {
                // the root sits closer to −λ_min than the bracket can resolve
                let y = self.coords(mu_inside, |_| false);
                (self.complete_along_bottom(y, r), mu_inside, TrsCase::Boundary)
            }
        }
    }

    /// Safeguarded Newton on `1/r − 1/‖y(μ)‖` over `(lo, hi]`. On stagnation
    /// returns the bracket end whose `‖y‖` is below `r`.
    fn find_root(&self, r: f64, lo: f64, hi: f64) -> std::result::Result<f64, f64> {
        let mut a = lo;
        let mut b = hi;
        let mut mu = hi;
        for _ in 0..SECULAR_MAX_ITER {
            let (nv, ds) = self.norm_and_slope(mu);
            if (nv - r).abs() <= SECULAR_TOL * r {
                return Ok(mu);
            }
            if nv > r {
                a = mu;
            } else {
                b = mu;
            }
            if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                return Err(b);
            }
            let phi = 1.0 / r - 1.0 / nv;
            let dphi = 0.5 * ds / (nv * nv * nv);
            let newton = mu - phi / dphi;
            mu = if newton.is_finite() && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        Err(b)
    }

    /// Adds `α q_min` so that `‖y‖ = r`, with the sign of `α` chosen to
    /// lower the linear term (positive when `c ⟂ q_min`).
    fn complete_along_bottom(&self, mut y: Vec<f64>, r: f64) -> Vec<f64> {
        let ny = norm2(&y);
        let alpha = (r * r - ny * ny).max(0.0).sqrt();
        // y is in eigen-coordinates, so q_min is the first unit vector; the
        // orientation of the stored eigenvector fixes the tie-break sign
        let sign = if self.g[0] > 0.0 { -1.0 } else { 1.0 };
        y[0] += sign * alpha;
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_symmetric, rng, symmetric_with_eigenvalues};
    use rand::Rng;

    fn check_kkt(h: &DenseMatrix, c: &[f64], r: f64, s: &TrsSolution) {
        let res = s.kkt_residuals(h, c, r);
        assert!(res.within_tolerance(r, norm2(c)), "{res:?} for {s:?}");
        let direct = quadratic_form(h, c, &s.minimizer);
        assert!((direct - s.value).abs() <= 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn identity_zero_linear_term() {
        let h = DenseMatrix::identity(3);
        let s = solve_trs(&h, &[0.0; 3], 1.0).unwrap();
        assert_eq!(s.case_tag, TrsCase::Interior);
        assert_eq!(s.value, 0.0);
        assert!(s.minimizer.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn indefinite_diagonal_is_hard_case_on_the_boundary() {
        let h = DenseMatrix::from_diag(&[1.0, -1.0]);
        let s = solve_trs(&h, &[0.0, 0.0], 1.0).unwrap();
        assert!((s.value + 1.0).abs() < 1e-12);
        assert!(s.minimizer[0].abs() < 1e-12);
        assert!((s.minimizer[1].abs() - 1.0).abs() < 1e-12);
        assert!(s.is_on_boundary());
        assert_eq!(s.case_tag, TrsCase::HardCase);
        assert_eq!(s.multiplier, 1.0);
        check_kkt(&h, &[0.0, 0.0], 1.0, &s);
    }

    #[test]
    fn one_dimensional_interior() {
        // ψ = v² − v
        let h = DenseMatrix::from_diag(&[1.0]);
        let s = solve_trs(&h, &[-1.0], 1.0).unwrap();
        assert_eq!(s.case_tag, TrsCase::Interior);
        assert!((s.minimizer[0] - 0.5).abs() < 1e-15);
        assert!((s.value + 0.25).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_boundary() {
        // v² − 4v on [−1, 1]: minimum at v = 1, value −3, μ = 1
        let h = DenseMatrix::from_diag(&[1.0]);
        let s = solve_trs(&h, &[-4.0], 1.0).unwrap();
        assert_eq!(s.case_tag, TrsCase::Boundary);
        assert!((s.minimizer[0] - 1.0).abs() < 1e-9);
        assert!((s.value + 3.0).abs() < 1e-9);
        assert!((s.multiplier - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hard_case_with_small_radius_is_ordinary_boundary() {
        // H = diag(−1, 0), c = (0, −1): v_perp at μ = 1 is (0, 1/2)
        let h = DenseMatrix::from_diag(&[-1.0, 0.0]);
        let c = [0.0, -1.0];
        let small = solve_trs(&h, &c, 0.3).unwrap();
        assert_eq!(small.case_tag, TrsCase::Boundary);
        check_kkt(&h, &c, 0.3, &small);

        let big = solve_trs(&h, &c, 2.0).unwrap();
        assert_eq!(big.case_tag, TrsCase::HardCase);
        check_kkt(&h, &c, 2.0, &big);
        // v = (±√(4 − 1/4), 1/2): value = −(4 − 1/4) − 1/2
        assert!((big.value - (-3.75 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_radius() {
        let h = DenseMatrix::identity(2);
        assert!(matches!(solve_trs(&h, &[0.0, 0.0], 0.0), Err(Error::InvalidRadius(_))));
        assert!(solve_trs(&h, &[0.0, 0.0], f64::NAN).is_err());
        assert!(solve_trs(&h, &[0.0], 1.0).is_err());
    }

    #[test]
    fn random_instances_satisfy_kkt() {
        let mut r = rng(99);
        for seed in 0..200 {
            let n = 1 + (seed as usize % 12);
            let h = random_symmetric(n, seed);
            let c: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
            let radius = r.random_range(0.1..4.0);
            let s = solve_trs(&h, &c, radius).unwrap();
            check_kkt(&h, &c, radius, &s);
        }
    }

    #[test]
    fn constructed_hard_cases() {
        for seed in 0..30u64 {
            let n = 3 + (seed as usize % 6);
            let mut eigs: Vec<f64> = (0..n).map(|i| -2.0 + i as f64 * 0.7).collect();
            if seed % 3 == 0 {
                eigs[1] = eigs[0];
            }
            let (h, q) = symmetric_with_eigenvalues(&eigs, seed);
            // linear term orthogonal to the bottom eigenspace
            let mut coords = vec![0.0; n];
            for (i, x) in coords.iter_mut().enumerate().skip(2) {
                *x = 0.1 * (i as f64);
            }
            let c = q.matvec(&coords);
            let s = solve_trs(&h, &c, 5.0).unwrap();
            assert_eq!(s.case_tag, TrsCase::HardCase, "seed {seed}");
            check_kkt(&h, &c, 5.0, &s);
            assert!((norm2(&s.minimizer) - 5.0).abs() < 1e-10);
        }
    }

    #[test]
    fn value_nonincreasing_in_radius() {
        for seed in 0..20 {
            let h = random_symmetric(6, seed);
            let c: Vec<f64> = (0..6).map(|i| (i as f64) - 2.5).collect();
            let mut last = f64::INFINITY;
            for radius in [0.1, 0.3, 0.7, 1.5, 3.0, 10.0] {
                let v = solve_trs(&h, &c, radius).unwrap().value;
                assert!(v <= last + 1e-10);
                last = v;
            }
        }
    }
}
