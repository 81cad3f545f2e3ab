use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{axpy, dot, norm2, DenseMatrix};

/// Seeded start vector, uniform on the unit sphere.
fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let nv = norm2(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

/// A matrix minus the rank-one terms already extracted from it, applied
/// without forming the difference.
struct Deflated<'a> {
    a: &'a DenseMatrix,
    // (sigma, u, v)
    found: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

impl Deflated<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.a.matvec(x);
        for (s, u, v) in &self.found {
            axpy(-s * dot(v, x), u, &mut y);
        }
        y
    }

    /// `Bᵀ(Bv)` with a single pass over the stored matrix.
    fn gram_apply(&self, v: &[f64]) -> Vec<f64> {
        let coeffs: Vec<f64> = self.found.iter().map(|(s, _, vj)| s * dot(vj, v)).collect();
        let mut y = vec![0.0; self.a.rows()];
        let mut out = vec![0.0; self.a.cols()];
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.a.row(i);
            let mut val = dot(row, v);
            for (c, (_, u, _)) in coeffs.iter().zip(&self.found) {
                val -= c * u[i];
            }
            *yi = val;
            if val != 0.0 {
                axpy(val, row, &mut out);
            }
        }
        for (s, u, vj) in &self.found {
            axpy(-s * dot(u, &y), vj, &mut out);
        }
        out
    }

    /// Power iteration on `BᵀB`; returns `(σ, u, v)` with `σ = ‖Bv‖`.
    fn top_triplet(&self, iterations: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>, Vec<f64>) {
        let mut v = random_unit(self.a.cols(), rng);
        for _ in 0..iterations {
            let w = self.gram_apply(&v);
            let nw = norm2(&w);
            if nw == 0.0 {
                break;
            }
            v = w.into_iter().map(|x| x / nw).collect();
        }
        let mut u = self.apply(&v);
        let sigma = norm2(&u);
        if sigma > 0.0 {
            u.iter_mut().for_each(|x| *x /= sigma);
        }
        (sigma, u, v)
    }
}

/// Estimate of `σ1(A)` from `iterations` rounds of `v ← AᵀAv / ‖AᵀAv‖`
/// started at a seeded random unit vector. Returns 0 for the zero matrix.
pub fn power_iteration_sigma1(a: &DenseMatrix, iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let op = Deflated {
        a,
        found: Vec::new(),
    };
    op.top_triplet(iterations.max(1), &mut rng).0
}

/// The `t` largest singular values by power iteration with deflation,
/// sorted nonincreasing.
///
/// After each triplet `(σ, u, v)` is extracted, `σ u vᵀ` is subtracted from
/// the operator before the next start vector is iterated.
///
/// # Panics
/// If `t` is zero or exceeds `min(rows, cols)`.
pub fn top_singular_values(a: &DenseMatrix, t: usize, iterations: usize, seed: u64) -> Vec<f64> {
    assert!(t >= 1 && t <= a.min_dim(), "t must lie in 1..=min(rows, cols)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut op = Deflated {
        a,
        found: Vec::with_capacity(t),
    };
    for _ in 0..t {
        let triplet = op.top_triplet(iterations.max(1), &mut rng);
        op.found.push(triplet);
    }
    let mut values: Vec<f64> = op.found.iter().map(|(s, _, _)| *s).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}
