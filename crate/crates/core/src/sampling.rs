//! Bernoulli index sampling and restriction of matrices and vectors to the
//! sampled indices.
//!
//! Every index `i ∈ [0, n)` is kept independently with probability `k/n`,
//! one uniform draw per index in increasing order, from a ChaCha8 stream
//! seeded with the caller's 64-bit seed. The generator is identified by
//! [`RNG_ID`] in experiment reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Identifier of the pinned generator and its seeding scheme.
pub const RNG_ID: &str = "chacha8/seed_from_u64/rand-0.9";

/// A sampled index subset together with the rate it was drawn at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSample {
    universe: usize,
    rate_numerator: usize,
    indices: Vec<usize>,
    seed: u64,
}

impl IndexSample {
    /// The full index set `0..n`, as a sample at rate `n/n`.
    pub fn full(n: usize) -> Self {
        Self {
            universe: n,
            rate_numerator: n,
            indices: (0..n).collect(),
            seed: 0,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn rate_numerator(&self) -> usize {
        self.rate_numerator
    }

    /// Inclusion probability `k/n`.
    pub fn rate(&self) -> f64 {
        self.rate_numerator as f64 / self.universe as f64
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Keeps each index of `0..n` independently with probability `k/n`.
pub fn sample_indices(n: usize, k: usize, seed: u64) -> Result<IndexSample> {
    if k == 0 || k > n {
        return Err(Error::InvalidRate { n, k });
    }
    let p = k as f64 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = (0..n).filter(|_| rng.random::<f64>() < p).collect();
    Ok(IndexSample {
        universe: n,
        rate_numerator: k,
        indices,
        seed,
    })
}

/// `true` iff `|S| ≤ 2k`; estimators abort when this fails.
pub fn oversize_guard(sample: &IndexSample, k: usize) -> bool {
    sample.len() <= 2 * k
}

/// Rejects samples the estimators cannot use: oversized or empty.
pub(crate) fn check_sample(sample: &IndexSample, k: usize) -> Result<()> {
    if !oversize_guard(sample, k) {
        return Err(Error::Aborted {
            size: sample.len(),
            limit: 2 * k,
        });
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(())
}

/// `A|_{rows × cols}`: entry `(j, l)` is `A[rows[j], cols[l]]`.
pub fn restrict_matrix(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Result<DenseMatrix> {
    check_range(rows, a.rows())?;
    check_range(cols, a.cols())?;
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut data = Vec::with_capacity(rows.len() * cols.len());
    for &i in rows {
        let row = a.row(i);
        data.extend(cols.iter().map(|&j| row[j]));
    }
    DenseMatrix::new(rows.len(), cols.len(), data)
}

/// `v|_S`: the components of `v` at the sampled indices, in index order.
pub fn restrict_vector(v: &[f64], indices: &[usize]) -> Result<Vec<f64>> {
    check_range(indices, v.len())?;
    Ok(indices.iter().map(|&i| v[i]).collect())
}

fn check_range(indices: &[usize], len: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= len) {
        Some(&index) => Err(Error::IndexOutOfRange { index, len }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_matrix;

    #[test]
    fn full_rate_keeps_everything() {
        let s = sample_indices(100, 100, 7).unwrap();
        assert_eq!(s.indices(), (0..100).collect::<Vec<_>>().as_slice());
        assert_eq!(sample_indices(1, 1, 3).unwrap().indices(), &[0]);
    }

    #[test]
    fn invalid_rates() {
        assert!(matches!(sample_indices(10, 0, 0), Err(Error::InvalidRate { .. })));
        assert!(matches!(sample_indices(10, 11, 0), Err(Error::InvalidRate { .. })));
    }

    #[test]
    fn indices_are_sorted_unique_and_reproducible() {
        let a = sample_indices(5000, 300, 42).unwrap();
        let b = sample_indices(5000, 300, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.indices().windows(2).all(|w| w[0] < w[1]));
        assert!(a.indices().iter().all(|&i| i < 5000));
        assert_ne!(a, sample_indices(5000, 300, 43).unwrap());
    }

    #[test]
    fn mean_size_over_seeds() {
        // binomial(10000, 0.05): mean 500, sd ≈ 21.8
        let total: usize = (0..200)
            .map(|seed| sample_indices(10_000, 500, seed).unwrap().len())
            .sum();
        let mean = total as f64 / 200.0;
        assert!((480.0..=520.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn guard_boundary() {
        let make = |len: usize| IndexSample {
            universe: 100,
            rate_numerator: 5,
            indices: (0..len).collect(),
            seed: 0,
        };
        assert!(oversize_guard(&make(10), 5));
        assert!(!oversize_guard(&make(11), 5));
    }

    #[test]
    fn guard_rarely_fails_at_k_512() {
        let failures = (0..1000)
            .filter(|&seed| !oversize_guard(&sample_indices(4096, 512, seed).unwrap(), 512))
            .count();
        assert!(failures < 10, "{failures} failures");
    }

    #[test]
    fn restriction_examples() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| (10 * i + j) as f64);
        let all = [0, 1, 2];
        assert_eq!(restrict_matrix(&a, &all, &all).unwrap(), a);
        let one = restrict_matrix(&a, &[1], &[2]).unwrap();
        assert_eq!(one.shape(), (1, 1));
        assert_eq!(one[(0, 0)], 12.0);
        assert!(matches!(
            restrict_matrix(&a, &[3], &[0]),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));

        assert_eq!(restrict_vector(&[9.0, 8.0, 7.0], &[0, 2]).unwrap(), vec![9.0, 7.0]);
        assert_eq!(restrict_vector(&[9.0, 8.0, 7.0], &all).unwrap(), vec![9.0, 8.0, 7.0]);
        assert!(restrict_vector(&[1.0], &[1]).is_err());
    }

    #[test]
    fn restriction_commutes_with_permutation() {
        let a = random_matrix(5, 5, 1);
        let row_perm = [3, 0, 4, 1, 2];
        let col_perm = [1, 4, 0, 2, 3];
        let p = a.permuted(&row_perm, &col_perm);
        // positions {0, 2} of the permuted matrix are original rows {3, 4}
        let sub_p = restrict_matrix(&p, &[0, 2], &[1, 3]).unwrap();
        let sub_a = restrict_matrix(&a, &[3, 4], &[4, 2]).unwrap();
        assert_eq!(sub_p, sub_a);
    }
}
