//! Singular-value estimates from a random submatrix.
//!
//! Rows and columns are sampled independently at rates `k/n` and `k/m`.
//! Squared singular values of the restricted matrix `B`, rescaled by
//! `nm / (|S_R| |S_C|)`, estimate the squared singular values of `A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, top_singular_values, DenseMatrix};
use crate::sampling::{check_sample, restrict_matrix, sample_indices, IndexSample};

/// How singular values of the restricted matrix are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralMethod {
    /// Full one-sided Jacobi SVD.
    Exact,
    /// Power iteration with deflation, started from a vector seeded with
    /// `seed + 2`.
    PowerIteration { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvConfig {
    pub method: SpectralMethod,
    /// Use one sample for rows and columns. Requires a square input; meant
    /// for symmetric matrices such as kernel Gram matrices.
    pub shared_sample: bool,
}

impl Default for SvConfig {
    fn default() -> Self {
        Self {
            method: SpectralMethod::Exact,
            shared_sample: false,
        }
    }
}

impl SvConfig {
    pub fn power(iterations: usize) -> Self {
        Self {
            method: SpectralMethod::PowerIteration { iterations },
            ..Self::default()
        }
    }

    pub fn with_shared_sample(mut self, shared: bool) -> Self {
        self.shared_sample = shared;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvEstimate {
    pub t: usize,
    pub estimate: f64,
    pub row_sample: IndexSample,
    pub col_sample: IndexSample,
    /// Rescaled residual `Λ̃_t`.
    pub lambda_t: f64,
    /// Rescaled residual `Λ̃_{t−1}`.
    pub lambda_t_minus_1: f64,
}

/// Estimates of `σ_1, …, σ_t` from a single pair of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// `estimates[ℓ − 1]` estimates `σ_ℓ`.
    pub estimates: Vec<f64>,
    /// `lambdas[r] = Λ̃_r` for `r = 0..=t`.
    pub lambdas: Vec<f64>,
    pub row_sample: IndexSample,
    pub col_sample: IndexSample,
}

impl SpectrumEstimate {
    /// The estimate of `σ_t` alone.
    pub fn get(&self, t: usize) -> Option<SvEstimate> {
        if t == 0 || t > self.estimates.len() {
            return None;
        }
        Some(SvEstimate {
            t,
            estimate: self.estimates[t - 1],
            row_sample: self.row_sample.clone(),
            col_sample: self.col_sample.clone(),
            lambda_t: self.lambdas[t],
            lambda_t_minus_1: self.lambdas[t - 1],
        })
    }
}

/// Squared Frobenius error of the best rank-`t` approximation of `B`, that
/// is `Σ_{ℓ>t} σ_ℓ(B)²`.
pub fn rank_residual(b: &DenseMatrix, t: usize) -> Result<f64> {
    let max = b.min_dim();
    if t > max {
        return Err(Error::RankTooLarge { t, max });
    }
    if t == 0 {
        return Ok(b.frobenius_norm_sq());
    }
    let sigma = singular_values(b)?;
    Ok(tail_sum(&sigma, t))
}

/// `Σ_{ℓ>t} σ_ℓ²`, summed from the smallest term up.
fn tail_sum(sigma: &[f64], t: usize) -> f64 {
    sigma[t..].iter().rev().map(|s| s * s).sum()
}

/// `sqrt(nm / (|S_R| |S_C|)) · σ_1(A|_{S_R × S_C})`.
pub fn estimate_sigma1(a: &DenseMatrix, k: usize, seed: u64, config: &SvConfig) -> Result<SvEstimate> {
    let (row_sample, col_sample) = draw_samples(a, k, seed, config)?;
    let b = restrict_matrix(a, row_sample.indices(), col_sample.indices())?;
    let scale = rescale(a, &row_sample, &col_sample);
    let sigma1 = match config.method {
        SpectralMethod::Exact => singular_values(&b)?[0],
        SpectralMethod::PowerIteration { iterations } => {
            top_singular_values(&b, 1, iterations, power_seed(seed))[0]
        }
    };
    let frob = b.frobenius_norm_sq();
    Ok(SvEstimate {
        t: 1,
        estimate: scale.sqrt() * sigma1,
        row_sample,
        col_sample,
        lambda_t: scale * (frob - sigma1 * sigma1).max(0.0),
        lambda_t_minus_1: scale * frob,
    })
}

/// `sqrt(max(Λ̃_{t−1} − Λ̃_t, 0))` with `Λ̃_r` the rescaled rank-`r` residual
/// of the restricted matrix.
pub fn estimate_sigma_t(a: &DenseMatrix, t: usize, k: usize, seed: u64, config: &SvConfig) -> Result<SvEstimate> {
    let spectrum = estimate_top_spectrum(a, t, k, seed, config)?;
    Ok(spectrum.get(t).expect("spectrum has t entries"))
}

/// Estimates of every `σ_ℓ`, `ℓ ≤ t`, sharing one pair of samples. Entry
/// `t` agrees with [`estimate_sigma_t`] for the same arguments.
pub fn estimate_top_spectrum(
    a: &DenseMatrix,
    t: usize,
    k: usize,
    seed: u64,
    config: &SvConfig,
) -> Result<SpectrumEstimate> {
    if t == 0 || t > k {
        return Err(Error::RankTooLarge { t, max: k });
    }
    if t > a.min_dim() {
        return Err(Error::RankTooLarge { t, max: a.min_dim() });
    }
    let (row_sample, col_sample) = draw_samples(a, k, seed, config)?;
    let b = restrict_matrix(a, row_sample.indices(), col_sample.indices())?;
    if t > b.min_dim() {
        return Err(Error::RankTooLarge { t, max: b.min_dim() });
    }
    let scale = rescale(a, &row_sample, &col_sample);
    let frob = b.frobenius_norm_sq();

    let mut residuals = Vec::with_capacity(t + 1);
    residuals.push(frob);
    match config.method {
        SpectralMethod::Exact => {
            let sigma = singular_values(&b)?;
            residuals.extend((1..=t).map(|r| tail_sum(&sigma, r)));
        }
        SpectralMethod::PowerIteration { iterations } => {
            let sigma = top_singular_values(&b, t, iterations, power_seed(seed));
            let mut captured = 0.0;
            for s in &sigma {
                captured += s * s;
                residuals.push((frob - captured).max(0.0));
            }
        }
    }
    let lambdas: Vec<f64> = residuals.iter().map(|r| scale * r).collect();
    let estimates = lambdas.windows(2).map(|w| (w[0] - w[1]).max(0.0).sqrt()).collect();
    Ok(SpectrumEstimate {
        estimates,
        lambdas,
        row_sample,
        col_sample,
    })
}

fn power_seed(seed: u64) -> u64 {
    seed.wrapping_add(2)
}

fn draw_samples(a: &DenseMatrix, k: usize, seed: u64, config: &SvConfig) -> Result<(IndexSample, IndexSample)> {
    let (n, m) = a.shape();
    if config.shared_sample {
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, actual: m });
        }
        let s = sample_indices(n, k, seed)?;
        check_sample(&s, k)?;
        return Ok((s.clone(), s));
    }
    let rows = sample_indices(n, k, seed)?;
    let cols = sample_indices(m, k, seed.wrapping_add(1))?;
    check_sample(&rows, k)?;
    check_sample(&cols, k)?;
    Ok((rows, cols))
}

fn rescale(a: &DenseMatrix, rows: &IndexSample, cols: &IndexSample) -> f64 {
    let (n, m) = a.shape();
    (n as f64 * m as f64) / (rows.len() as f64 * cols.len() as f64)
}
