//! Structured-plus-pseudorandom split `A = A^str + A^psd`.
//!
//! Singular components with `σ_ℓ ≥ γ·N·L` (`N = sqrt(nm)`, `L = ‖A‖_max`)
//! are kept. Their singular vectors are rounded entrywise onto a grid of
//! width `δ`, so that `A^str` is constant on the blocks of a row partition
//! times a column partition. `A^psd = A − A^str` then has spectral norm at
//! most `7γNL`.
//!
//! Rounding works on magnitudes: `|u_i|` drops to the lower edge of its
//! bucket `[tδ, (t+1)δ)` and the sign of `u_i` is put back. Entries with
//! `|u_i|` at or above the large threshold mark index `i` as large; large
//! indices are zeroed in every kept vector and share one cell.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{power_iteration_sigma1, svd, DenseMatrix};

/// Power-iteration rounds used by the spectral-norm verifier.
pub const VERIFY_ITERATIONS: usize = 200;
const VERIFY_SEED: u64 = 0x5eed;

/// Grid parameters derived from `γ` and the dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketingParams {
    pub gamma: f64,
    /// `γ⁸`.
    pub epsilon: f64,
    /// `1/γ²`.
    pub j: f64,
    /// Number of buckets `ceil((J/ε)^{3/2})`; kept as a float because it
    /// overflows any integer type for small `γ`.
    pub bucket_count: f64,
    pub delta_n: f64,
    pub delta_m: f64,
    pub large_threshold_n: f64,
    pub large_threshold_m: f64,
}

impl BucketingParams {
    pub fn new(gamma: f64, n: usize, m: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidGamma(gamma));
        }
        let epsilon = gamma.powi(8);
        let j = 1.0 / (gamma * gamma);
        let (rn, rm) = ((n as f64).sqrt(), (m as f64).sqrt());
        Ok(Self {
            gamma,
            epsilon,
            j,
            bucket_count: (j / epsilon).powf(1.5).ceil(),
            delta_n: epsilon / (j * rn),
            delta_m: epsilon / (j * rm),
            large_threshold_n: (j / epsilon).sqrt() / rn,
            large_threshold_m: (j / epsilon).sqrt() / rm,
        })
    }

    /// Whether the buckets cover `[0, large threshold)` on both sides.
    pub fn buckets_tile(&self) -> bool {
        let slack = 1.0 + 1e-12;
        self.delta_n * self.bucket_count * slack >= self.large_threshold_n
            && self.delta_m * self.bucket_count * slack >= self.large_threshold_m
    }

    /// The block-count bound `(1/γ¹⁰)^{3/γ²}`, as its natural logarithm.
    pub fn log_block_bound(&self) -> f64 {
        (3.0 / (self.gamma * self.gamma)) * (-10.0 * self.gamma.ln())
    }
}

/// Assignment of indices to cells. Cells are numbered in order of first
/// appearance and are never empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub cell_of: Vec<usize>,
    pub cell_sizes: Vec<usize>,
    /// The cell of the large indices, if there are any.
    pub large_cell: Option<usize>,
}

impl Partition {
    pub fn cell_count(&self) -> usize {
        self.cell_sizes.len()
    }

    fn from_labels<K: std::hash::Hash + Eq>(labels: impl IntoIterator<Item = Option<K>>) -> Self {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let mut cell_of = Vec::new();
        let mut cell_sizes: Vec<usize> = Vec::new();
        let mut large_cell = None;
        for label in labels {
            let id = match label {
                None => *large_cell.get_or_insert_with(|| {
                    cell_sizes.push(0);
                    cell_sizes.len() - 1
                }),
                Some(key) => *ids.entry(key).or_insert_with(|| {
                    cell_sizes.push(0);
                    cell_sizes.len() - 1
                }),
            };
            cell_sizes[id] += 1;
            cell_of.push(id);
        }
        Self {
            cell_of,
            cell_sizes,
            large_cell,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `‖A − A^str‖₂` by power iteration.
    pub psd_spectral_norm: f64,
    pub str_max_norm: f64,
    pub block_count: usize,
    /// `‖A'‖_max` for the unrounded kept part `A' = Σ_kept σ_ℓ u^ℓ (v^ℓ)ᵀ`.
    pub unrounded_max_norm: f64,
    pub kept_sigma_sum: f64,
    /// Per kept component, the number of large row and column entries.
    pub large_rows_per_component: Vec<usize>,
    pub large_cols_per_component: Vec<usize>,
    /// A singular value within `1e-8·σ_1` of the next one straddles the
    /// threshold, so the kept subspace is not well defined.
    pub degenerate_threshold: bool,
    /// The input was the zero matrix.
    pub zero_input: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub params: BucketingParams,
    /// `L = ‖A‖_max`.
    pub entry_bound: f64,
    /// `N = sqrt(nm)`.
    pub scale: f64,
    pub kept_sigmas: Vec<f64>,
    pub row_partition: Partition,
    pub col_partition: Partition,
    /// Value of `A^str` on block `(row cell, col cell)`, row-major.
    pub block_values: Vec<f64>,
    pub a_str: DenseMatrix,
    pub diagnostics: Diagnostics,
}

impl SpectralDecomposition {
    pub fn kept_rank(&self) -> usize {
        self.kept_sigmas.len()
    }

    pub fn block_value(&self, row_cell: usize, col_cell: usize) -> f64 {
        self.block_values[row_cell * self.col_partition.cell_count() + col_cell]
    }

    /// `A − A^str`.
    pub fn a_psd(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        a.sub(&self.a_str)
    }
}

/// Pass/fail record of one bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

impl BoundCheck {
    fn at_most(value: f64, bound: f64) -> Self {
        Self {
            value,
            bound,
            ok: value <= bound,
        }
    }
}

pub fn decompose(a: &DenseMatrix, gamma: f64) -> Result<SpectralDecomposition> {
    let (n, m) = a.shape();
    let params = BucketingParams::new(gamma, n, m)?;
    let entry_bound = a.max_norm();
    let scale = ((n * m) as f64).sqrt();
    if entry_bound == 0.0 {
        return Ok(trivial(params, n, m));
    }

    let full = svd(a)?;
    let threshold = gamma * scale * entry_bound;
    let sigma = &full.singular_values;
    let kept = sigma.iter().take_while(|&&s| s >= threshold).count();
    let degenerate_threshold = kept < sigma.len()
        && kept > 0
        && (sigma[kept - 1] - sigma[kept]).abs() <= 1e-8 * sigma[0];

    let us: Vec<Vec<f64>> = (0..kept).map(|l| full.left_vectors.column(l)).collect();
    let vs: Vec<Vec<f64>> = (0..kept).map(|l| full.right_vectors.column(l)).collect();
    let kept_sigmas = sigma[..kept].to_vec();

    let unrounded_max_norm = low_rank(&kept_sigmas, &us, &vs, n, m).max_norm();

    let rows = round_side(&us, n, params.delta_n, params.large_threshold_n);
    let cols = round_side(&vs, m, params.delta_m, params.large_threshold_m);
    let a_str = low_rank(&kept_sigmas, &rows.rounded, &cols.rounded, n, m);

    let row_partition = Partition::from_labels(rows.labels);
    let col_partition = Partition::from_labels(cols.labels);
    let block_values = block_values(&a_str, &row_partition, &col_partition);

    let mut decomposition = SpectralDecomposition {
        params,
        entry_bound,
        scale,
        kept_sigmas,
        row_partition,
        col_partition,
        block_values,
        a_str,
        diagnostics: Diagnostics {
            psd_spectral_norm: 0.0,
            str_max_norm: 0.0,
            block_count: 0,
            unrounded_max_norm,
            kept_sigma_sum: sigma[..kept].iter().sum(),
            large_rows_per_component: rows.large_counts,
            large_cols_per_component: cols.large_counts,
            degenerate_threshold,
            zero_input: false,
        },
    };
    decomposition.diagnostics.psd_spectral_norm = verify_psd_norm(a, &decomposition, gamma)?.value;
    decomposition.diagnostics.str_max_norm = decomposition.a_str.max_norm();
    decomposition.diagnostics.block_count = count_blocks(&decomposition);
    Ok(decomposition)
}

fn trivial(params: BucketingParams, n: usize, m: usize) -> SpectralDecomposition {
    let one_cell = |len: usize| Partition {
        cell_of: vec![0; len],
        cell_sizes: vec![len],
        large_cell: None,
    };
    SpectralDecomposition {
        params,
        entry_bound: 0.0,
        scale: ((n * m) as f64).sqrt(),
        kept_sigmas: Vec::new(),
        row_partition: one_cell(n),
        col_partition: one_cell(m),
        block_values: vec![0.0],
        a_str: DenseMatrix::zeros(n, m),
        diagnostics: Diagnostics {
            psd_spectral_norm: 0.0,
            str_max_norm: 0.0,
            block_count: 1,
            unrounded_max_norm: 0.0,
            kept_sigma_sum: 0.0,
            large_rows_per_component: Vec::new(),
            large_cols_per_component: Vec::new(),
            degenerate_threshold: false,
            zero_input: true,
        },
    }
}

struct RoundedSide {
    rounded: Vec<Vec<f64>>,
    /// `None` for large indices, else the per-component (bucket, sign) tuple.
    labels: Vec<Option<Vec<(u64, bool)>>>,
    large_counts: Vec<usize>,
}

/// Relative slack under which a magnitude counts as sitting on a bucket edge.
/// Singular vectors with exactly representable structure (constant vectors,
/// for one) land on edges and would otherwise split on rounding noise.
const EDGE_SNAP: f64 = 1e-9;

fn bucket_of(magnitude: f64, delta: f64) -> f64 {
    (magnitude / delta * (1.0 + EDGE_SNAP)).floor()
}

fn is_large(magnitude: f64, large: f64) -> bool {
    magnitude * (1.0 + EDGE_SNAP) >= large
}

fn round_side(vectors: &[Vec<f64>], dim: usize, delta: f64, large: f64) -> RoundedSide {
    let large_counts: Vec<usize> = vectors
        .iter()
        .map(|u| u.iter().filter(|x| is_large(x.abs(), large)).count())
        .collect();
    let is_large: Vec<bool> = (0..dim)
        .map(|i| vectors.iter().any(|u| is_large(u[i].abs(), large)))
        .collect();

    let mut rounded = vec![vec![0.0; dim]; vectors.len()];
    let mut labels = Vec::with_capacity(dim);
    for i in 0..dim {
        if is_large[i] {
            labels.push(None);
            continue;
        }
        let mut label = Vec::with_capacity(vectors.len());
        for (u, r) in vectors.iter().zip(rounded.iter_mut()) {
            let bucket = bucket_of(u[i].abs(), delta);
            let negative = u[i] < 0.0;
            let magnitude = bucket * delta;
            r[i] = if negative { -magnitude } else { magnitude };
            label.push((bucket as u64, negative));
        }
        labels.push(Some(label));
    }
    RoundedSide {
        rounded,
        labels,
        large_counts,
    }
}

fn low_rank(sigma: &[f64], us: &[Vec<f64>], vs: &[Vec<f64>], n: usize, m: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(n, m);
    for i in 0..n {
        let row = out.row_mut(i);
        for ((s, u), v) in sigma.iter().zip(us).zip(vs) {
            let coef = s * u[i];
            if coef == 0.0 {
                continue;
            }
            for (x, vj) in row.iter_mut().zip(v) {
                *x += coef * vj;
            }
        }
    }
    out
}

fn block_values(a_str: &DenseMatrix, rows: &Partition, cols: &Partition) -> Vec<f64> {
    let first = |p: &Partition| {
        let mut rep = vec![usize::MAX; p.cell_count()];
        for (i, &c) in p.cell_of.iter().enumerate() {
            if rep[c] == usize::MAX {
                rep[c] = i;
            }
        }
        rep
    };
    let row_rep = first(rows);
    let col_rep = first(cols);
    let mut values = Vec::with_capacity(row_rep.len() * col_rep.len());
    for &i in &row_rep {
        values.extend(col_rep.iter().map(|&j| a_str[(i, j)]));
    }
    values
}

/// `‖A − A^str‖₂` against `7γNL`.
pub fn verify_psd_norm(a: &DenseMatrix, d: &SpectralDecomposition, gamma: f64) -> Result<BoundCheck> {
    let psd = d.a_psd(a)?;
    let norm = power_iteration_sigma1(&psd, VERIFY_ITERATIONS, VERIFY_SEED);
    let bound = 7.0 * gamma * d.scale * a.max_norm();
    Ok(BoundCheck::at_most(norm, bound))
}

/// `‖A^str‖_max` against `2L/γ¹¹`.
pub fn verify_str_max(d: &SpectralDecomposition, l: f64, gamma: f64) -> BoundCheck {
    BoundCheck::at_most(d.a_str.max_norm(), 2.0 * l / gamma.powi(11))
}

/// Number of nonempty blocks, `#row cells × #col cells`.
pub fn count_blocks(d: &SpectralDecomposition) -> usize {
    d.row_partition.cell_count() * d.col_partition.cell_count()
}

/// Every entry of `A^str` equals the stored value of its block, bit for bit.
pub fn verify_block_constancy(d: &SpectralDecomposition) -> bool {
    let (n, m) = d.a_str.shape();
    (0..n).all(|i| {
        let rc = d.row_partition.cell_of[i];
        (0..m).all(|j| d.a_str[(i, j)] == d.block_value(rc, d.col_partition.cell_of[j]))
    })
}

/// All bound checks of a decomposition, for reports and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub gamma: f64,
    pub kept_rank: usize,
    pub kept_sigmas: Vec<f64>,
    pub row_cell_sizes: Vec<usize>,
    pub col_cell_sizes: Vec<usize>,
    pub block_count: usize,
    pub log_block_bound: f64,
    pub diagnostics: Diagnostics,
    pub kept_rank_check: BoundCheck,
    pub psd_norm_check: BoundCheck,
    pub str_max_check: BoundCheck,
    pub sigma_sum_check: BoundCheck,
    pub unrounded_max_check: BoundCheck,
    /// Largest per-component large set, against `εn/J` (rows) or `εm/J`.
    pub large_rows_check: BoundCheck,
    pub large_cols_check: BoundCheck,
    pub block_count_check: BoundCheck,
    pub block_constant: bool,
    pub all_ok: bool,
}

pub fn report(a: &DenseMatrix, d: &SpectralDecomposition) -> Result<DecompositionReport> {
    let p = &d.params;
    let gamma = p.gamma;
    let l = d.entry_bound;
    let (n, m) = a.shape();
    let max_of = |v: &[usize]| v.iter().copied().max().unwrap_or(0) as f64;
    let block_count = count_blocks(d);

    let kept_rank_check = BoundCheck::at_most(d.kept_rank() as f64, (1.0 / (gamma * gamma)).floor());
    let psd_norm_check = verify_psd_norm(a, d, gamma)?;
    let str_max_check = verify_str_max(d, l, gamma);
    let sigma_sum_check = BoundCheck::at_most(d.diagnostics.kept_sigma_sum, 2.0 * d.scale * l / gamma);
    let unrounded_max_check = BoundCheck::at_most(d.diagnostics.unrounded_max_norm, l / gamma.powi(3));
    let large_rows_check = BoundCheck::at_most(
        max_of(&d.diagnostics.large_rows_per_component),
        p.epsilon * n as f64 / p.j,
    );
    let large_cols_check = BoundCheck::at_most(
        max_of(&d.diagnostics.large_cols_per_component),
        p.epsilon * m as f64 / p.j,
    );
    let block_count_check = BoundCheck::at_most((block_count as f64).ln(), p.log_block_bound());
    let block_constant = verify_block_constancy(d);
    let all_ok = [
        kept_rank_check,
        psd_norm_check,
        str_max_check,
        sigma_sum_check,
        unrounded_max_check,
        large_rows_check,
        large_cols_check,
        block_count_check,
    ]
    .iter()
    .all(|c| c.ok)
        && block_constant;

    Ok(DecompositionReport {
        gamma,
        kept_rank: d.kept_rank(),
        kept_sigmas: d.kept_sigmas.clone(),
        row_cell_sizes: d.row_partition.cell_sizes.clone(),
        col_cell_sizes: d.col_partition.cell_sizes.clone(),
        block_count,
        log_block_bound: p.log_block_bound(),
        diagnostics: d.diagnostics.clone(),
        kept_rank_check,
        psd_norm_check,
        str_max_check,
        sigma_sum_check,
        unrounded_max_check,
        large_rows_check,
        large_cols_check,
        block_count_check,
        block_constant,
        all_ok,
    })
}

/// Writes the report as pretty-printed JSON.
pub fn write_report(path: &Path, report: &DecompositionReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_orthonormal, sign_matrix};

    #[test]
    fn params() {
        let p = BucketingParams::new(0.5, 100, 400).unwrap();
        assert_eq!(p.epsilon, 0.5f64.powi(8));
        assert_eq!(p.j, 4.0);
        assert!(p.buckets_tile());
        assert!((p.large_threshold_n - 1.0 / (0.5f64.powi(5) * 10.0)).abs() < 1e-12);
        for g in [0.0, 1.0, -0.2, f64::NAN] {
            assert!(matches!(BucketingParams::new(g, 4, 4), Err(Error::InvalidGamma(_))));
        }
        // tiny γ still yields usable arithmetic
        assert!(BucketingParams::new(0.01, 10, 10).unwrap().buckets_tile());
    }

    #[test]
    fn ones_matrix_single_block() {
        let l = 2.5;
        let a = DenseMatrix::filled(40, 40, l);
        for gamma in [0.2, 0.5, 0.9] {
            let d = decompose(&a, gamma).unwrap();
            assert_eq!(d.kept_rank(), 1);
            assert_eq!(count_blocks(&d), 1);
            assert!(d.row_partition.large_cell.is_none());
            assert!(verify_block_constancy(&d));
            let check = verify_psd_norm(&a, &d, gamma).unwrap();
            assert!(check.ok, "{check:?}");
            assert!(verify_str_max(&d, l, gamma).ok);
            // edge snapping may lift a magnitude by a relative 1e-9
            assert!(d.a_str.max_norm() <= l * (1.0 + 1e-8));
        }
    }

    #[test]
    fn random_signs_at_large_gamma_keep_nothing() {
        let a = sign_matrix(64, 64, 1);
        let d = decompose(&a, 0.9).unwrap();
        assert_eq!(d.kept_rank(), 0);
        assert_eq!(count_blocks(&d), 1);
        assert_eq!(d.a_str.max_norm(), 0.0);
        assert_eq!(d.a_psd(&a).unwrap(), a);
        let check = verify_psd_norm(&a, &d, 0.9).unwrap();
        assert!(check.value <= 0.9 * 64.0);
    }

    #[test]
    fn zero_matrix_is_trivial() {
        let d = decompose(&DenseMatrix::zeros(5, 7), 0.3).unwrap();
        assert!(d.diagnostics.zero_input);
        assert_eq!(count_blocks(&d), 1);
        assert_eq!(d.kept_rank(), 0);
    }

    #[test]
    fn spike_plus_noise_bounds() {
        let n = 96;
        let u = random_orthonormal(n, 2, 3);
        let v = random_orthonormal(n, 2, 4);
        let noise = sign_matrix(n, n, 5);
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            30.0 * u[(i, 0)] * v[(j, 0)] * n as f64 / 4.0 + 15.0 * u[(i, 1)] * v[(j, 1)] * n as f64 / 4.0
                + 0.2 * noise[(i, j)]
        });
        let d = decompose(&a, 0.3).unwrap();
        let r = report(&a, &d).unwrap();
        assert!(r.all_ok, "{r:#?}");
        assert!(r.block_constant);
        let back = d.a_psd(&a).unwrap().add(&d.a_str).unwrap();
        assert!(back.sub(&a).unwrap().max_norm() <= 1e-10 * d.entry_bound);
    }

    #[test]
    fn report_round_trips_through_json() {
        let a = DenseMatrix::filled(10, 12, 1.0);
        let d = decompose(&a, 0.4).unwrap();
        let r = report(&a, &d).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&path, &r).unwrap();
        let back: DecompositionReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
