//! Experiment runner: sweeps `k` and seeds over one input, compares each
//! estimate with a full-matrix reference computed once, and writes reports.
//!
//! Reports come in two files. The record file holds one JSON object per line
//! with the fields of [`ResultRecord`]. The summary CSV has one row per `k`
//! with columns `k, mean_rel_error, sd_rel_error, mean_time, n_trials,
//! aborted_fraction, median_rel_error`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::data::{quadratic_from_matrix, rbf_gram, synthesize_gaussian, synthesize_quadratic};
use super::io::{load_matrix, load_points};
use crate::decomp::{decompose, report, DecompositionReport};
use crate::error::{Error, Result};
use crate::linalg::{power_iteration_sigma1, singular_values, top_singular_values, DenseMatrix};
use crate::quadmin::{approximate_min, approximate_min_ball, solve_ball, solve_unconstrained, QuadraticProblem, SolutionStatus};
use crate::sampling::RNG_ID;
use crate::svest::{estimate_sigma1, estimate_top_spectrum, SpectralMethod, SvConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Quadmin,
    QuadminBall,
    SvTop,
    SvT,
    Decompose,
    KpcaExperiment,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Quadmin => "quadmin",
            Command::QuadminBall => "quadmin-ball",
            Command::SvTop => "sv-top",
            Command::SvT => "sv-t",
            Command::Decompose => "decompose",
            Command::KpcaExperiment => "kpca-experiment",
        }
    }

    fn is_quadratic(self) -> bool {
        matches!(self, Command::Quadmin | Command::QuadminBall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// Matrix as CSV.
    Csv,
    /// Matrix in the SQMX binary layout.
    Bin,
    /// Data points as CSV; the kernel Gram matrix is built from them.
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputSource {
    File { path: PathBuf, format: InputFormat },
    /// Gaussian points in `ℝ^d` for the spectral commands, a random strictly
    /// convex instance of size `n` for the quadratic ones.
    Synthetic { n: usize, d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub input: InputSource,
    pub k_values: Vec<usize>,
    pub t: usize,
    pub gamma: f64,
    pub radius: f64,
    pub seeds: Vec<u64>,
    pub sigma_kernel: f64,
    pub output_path: Option<PathBuf>,
    pub rng_id: String,
    /// Seed for synthetic data and for the reference power iteration.
    pub data_seed: u64,
    /// One sample for rows and columns (kernel-PCA mode).
    pub shared_sample: bool,
    /// How the estimators compute singular values of the sampled matrix.
    pub spectral: SpectralMethod,
    /// Power-iteration rounds for the full-matrix reference; 0 uses an
    /// exact SVD instead.
    pub reference_iterations: usize,
}

impl ExperimentConfig {
    /// Defaults: `k = 64`, `t = 1`, seeds `0..10`, `σ = 1`, 20 power
    /// iterations for both estimator and reference.
    pub fn new(command: Command, input: InputSource) -> Self {
        Self {
            command,
            input,
            k_values: vec![64],
            t: 1,
            gamma: 0.3,
            radius: 1.0,
            seeds: (0..10).collect(),
            sigma_kernel: 1.0,
            output_path: None,
            rng_id: RNG_ID.to_string(),
            data_seed: 0,
            shared_sample: false,
            spectral: SpectralMethod::PowerIteration { iterations: 20 },
            reference_iterations: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.rng_id != RNG_ID {
            return Err(Error::Config(format!("unsupported rng id {:?}; this build uses {RNG_ID:?}", self.rng_id)));
        }
        if self.command != Command::Decompose {
            if self.k_values.is_empty() {
                return bad("at least one k is required");
            }
            if self.k_values.contains(&0) {
                return bad("every k must be at least 1");
            }
            if self.seeds.is_empty() {
                return bad("at least one seed is required");
            }
        }
        if matches!(self.command, Command::SvT | Command::KpcaExperiment) {
            if self.t == 0 {
                return bad("t must be at least 1");
            }
            if let Some(&k) = self.k_values.iter().find(|&&k| k < self.t) {
                return Err(Error::Config(format!("t = {} exceeds k = {k}", self.t)));
            }
        }
        if self.command == Command::QuadminBall && !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidRadius(self.radius));
        }
        if !(self.sigma_kernel > 0.0 && self.sigma_kernel.is_finite()) {
            return Err(Error::InvalidSigma(self.sigma_kernel));
        }
        if let InputSource::Synthetic { n, d } = self.input {
            if n == 0 || d == 0 {
                return bad("synthetic input needs n, d >= 1");
            }
        }
        if self.command.is_quadratic() {
            if let InputSource::File { format: InputFormat::Points, .. } = self.input {
                return bad("quadratic commands read a matrix [A | d | b], not points");
            }
        }
        Ok(())
    }

    fn describe_input(&self) -> String {
        match &self.input {
            InputSource::File { path, format } => format!("{}:{}", format_name(*format), path.display()),
            InputSource::Synthetic { n, d } if self.command.is_quadratic() => {
                format!("synthetic-quadratic:n={n}:seed={}", self.data_seed)
            }
            InputSource::Synthetic { n, d } => {
                format!("synthetic-gaussian:n={n}:d={d}:sigma={}:seed={}", self.sigma_kernel, self.data_seed)
            }
        }
    }

    fn sv_config(&self) -> SvConfig {
        SvConfig {
            method: self.spectral,
            shared_sample: self.shared_sample,
        }
    }
}

fn format_name(f: InputFormat) -> &'static str {
    match f {
        InputFormat::Csv => "csv",
        InputFormat::Bin => "bin",
        InputFormat::Points => "points",
    }
}

/// One trial outcome (one estimate) of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub input: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Rank index of the estimate; 0 for the quadratic commands.
    pub t: usize,
    pub seed: u64,
    /// `None` when the trial aborted.
    pub estimate: Option<f64>,
    pub reference: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    pub wall_time_seconds: f64,
    pub aborted: bool,
    pub sample_rows: usize,
    pub sample_cols: usize,
    pub rng_id: String,
}

/// Loads the spectral input: a matrix file, or the RBF Gram matrix of a
/// point file or of synthetic Gaussian points.
pub fn load_spectral_input(config: &ExperimentConfig) -> Result<DenseMatrix> {
    match &config.input {
        InputSource::File { path, format: InputFormat::Points } => {
            rbf_gram(&load_points(path)?, config.sigma_kernel)
        }
        InputSource::File { path, .. } => load_matrix(path),
        InputSource::Synthetic { n, d } => {
            rbf_gram(&synthesize_gaussian(*n, *d, config.data_seed), config.sigma_kernel)
        }
    }
}

pub fn load_quadratic_input(config: &ExperimentConfig) -> Result<QuadraticProblem> {
    match &config.input {
        InputSource::File { path, .. } => quadratic_from_matrix(&load_matrix(path)?),
        InputSource::Synthetic { n, .. } => Ok(synthesize_quadratic(*n, config.data_seed)),
    }
}

/// The `t` largest singular values of the full matrix, by the configured
/// reference method.
pub fn reference_spectrum(a: &DenseMatrix, t: usize, config: &ExperimentConfig) -> Result<Vec<f64>> {
    if config.reference_iterations == 0 {
        Ok(singular_values(a)?.into_iter().take(t).collect())
    } else if t == 1 {
        Ok(vec![power_iteration_sigma1(a, config.reference_iterations, config.data_seed)])
    } else {
        Ok(top_singular_values(a, t, config.reference_iterations, config.data_seed))
    }
}

/// Runs every `(k, seed)` trial, handing each record to `on_record` as soon
/// as it exists so callers can persist partial results.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut on_record: impl FnMut(&ResultRecord) -> Result<()>,
) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let mut records = Vec::new();
    let mut emit = |r: ResultRecord| -> Result<()> {
        on_record(&r)?;
        records.push(r);
        Ok(())
    };
    let base = RecordBase {
        command: config.command.name().to_string(),
        input: config.describe_input(),
        rng_id: config.rng_id.clone(),
    };

    match config.command {
        Command::Decompose => {
            return Err(Error::Config("decompose produces a report, not trial records".into()));
        }
        Command::Quadmin | Command::QuadminBall => {
            let problem = load_quadratic_input(config)?;
            let n = problem.n();
            let nn = (n * n) as f64;
            let reference = if config.command == Command::Quadmin {
                let s = solve_unconstrained(&problem)?;
                (s.status == SolutionStatus::Finite).then_some(s.value / nn)
            } else {
                Some(solve_ball(&problem, config.radius)?.value / nn)
            };
            for &k in &config.k_values {
                for &seed in &config.seeds {
                    let start = Instant::now();
                    let outcome = if config.command == Command::Quadmin {
                        approximate_min(&problem, k, seed).map(|s| (s.estimate, s.sample.len()))
                    } else {
                        approximate_min_ball(&problem, config.radius, k, seed).map(|s| (s.estimate, s.sample.len()))
                    };
                    let elapsed = start.elapsed().as_secs_f64();
                    let trial = Trial { n, m: n, k, t: 0, seed, elapsed };
                    emit(match outcome {
                        Ok((estimate, size)) => {
                            let err = reference.map(|r| relative_to(estimate, r, r.abs()));
                            base.finished(trial, estimate, reference, err, size, size)
                        }
                        Err(e) if e.is_abort() => base.aborted(trial),
                        Err(e) => return Err(e),
                    })?;
                }
            }
        }
        Command::SvTop | Command::SvT | Command::KpcaExperiment => {
            let a = load_spectral_input(config)?;
            let (n, m) = a.shape();
            let t = if config.command == Command::SvTop { 1 } else { config.t };
            if t > a.min_dim() {
                return Err(Error::RankTooLarge { t, max: a.min_dim() });
            }
            let reference = reference_spectrum(&a, t, config)?;
            let sv = config.sv_config();
            for &k in &config.k_values {
                for &seed in &config.seeds {
                    let start = Instant::now();
                    let outcome = match config.command {
                        Command::SvTop => estimate_sigma1(&a, k, seed, &sv).map(|e| {
                            (vec![e.estimate], e.row_sample.len(), e.col_sample.len())
                        }),
                        _ => estimate_top_spectrum(&a, t, k, seed, &sv)
                            .map(|s| (s.estimates, s.row_sample.len(), s.col_sample.len())),
                    };
                    let elapsed = start.elapsed().as_secs_f64();
                    let sv_trial = |ell| Trial { n, m, k, t: ell, seed, elapsed };
                    match outcome {
                        Ok((estimates, rows, cols)) => match config.command {
                            Command::KpcaExperiment => {
                                for (ell, (&est, &r)) in estimates.iter().zip(&reference).enumerate() {
                                    let err = relative_to(est, r, reference[0]);
                                    emit(base.finished(sv_trial(ell + 1), est, Some(r), Some(err), rows, cols))?;
                                }
                            }
                            _ => {
                                let (est, r) = (estimates[t - 1], reference[t - 1]);
                                let err = relative_to(est, r, r);
                                emit(base.finished(sv_trial(t), est, Some(r), Some(err), rows, cols))?;
                            }
                        },
                        Err(e) if e.is_abort() || matches!(e, Error::RankTooLarge { .. }) => {
                            let ells: Vec<usize> = if config.command == Command::KpcaExperiment {
                                (1..=t).collect()
                            } else {
                                vec![t]
                            };
                            for ell in ells {
                                emit(base.aborted(sv_trial(ell)))?;
                            }
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(records)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    run_experiment_with(config, |_| Ok(()))
}

/// Decomposes the spectral input at the configured `γ` and checks every bound.
pub fn run_decompose(config: &ExperimentConfig) -> Result<DecompositionReport> {
    config.validate()?;
    let a = load_spectral_input(config)?;
    let d = decompose(&a, config.gamma)?;
    report(&a, &d)
}

struct RecordBase {
    command: String,
    input: String,
    rng_id: String,
}

#[derive(Clone, Copy)]
struct Trial {
    n: usize,
    m: usize,
    k: usize,
    t: usize,
    seed: u64,
    elapsed: f64,
}

impl RecordBase {
    fn record(&self, trial: Trial) -> ResultRecord {
        ResultRecord {
            command: self.command.clone(),
            input: self.input.clone(),
            n: trial.n,
            m: trial.m,
            k: trial.k,
            t: trial.t,
            seed: trial.seed,
            estimate: None,
            reference: None,
            abs_error: None,
            rel_error: None,
            wall_time_seconds: trial.elapsed,
            aborted: false,
            sample_rows: 0,
            sample_cols: 0,
            rng_id: self.rng_id.clone(),
        }
    }

    fn finished(
        &self,
        trial: Trial,
        estimate: f64,
        reference: Option<f64>,
        errors: Option<(f64, f64)>,
        rows: usize,
        cols: usize,
    ) -> ResultRecord {
        ResultRecord {
            estimate: Some(estimate),
            reference,
            abs_error: errors.map(|e| e.0),
            rel_error: errors.map(|e| e.1),
            sample_rows: rows,
            sample_cols: cols,
            ..self.record(trial)
        }
    }

    fn aborted(&self, trial: Trial) -> ResultRecord {
        ResultRecord {
            aborted: true,
            ..self.record(trial)
        }
    }
}

/// `(|est − ref|, |est − ref| / denom)`; a zero denominator leaves the
/// absolute error.
fn relative_to(estimate: f64, reference: f64, denom: f64) -> (f64, f64) {
    let abs = (estimate - reference).abs();
    let rel = if denom != 0.0 { abs / denom.abs() } else { abs };
    (abs, rel)
}

/// One row of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub k: usize,
    pub mean_rel_error: f64,
    pub sd_rel_error: f64,
    pub mean_time: f64,
    pub n_trials: usize,
    pub aborted_fraction: f64,
    pub median_rel_error: f64,
}

/// Per-`k` statistics. Errors are pooled over all non-aborted records; a
/// trial is one `(k, seed)` pair, timed once.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    #[derive(Default)]
    struct Acc {
        errors: Vec<f64>,
        trials: BTreeMap<u64, (f64, bool)>,
    }
    let mut by_k: BTreeMap<usize, Acc> = BTreeMap::new();
    for r in records {
        let acc = by_k.entry(r.k).or_default();
        acc.trials.insert(r.seed, (r.wall_time_seconds, r.aborted));
        if let (false, Some(e)) = (r.aborted, r.rel_error) {
            acc.errors.push(e);
        }
    }
    by_k.into_iter()
        .map(|(k, acc)| {
            let n_trials = acc.trials.len();
            let aborted = acc.trials.values().filter(|t| t.1).count();
            let times: Vec<f64> = acc.trials.values().filter(|t| !t.1).map(|t| t.0).collect();
            SummaryRow {
                k,
                mean_rel_error: mean(&acc.errors),
                sd_rel_error: sample_sd(&acc.errors),
                mean_time: mean(&times),
                n_trials,
                aborted_fraction: aborted as f64 / n_trials as f64,
                median_rel_error: median(&acc.errors),
            }
        })
        .collect()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = s.len() / 2;
    if s.len() % 2 == 1 {
        s[mid]
    } else {
        0.5 * (s[mid - 1] + s[mid])
    }
}

/// The summary CSV written next to a record file.
pub fn summary_path(records_path: &Path) -> PathBuf {
    let mut p = records_path.to_path_buf();
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    p.set_file_name(format!("{stem}.summary.csv"));
    p
}

/// Line-delimited JSON writer that flushes after every record.
pub struct RecordWriter {
    out: BufWriter<File>,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write(&mut self, record: &ResultRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record([
        "k",
        "mean_rel_error",
        "sd_rel_error",
        "mean_time",
        "n_trials",
        "aborted_fraction",
        "median_rel_error",
    ])
    .map_err(csv_io)?;
    for r in rows {
        w.serialize((
            r.k,
            r.mean_rel_error,
            r.sd_rel_error,
            r.mean_time,
            r.n_trials,
            r.aborted_fraction,
            r.median_rel_error,
        ))
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Writes the record file at `path` and the summary CSV beside it.
pub fn emit_report(records: &[ResultRecord], path: &Path) -> Result<PathBuf> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    let csv_path = summary_path(path);
    write_summary_csv(&csv_path, &summarize(records))?;
    Ok(csv_path)
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Distinct `(k, seed)` trials and how many of them aborted.
pub fn abort_counts(records: &[ResultRecord]) -> (usize, usize) {
    let trials: BTreeSet<(usize, u64)> = records.iter().map(|r| (r.k, r.seed)).collect();
    let aborted: BTreeSet<(usize, u64)> = records.iter().filter(|r| r.aborted).map(|r| (r.k, r.seed)).collect();
    (trials.len(), aborted.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(command: Command, n: usize) -> ExperimentConfig {
        ExperimentConfig::new(command, InputSource::Synthetic { n, d: 3 })
    }

    #[test]
    fn validation() {
        let mut c = synthetic(Command::SvT, 50);
        assert!(c.validate().is_ok());
        c.k_values.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = synthetic(Command::SvT, 50);
        c.t = 100;
        assert!(c.validate().is_err());
        let mut c = synthetic(Command::SvTop, 50);
        c.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = synthetic(Command::SvTop, 50);
        c.rng_id = "pcg64".into();
        assert!(c.validate().is_err());
        let mut c = synthetic(Command::KpcaExperiment, 50);
        c.sigma_kernel = 0.0;
        assert!(matches!(c.validate(), Err(Error::InvalidSigma(_))));
    }

    #[test]
    fn sv_top_full_sample_matches_reference() {
        let mut c = synthetic(Command::SvTop, 40);
        c.k_values = vec![40];
        c.seeds = vec![1, 2];
        c.spectral = SpectralMethod::Exact;
        c.reference_iterations = 0;
        let records = run_experiment(&c).unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert!(!r.aborted);
            assert!(r.rel_error.unwrap() < 1e-10);
        }
    }

    #[test]
    fn kpca_emits_one_record_per_rank() {
        let mut c = synthetic(Command::KpcaExperiment, 60);
        c.k_values = vec![8, 16];
        c.seeds = vec![0, 1, 2];
        c.t = 4;
        let records = run_experiment(&c).unwrap();
        assert_eq!(records.len(), 2 * 3 * 4);
        let summary = summarize(&records);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].n_trials, 3);
    }

    #[test]
    fn quadmin_runs() {
        let mut c = synthetic(Command::Quadmin, 30);
        c.k_values = vec![10, 30];
        c.seeds = vec![5];
        let records = run_experiment(&c).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records[1].rel_error.unwrap() < 1e-9);
        c.command = Command::QuadminBall;
        c.radius = 2.0;
        let records = run_experiment(&c).unwrap();
        assert!(records[1].rel_error.unwrap() < 1e-9);
    }

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let csv_path = emit_report(&[], &path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(text.lines().count(), 1);

        let mut c = synthetic(Command::SvT, 30);
        c.k_values = vec![10];
        c.seeds = vec![3];
        c.t = 2;
        let records = run_experiment(&c).unwrap();
        emit_report(&records, &path).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
        let text = std::fs::read_to_string(summary_path(&path)).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((sample_sd(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(summary_path(Path::new("/x/out.jsonl")), PathBuf::from("/x/out.summary.csv"));
    }
}
