use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sqmx::cli::{
    abort_counts, exit_code, run_decompose, run_experiment_with, summarize, summary_path, write_summary_csv,
    Command, ExperimentConfig, InputFormat, InputSource, RecordWriter, EXIT_ALL_ABORTED,
};
use sqmx::decomp::write_report;
use sqmx::sampling::RNG_ID;
use sqmx::svest::SpectralMethod;
use sqmx::Error;

/// Sublinear sampling estimators for quadratic minima and singular values.
#[derive(Debug, Parser)]
#[command(name = "sqmx", version)]
struct Args {
    /// Command to run.
    #[arg(long = "cmd", value_enum)]
    command: Command,

    /// Input file. Omit and pass --synthetic-n to generate data instead.
    #[arg(long, required_unless_present = "synthetic_n")]
    input: Option<PathBuf>,

    /// Input file format.
    #[arg(long, value_enum, default_value = "csv")]
    format: InputFormat,

    /// Generate n synthetic points (spectral commands) or an n-dimensional
    /// strictly convex quadratic (quadmin commands).
    #[arg(long, conflicts_with = "input")]
    synthetic_n: Option<usize>,

    /// Dimension of synthetic points.
    #[arg(long, default_value_t = 10)]
    synthetic_d: usize,

    /// Sampling parameter; repeat or comma-separate for a sweep.
    #[arg(long = "k", value_delimiter = ',', default_values_t = [64])]
    k: Vec<usize>,

    /// Rank index for sv-t, number of eigenvalues for kpca-experiment.
    #[arg(long, default_value_t = 1)]
    t: usize,

    /// Threshold parameter for decompose, in (0, 1).
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,

    /// Ball radius for quadmin-ball.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,

    /// Trial seeds, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9])]
    seeds: Vec<u64>,

    /// RBF kernel bandwidth.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    /// Record file (JSON lines); the summary CSV is written beside it. For
    /// decompose, the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Use one sample for rows and columns.
    #[arg(long)]
    kpca: bool,

    /// Seed for synthetic data and for the reference power iteration.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,

    /// Power-iteration rounds for estimator and reference.
    #[arg(long, default_value_t = 20)]
    power_iterations: usize,

    /// Use exact SVDs for both the estimator and the reference.
    #[arg(long)]
    exact: bool,

    /// Generator identifier; must match the one this build was made with.
    #[arg(long, default_value = RNG_ID)]
    rng_id: String,
}

impl Args {
    fn config(&self) -> ExperimentConfig {
        let input = match (&self.input, self.synthetic_n) {
            (Some(path), _) => InputSource::File {
                path: path.clone(),
                format: self.format,
            },
            (None, Some(n)) => InputSource::Synthetic { n, d: self.synthetic_d },
            (None, None) => unreachable!("clap requires one of --input, --synthetic-n"),
        };
        let mut c = ExperimentConfig::new(self.command, input);
        c.k_values = self.k.clone();
        c.t = self.t;
        c.gamma = self.gamma;
        c.radius = self.radius;
        c.seeds = self.seeds.clone();
        c.sigma_kernel = self.sigma;
        c.output_path = self.out.clone();
        c.rng_id = self.rng_id.clone();
        c.data_seed = self.rng_seed;
        c.shared_sample = self.kpca;
        if self.exact {
            c.spectral = SpectralMethod::Exact;
            c.reference_iterations = 0;
        } else {
            c.spectral = SpectralMethod::PowerIteration {
                iterations: self.power_iterations,
            };
            c.reference_iterations = self.power_iterations.max(1);
        }
        c
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = args.config();
    match run(&config) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn run(config: &ExperimentConfig) -> Result<i32, Error> {
    config.validate()?;
    if config.command == Command::Decompose {
        let report = run_decompose(config)?;
        match &config.output_path {
            Some(path) => write_report(path, &report)?,
            None => println!("{}", serde_json::to_string_pretty(&report)?),
        }
        eprintln!(
            "kept rank {}, {} blocks, all bounds {}",
            report.kept_rank,
            report.block_count,
            if report.all_ok { "hold" } else { "NOT all hold" }
        );
        return Ok(0);
    }

    let mut writer = match &config.output_path {
        Some(path) => Some(RecordWriter::create(path)?),
        None => None,
    };
    let records = run_experiment_with(config, |r| match writer.as_mut() {
        Some(w) => w.write(r),
        None => Ok(()),
    })?;
    let summary = summarize(&records);
    if let Some(path) = &config.output_path {
        write_summary_csv(&summary_path(path), &summary)?;
    }

    println!("k,mean_rel_error,sd_rel_error,mean_time,n_trials,aborted_fraction,median_rel_error");
    for row in &summary {
        println!(
            "{},{:.6e},{:.6e},{:.6e},{},{:.4},{:.6e}",
            row.k, row.mean_rel_error, row.sd_rel_error, row.mean_time, row.n_trials, row.aborted_fraction,
            row.median_rel_error
        );
    }
    let (trials, aborted) = abort_counts(&records);
    if trials > 0 && aborted == trials {
        eprintln!("every trial aborted");
        return Ok(EXIT_ALL_ABORTED);
    }
    Ok(0)
}
