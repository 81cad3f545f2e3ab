//! Everything behind the `sqmx` binary: file formats, synthetic data, kernel
//! matrices and the experiment runner.

mod data;
mod experiment;
mod io;

pub use data::{quadratic_from_matrix, quadratic_to_matrix, rbf_gram, synthesize_gaussian, synthesize_quadratic};
pub use experiment::{
    abort_counts, emit_report, load_quadratic_input, load_spectral_input, mean, median, read_records,
    reference_spectrum, run_decompose, run_experiment, run_experiment_with, sample_sd, summarize,
    summary_path, write_summary_csv, Command, ExperimentConfig, InputFormat, InputSource, RecordWriter,
    ResultRecord, SummaryRow,
};
pub use io::{
    load_matrix, load_matrix_binary, load_matrix_csv, load_points, save_matrix_binary, save_matrix_csv,
    BINARY_MAGIC, BINARY_VERSION,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ALL_ABORTED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Process exit code for an error: 2 for bad input or configuration, 4 for
/// numerical failures, 3 when a sample was unusable.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } | Error::NotSymmetric { .. } | Error::NotStronglyConvex { .. } => EXIT_NUMERICAL,
        Error::Aborted { .. } | Error::EmptySample => EXIT_ALL_ABORTED,
        _ => EXIT_INPUT,
    }
}
