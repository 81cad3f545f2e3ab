//! Sublinear-time estimators built on uniform index sampling.
//!
//! The crate samples a small principal (or rectangular) submatrix, solves the
//! small problem exactly, and rescales the answer:
//!
//! * [`quadmin`]: minimum of `⟨v,Av⟩ + n⟨v,diag(d)v⟩ + n⟨b,v⟩`, unconstrained
//!   or over a Euclidean ball, including an exact trust-region solver.
//! * [`svest`]: the largest and the t-th largest singular value.
//! * [`decomp`]: the structured-plus-pseudorandom split `A = A^str + A^psd`
//!   with verifiers for its norm and block-count bounds.
//! * [`oracles`]: slow brute-force references used by the test suites.
//! * [`cli`]: file formats, RBF Gram matrices and the experiment runner behind
//!   the `sqmx` binary.

pub mod cli;
pub mod decomp;
pub mod error;
pub mod linalg;
pub mod oracles;
pub mod quadmin;
pub mod sampling;
pub mod svest;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
