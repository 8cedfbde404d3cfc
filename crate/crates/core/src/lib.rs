//! Principal differences analysis.
//!
//! Finds the unit direction `β` along which two multivariate samples differ
//! most, measured by the squared 2-Wasserstein distance between the
//! projected samples, optionally restricted to a few features:
//!
//! 1. [`relax::relax_solve`] solves a trace-one semidefinite relaxation by
//!    projected supergradient ascent on its transport dual;
//! 2. [`tighten::tighten`] refines the relaxed direction by projected
//!    gradient ascent on the exact nonconvex objective;
//! 3. [`inference`] wraps both into an analysis, a permutation test of
//!    `P_X = P_Y`, and cross-validated selection of the ℓ₁ penalty.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod error;
pub mod inference;
pub mod linalg;
pub mod matrix;
pub mod relax;
pub mod samples;
pub mod synth;
pub mod tighten;
pub mod transport;
pub mod wasserstein;

pub use error::{Error, Result};
pub use inference::{
    cross_validate_lambda, default_lambda_grid, pda_analyze, permutation_test, run_pipeline,
    AnalysisResult, CvResult, LambdaChoice, PermutationReport, PipelineConfig, TightenSettings,
};
pub use matrix::Matrix;
pub use relax::{relax_solve, BSupergradient, DualPair, DualScale, RelaxConfig, TraceOneMatrix};
pub use samples::{project, ProjectionVector, SampleSet};
pub use tighten::{tighten, TightenConfig};
pub use wasserstein::{gaussian_wasserstein, gradient, objective, quantile_coupling, wasserstein1d, GaussianSpec};
