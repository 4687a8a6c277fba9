//! Channel estimators and the NMSE metric.

mod langevin;
mod linear;
mod metrics;
mod sparse;
mod tuning;

use alloc::vec::Vec;

use crate::linalg::CMat;

pub use langevin::{
    langevin_posterior, langevin_prior, likelihood_score, LangevinConfig, LikelihoodDenominator,
    ResidualSign,
};
pub use linear::{gaussian_posterior_mean, regularized_ls};
pub use metrics::{nmse, nmse_db, PERFECT_NMSE_DB};
pub use sparse::{fsad, lasso_beamspace, oversampled_dft, parseval_dft, soft_threshold, SparseParams};
pub use tuning::{tune_hyperparams, TuningResult, ValidationCase};

/// Output of an iterative estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub estimate: CMat,
    /// Updates executed.
    pub iterations: usize,
    /// `||Y - H P||_F` after every update.
    pub residual_trace: Vec<f64>,
    /// Objective after every update, for solvers that minimize one.
    pub objective_trace: Vec<f64>,
    pub score_evaluations: usize,
    pub likelihood_evaluations: usize,
}
