//! Channel estimation by annealed Langevin posterior sampling.
//!
//! The crate is `no_std` (with `alloc`) and holds every numerical piece of the
//! toolkit:
//!
//! - [`channels`]: tapped-delay SISO channels, clustered ULA MIMO channels,
//!   QPSK pilots and noisy pilot observations `Y = H P + N`.
//! - [`scores`]: score functions of channel priors (analytic Gaussian, Gaussian
//!   mixture and the exact denoising-score-matching minimizer over an empirical
//!   training set), DSM/ESM loss evaluators and noise schedules.
//! - [`estimators`]: annealed Langevin posterior and prior sampling, beamspace
//!   Lasso, oversampled-dictionary (fsAD) recovery, regularized least squares,
//!   NMSE and grid-search tuning.
//! - [`wasserstein`]: closed-form and numerical 2-Wasserstein distances for the
//!   tapped channel family and the mismatch-to-noise ratio.
//! - [`linksim`]: SVD precoding, LMMSE equalization, Gray QAM and uncoded BER.
//!
//! IO, configuration and the command line live in the `chanest` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channels;
mod error;
pub mod estimators;
pub mod linalg;
pub mod linksim;
pub mod rng;
pub mod scores;
pub mod wasserstein;

pub use error::Error;
pub use linalg::{CMat, C64};

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;
