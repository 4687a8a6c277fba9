use crate::linalg::{frobenius_sq, CMat};
use crate::{Error, Result};

/// Returned by [`nmse_db`] when the estimate is exact.
pub const PERFECT_NMSE_DB: f64 = -300.0;

/// `||H_est - H||_F^2 / ||H||_F^2`.
pub fn nmse(estimate: &CMat, truth: &CMat) -> Result<f64> {
    crate::linalg::check_shape("nmse", estimate, truth.shape())?;
    let reference = frobenius_sq(truth);
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(frobenius_sq(&(estimate - truth)) / reference)
}

/// NMSE in dB, floored at [`PERFECT_NMSE_DB`].
pub fn nmse_db(estimate: &CMat, truth: &CMat) -> Result<f64> {
    let ratio = nmse(estimate, truth)?;
    if !ratio.is_finite() {
        return Err(Error::NonFinite("nmse"));
    }
    Ok(if ratio > 0.0 {
        (10.0 * libm::log10(ratio)).max(PERFECT_NMSE_DB)
    } else {
        PERFECT_NMSE_DB
    })
}
