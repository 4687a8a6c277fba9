use crate::channels::PilotSet;
use crate::linalg::{self, CMat, C64};
use crate::{Error, Result};

/// `Y P^H (P P^H + ridge I)^{-1}`.
pub fn regularized_ls(pilots: &PilotSet, ridge: f64) -> Result<CMat> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid("ridge must be finite and nonnegative"));
    }
    if ridge == 0.0 && pilots.num_pilots() < pilots.channel_shape().1 {
        return Err(Error::Singular);
    }
    let p = pilots.pilots();
    let rhs = pilots.received() * p.adjoint();
    let mut gram = p * p.adjoint();
    for k in 0..gram.nrows() {
        gram[(k, k)] += C64::new(ridge, 0.0);
    }
    linalg::solve_right_hpd(&gram, &rhs)
}

/// Posterior mean of `H` under the prior `CN(mean, v I)` and the pilot
/// likelihood: `(v Y P^H + s^2 M)(v P P^H + s^2 I)^{-1}` with `s^2` the
/// pilot noise power.
pub fn gaussian_posterior_mean(pilots: &PilotSet, mean: &CMat, variance: f64) -> Result<CMat> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::invalid("prior variance must be positive"));
    }
    linalg::check_shape("posterior mean prior", mean, pilots.channel_shape())?;
    let p = pilots.pilots();
    let s2 = pilots.noise_power();
    let rhs = pilots.received() * p.adjoint() * C64::new(variance, 0.0) + mean * C64::new(s2, 0.0);
    let mut gram = p * p.adjoint() * C64::new(variance, 0.0);
    for k in 0..gram.nrows() {
        gram[(k, k)] += C64::new(s2, 0.0);
    }
    linalg::solve_right_hpd(&gram, &rhs)
}
