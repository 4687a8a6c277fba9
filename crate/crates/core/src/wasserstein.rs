//! 2-Wasserstein distances for the tapped channel family and the
//! mismatch-to-noise ratio.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channels::TapProfile;
use crate::{Error, Result};

/// `W2^2` between `CN(0, s1^2)` and `CN(0, s2^2)`: `(s1 - s2)^2`.
pub fn w2sq_complex_gaussian(sigma1: f64, sigma2: f64) -> Result<f64> {
    if sigma1 < 0.0 || sigma2 < 0.0 || !sigma1.is_finite() || !sigma2.is_finite() {
        return Err(Error::invalid("standard deviations must be finite and nonnegative"));
    }
    Ok((sigma1 - sigma2).powi(2))
}

/// `W2^2` between delays `-a1 log x` and `-a2 log x`, `x ~ U(0,1)`:
/// `2 (a1 - a2)^2`.
pub fn w2sq_exp_delays(alpha1: f64, alpha2: f64) -> Result<f64> {
    if alpha1 < 0.0 || alpha2 < 0.0 || !alpha1.is_finite() || !alpha2.is_finite() {
        return Err(Error::invalid("delay scales must be finite and nonnegative"));
    }
    Ok(2.0 * (alpha1 - alpha2).powi(2))
}

/// Gain and delay contributions of one tap index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapTerm {
    pub gain: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchReport {
    pub terms: Vec<TapTerm>,
    pub w2_squared: f64,
    pub sigma_pilot: Option<f64>,
    pub delta_mnr_squared: Option<f64>,
}

/// Sum of per-tap gain and delay distances between two profiles.
pub fn w2sq_profiles(p1: &TapProfile, p2: &TapProfile) -> Result<MismatchReport> {
    if p1.num_taps() != p2.num_taps() {
        return Err(Error::invalid("profiles must have the same number of taps"));
    }
    let mut terms = Vec::with_capacity(p1.num_taps());
    for i in 0..p1.num_taps() {
        terms.push(TapTerm {
            gain: w2sq_complex_gaussian(p1.sigmas()[i], p2.sigmas()[i])?,
            delay: w2sq_exp_delays(p1.alphas()[i], p2.alphas()[i])?,
        });
    }
    let w2_squared = terms.iter().map(|t| t.gain + t.delay).sum();
    Ok(MismatchReport {
        terms,
        w2_squared,
        sigma_pilot: None,
        delta_mnr_squared: None,
    })
}

/// `W2^2 / sigma_pilot^2`.
pub fn delta_mnr(p1: &TapProfile, p2: &TapProfile, sigma_pilot: f64) -> Result<MismatchReport> {
    if !(sigma_pilot > 0.0 && sigma_pilot.is_finite()) {
        return Err(Error::invalid("pilot noise standard deviation must be positive"));
    }
    let mut report = w2sq_profiles(p1, p2)?;
    report.sigma_pilot = Some(sigma_pilot);
    report.delta_mnr_squared = Some(report.w2_squared / (sigma_pilot * sigma_pilot));
    Ok(report)
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < 10 {
        return Err(Error::invalid("quadrature needs at least 10 nodes"));
    }
    Ok(())
}

/// Midpoint quadrature of `int_0^1 g(u) du` at nodes `(k + 1/2) / n`.
fn midpoint<F: FnMut(f64) -> Result<f64>>(nodes: usize, mut g: F) -> Result<f64> {
    check_nodes(nodes)?;
    let h = 1.0 / nodes as f64;
    let mut sum = 0.0;
    for k in 0..nodes {
        sum += g((k as f64 + 0.5) * h)?;
    }
    Ok(sum * h)
}

/// `int_0^1 |Qa(u) - Qb(u)|^2 du` for scalar quantile functions.
pub fn w2sq_scalar_quantile<A, B>(quantile_a: A, quantile_b: B, nodes: usize) -> Result<f64>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    midpoint(nodes, |u| {
        let (a, b) = (quantile_a(u), quantile_b(u));
        if a.is_finite() && b.is_finite() {
            Ok((a - b).powi(2))
        } else {
            Err(Error::NonFinite("quantile function"))
        }
    })
}

/// Mean squared difference of order statistics of two equal-length samples.
pub fn w2sq_empirical_1d(samples_a: &[f64], samples_b: &[f64]) -> Result<f64> {
    if samples_a.len() != samples_b.len() {
        return Err(Error::invalid("sample sets must have equal length"));
    }
    if samples_a.len() < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    if samples_a.iter().chain(samples_b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("empirical samples"));
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / a.len() as f64)
}

/// Midpoint quadrature of `int_0^1 log^2 t dt`, which equals 2.
pub fn log_sq_integral_check(nodes: usize) -> Result<f64> {
    midpoint(nodes, |t| Ok(t.ln().powi(2)))
}
