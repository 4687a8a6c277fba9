//! Closed-form mismatch reports with quadrature and Monte Carlo cross-checks.

use chanest_core::channels::TapProfile;
use chanest_core::rng::{derive_seed, split};
use chanest_core::wasserstein::{delta_mnr, w2sq_empirical_1d, w2sq_scalar_quantile};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{ExperimentConfig, TheoryConfig};
use crate::report::{format_float, Table};
use crate::{Error, Result};

pub const COLUMNS: [&str; 15] = [
    "scenario",
    "profile_a",
    "profile_b",
    "tap",
    "term",
    "sigma_pilot",
    "closed_form",
    "quadrature",
    "monte_carlo",
    "quad_abs_dev",
    "quad_rel_dev",
    "mc_abs_dev",
    "mc_rel_dev",
    "w2_squared",
    "delta_mnr_squared",
];

/// One term evaluated three ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub closed_form: f64,
    pub quadrature: f64,
    pub monte_carlo: f64,
}

impl CrossCheck {
    fn add(self, other: Self) -> Self {
        Self {
            closed_form: self.closed_form + other.closed_form,
            quadrature: self.quadrature + other.quadrature,
            monte_carlo: self.monte_carlo + other.monte_carlo,
        }
    }
}

/// `|x - ref|` and `|x - ref| / ref`; the relative deviation from a zero
/// reference is zero when `x` matches it exactly and infinite otherwise.
pub fn deviations(x: f64, reference: f64) -> (f64, f64) {
    let abs = (x - reference).abs();
    let rel = if reference != 0.0 {
        abs / reference.abs()
    } else if abs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    (abs, rel)
}

fn standard_normal_quantile() -> impl Fn(f64) -> f64 {
    let normal = Normal::standard();
    move |u| normal.inverse_cdf(u)
}

/// Quadrature of the gain term: real and imaginary parts are independent
/// `N(0, s^2 / 2)` pairs.
pub fn gain_quadrature(s1: f64, s2: f64, nodes: usize) -> Result<f64> {
    let q = standard_normal_quantile();
    let (a, b) = (s1 / 2f64.sqrt(), s2 / 2f64.sqrt());
    Ok(2.0 * w2sq_scalar_quantile(|u| a * q(u), |u| b * q(u), nodes)?)
}

/// Quadrature of the delay term for exponential delays of mean `a`.
pub fn delay_quadrature(a1: f64, a2: f64, nodes: usize) -> Result<f64> {
    Ok(w2sq_scalar_quantile(|u| -a1 * (-u).ln_1p(), |u| -a2 * (-u).ln_1p(), nodes)?)
}

/// Sorted-sample estimate of the gain term from independent draws.
pub fn gain_monte_carlo(s1: f64, s2: f64, draws: usize, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    for part in 0..2u64 {
        let mut rng_a = split(seed, 2 * part);
        let mut rng_b = split(seed, 2 * part + 1);
        let a: Vec<f64> = (0..draws).map(|_| s1 / 2f64.sqrt() * rng_a.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..draws).map(|_| s2 / 2f64.sqrt() * rng_b.sample::<f64, _>(StandardNormal)).collect();
        total += w2sq_empirical_1d(&a, &b)?;
    }
    Ok(total)
}

pub fn delay_monte_carlo(a1: f64, a2: f64, draws: usize, seed: u64) -> Result<f64> {
    let mut rng_a = split(seed, 4);
    let mut rng_b = split(seed, 5);
    let a: Vec<f64> = (0..draws).map(|_| a1 * rng_a.sample::<f64, _>(Exp1)).collect();
    let b: Vec<f64> = (0..draws).map(|_| a2 * rng_b.sample::<f64, _>(Exp1)).collect();
    Ok(w2sq_empirical_1d(&a, &b)?)
}

/// Per-tap `(gain, delay)` cross-checks between two profiles.
pub fn cross_check(
    p1: &TapProfile,
    p2: &TapProfile,
    theory: &TheoryConfig,
    seed_of: impl Fn(usize) -> u64,
) -> Result<Vec<(CrossCheck, CrossCheck)>> {
    let report = chanest_core::wasserstein::w2sq_profiles(p1, p2)?;
    let mut out = Vec::with_capacity(report.terms.len());
    for (i, term) in report.terms.iter().enumerate() {
        let (s1, s2) = (p1.sigmas()[i], p2.sigmas()[i]);
        let (a1, a2) = (p1.alphas()[i], p2.alphas()[i]);
        let seed = seed_of(i);
        out.push((
            CrossCheck {
                closed_form: term.gain,
                quadrature: gain_quadrature(s1, s2, theory.quadrature_nodes)?,
                monte_carlo: gain_monte_carlo(s1, s2, theory.monte_carlo_draws, seed)?,
            },
            CrossCheck {
                closed_form: term.delay,
                quadrature: delay_quadrature(a1, a2, theory.quadrature_nodes)?,
                monte_carlo: delay_monte_carlo(a1, a2, theory.monte_carlo_draws, seed)?,
            },
        ));
    }
    Ok(out)
}

/// Compares the first configured profile with each of the others.
pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    let theory = cfg.theory.as_ref().ok_or_else(|| Error::Config("missing [theory] table".into()))?;
    if theory.profiles.len() < 2 {
        return Err(Error::Config("theory needs at least two profiles".into()));
    }
    let profiles: Vec<TapProfile> = theory.profiles.iter().map(|p| p.profile()).collect::<Result<_>>()?;
    let tag = format!("{}/theory", cfg.scenario);
    let mut table = Table::new(&COLUMNS);
    let base = &profiles[0];
    for (j, other) in profiles.iter().enumerate().skip(1) {
        let checks = cross_check(base, other, theory, |tap| derive_seed(cfg.base_seed, &tag, j as u32, tap as u32))?;
        let total = checks
            .iter()
            .fold(CrossCheck { closed_form: 0.0, quadrature: 0.0, monte_carlo: 0.0 }, |acc, (g, d)| acc.add(*g).add(*d));
        let (name_a, name_b) = (theory.profiles[0].label(0), theory.profiles[j].label(j));
        for &sigma in &theory.sigma_pilot {
            let report = delta_mnr(base, other, sigma)?;
            let delta = report.delta_mnr_squared.expect("delta set");
            let mut emit = |tap: String, term: &str, c: CrossCheck| {
                let (qa, qr) = deviations(c.quadrature, c.closed_form);
                let (ma, mr) = deviations(c.monte_carlo, c.closed_form);
                table.push(vec![
                    cfg.scenario.clone(),
                    name_a.clone(),
                    name_b.clone(),
                    tap,
                    term.to_string(),
                    format_float(sigma),
                    format_float(c.closed_form),
                    format_float(c.quadrature),
                    format_float(c.monte_carlo),
                    format_float(qa),
                    format_float(qr),
                    format_float(ma),
                    format_float(mr),
                    format_float(report.w2_squared),
                    format_float(delta),
                ]);
            };
            for (i, (g, d)) in checks.iter().enumerate() {
                emit(i.to_string(), "gain", *g);
                emit(i.to_string(), "delay", *d);
            }
            emit("all".into(), "total", total);
        }
    }
    Ok(table)
}
