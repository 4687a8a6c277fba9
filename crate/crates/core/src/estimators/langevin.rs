//! Annealed Langevin dynamics over a pluggable prior score.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::EstimatorReport;
use crate::channels::PilotSet;
use crate::linalg::{self, CMat, C64};
use crate::rng::{complex_normal, complex_normal_matrix, seeded};
use crate::scores::{NoiseSchedule, ScoreFunction};
use crate::{Error, Result};

/// Variance in the denominator of the likelihood score at level `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LikelihoodDenominator {
    /// `sigma_pilot^2 + sigma_i^2`.
    #[default]
    NoisePlusLevel,
    /// `sigma_pilot^2 + 2 beta alpha_i sigma_i^2`.
    NoisePlusAnnealing,
}

/// Orientation of the pilot residual inside the likelihood score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualSign {
    /// `(Y - H P) P^H`, ascent on the log-likelihood.
    #[default]
    DataMinusModel,
    /// `(H P - Y) P^H`. Descends the log-likelihood; kept as a mutation hook
    /// for self-tests.
    ModelMinusData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangevinConfig {
    pub alpha0: f64,
    pub beta: f64,
    /// Per-level step decay `r`, `alpha_i = alpha0 r^i`.
    pub decay: f64,
    pub schedule: NoiseSchedule,
    pub inner_steps: usize,
    pub seed: u64,
    pub denominator: LikelihoodDenominator,
    pub residual_sign: ResidualSign,
}

impl LangevinConfig {
    pub fn new(
        alpha0: f64,
        beta: f64,
        decay: f64,
        schedule: NoiseSchedule,
        inner_steps: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            alpha0,
            beta,
            decay,
            schedule,
            inner_steps,
            seed,
            denominator: LikelihoodDenominator::default(),
            residual_sign: ResidualSign::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::invalid("alpha0 must be positive"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta must be positive"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::invalid("decay must lie in (0, 1)"));
        }
        if self.inner_steps == 0 {
            return Err(Error::invalid("inner_steps must be at least 1"));
        }
        Ok(())
    }

    /// Step sizes `alpha0 r^i` for every level, built by repeated
    /// multiplication.
    pub fn step_sizes(&self) -> Vec<f64> {
        let mut steps = Vec::with_capacity(self.schedule.len());
        let mut step = self.alpha0;
        for _ in 0..self.schedule.len() {
            steps.push(step);
            step *= self.decay;
        }
        steps
    }

    /// Step size at level `level`, identical to `step_sizes()[level]`.
    pub fn step_at(&self, level: usize) -> f64 {
        (0..level).fold(self.alpha0, |s, _| s * self.decay)
    }

    /// Total number of updates, `L M`.
    pub fn total_updates(&self) -> usize {
        self.schedule.len() * self.inner_steps
    }

    fn denominator(&self, noise_power: f64, sigma: f64, step: f64) -> f64 {
        match self.denominator {
            LikelihoodDenominator::NoisePlusLevel => noise_power + sigma * sigma,
            LikelihoodDenominator::NoisePlusAnnealing => {
                noise_power + 2.0 * self.beta * step * sigma * sigma
            }
        }
    }
}

/// Pilot likelihood score at `h` for noise level `sigma` and level index
/// `level`: `(Y - H P) P^H / (sigma_pilot^2 + sigma^2)` by default.
pub fn likelihood_score(
    h: &CMat,
    pilots: &PilotSet,
    sigma: f64,
    config: &LangevinConfig,
    level: usize,
) -> Result<CMat> {
    linalg::check_shape("likelihood score", h, pilots.channel_shape())?;
    let step = config.step_at(level);
    let den = config.denominator(pilots.noise_power(), sigma, step);
    if !(den > 0.0) {
        return Err(Error::invalid("likelihood denominator must be positive"));
    }
    let residual = pilots.received() - h * pilots.pilots();
    let mut out = residual * pilots.pilots().adjoint() / C64::new(den, 0.0);
    if config.residual_sign == ResidualSign::ModelMinusData {
        out.neg_mut();
    }
    Ok(out)
}

fn add_noise<R: rand::Rng + ?Sized>(h: &mut CMat, scale: f64, rng: &mut R) {
    for x in h.iter_mut() {
        *x += complex_normal(rng, 1.0) * scale;
    }
}

/// Posterior sampling: starting from `H ~ CN(0, I)`, runs `M` updates at each
/// level `i` of
/// `H += a_i lik(H) + a_i s(H, sigma_i) + sqrt(2 beta a_i) sigma_i zeta`,
/// `a_i = alpha0 r^i`, `zeta ~ CN(0, I)`.
pub fn langevin_posterior<S>(pilots: &PilotSet, score: &S, config: &LangevinConfig) -> Result<EstimatorReport>
where
    S: ScoreFunction + ?Sized,
{
    config.validate()?;
    let (rows, cols) = pilots.channel_shape();
    let p = pilots.pilots();
    let y = pilots.received();
    let yph = y * p.adjoint();
    let pph = p * p.adjoint();
    let sign = match config.residual_sign {
        ResidualSign::DataMinusModel => 1.0,
        ResidualSign::ModelMinusData => -1.0,
    };

    let mut rng = seeded(config.seed);
    let mut h = complex_normal_matrix(&mut rng, rows, cols, 1.0);
    let mut prior = linalg::zeros(rows, cols);
    let mut lik = linalg::zeros(rows, cols);
    let mut residual_trace = Vec::with_capacity(config.total_updates());

    for (level, (&sigma, step)) in config
        .schedule
        .levels()
        .iter()
        .zip(config.step_sizes())
        .enumerate()
    {
        let den = config.denominator(pilots.noise_power(), sigma, step);
        if !(den > 0.0) {
            return Err(Error::invalid("likelihood denominator must be positive"));
        }
        let lik_scale = sign * step / den;
        let noise_scale = (2.0 * config.beta * step).sqrt() * sigma;
        for inner in 0..config.inner_steps {
            lik.copy_from(&yph);
            lik.gemm(C64::new(-1.0, 0.0), &h, &pph, C64::new(1.0, 0.0));
            score.evaluate_into(&h, sigma, &mut prior)?;
            linalg::axpy(&mut h, lik_scale, &lik);
            linalg::axpy(&mut h, step, &prior);
            add_noise(&mut h, noise_scale, &mut rng);
            if !linalg::is_finite(&h) {
                return Err(Error::Diverged { level, step: inner });
            }
            residual_trace.push(linalg::frobenius_sq(&(y - &h * p)).sqrt());
        }
    }

    let updates = config.total_updates();
    Ok(EstimatorReport {
        estimate: h,
        iterations: updates,
        residual_trace,
        objective_trace: Vec::new(),
        score_evaluations: updates,
        likelihood_evaluations: updates,
    })
}

/// Prior sampling: the posterior recursion without the likelihood term.
pub fn langevin_prior<S>(score: &S, shape: (usize, usize), config: &LangevinConfig) -> Result<CMat>
where
    S: ScoreFunction + ?Sized,
{
    config.validate()?;
    let (rows, cols) = shape;
    let mut rng = seeded(config.seed);
    let mut h = complex_normal_matrix(&mut rng, rows, cols, 1.0);
    let mut prior = linalg::zeros(rows, cols);
    for (level, (&sigma, step)) in config
        .schedule
        .levels()
        .iter()
        .zip(config.step_sizes())
        .enumerate()
    {
        let noise_scale = (2.0 * config.beta * step).sqrt() * sigma;
        for inner in 0..config.inner_steps {
            score.evaluate_into(&h, sigma, &mut prior)?;
            linalg::axpy(&mut h, step, &prior);
            add_noise(&mut h, noise_scale, &mut rng);
            if !linalg::is_finite(&h) {
                return Err(Error::Diverged { level, step: inner });
            }
        }
    }
    Ok(h)
}
