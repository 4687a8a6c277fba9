//! Experiment drivers. Each returns a [`Table`](crate::report::Table) whose
//! rows follow the deterministic grid order regardless of how trials were
//! scheduled.

pub mod dsm;
pub mod e2e;
pub mod estimate;
pub mod generate;
pub mod mnr;
pub mod theory;

use chanest_core::channels::{pilot_count, sample_taps, sample_vector_channel, snr_to_noise_power, PilotSet};
use chanest_core::estimators::{
    fsad, gaussian_posterior_mean, lasso_beamspace, langevin_posterior, regularized_ls, tune_hyperparams,
    LangevinConfig, SparseParams, ValidationCase,
};
use chanest_core::rng::{complex_normal_matrix, derive_seed, split, SimRng};
use chanest_core::scores::{empirical_smoothed_score, gaussian_score, geometric_schedule, EmpiricalPrior, EmpiricalScore};
use chanest_core::{CMat, C64};
use rand::RngCore;

use crate::config::{ChannelConfig, EstimatorKind, ExperimentConfig, LangevinSettings, SparseSettings};
use crate::Result;

pub use generate::{build_splits, Splits};

/// Run-time switches that do not belong in the experiment config.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Report wall-clock milliseconds instead of 0.
    pub timing: bool,
}

/// Draws one channel from the configured family.
pub fn sample_channel(channel: &ChannelConfig, rng: &mut SimRng) -> Result<CMat> {
    Ok(match channel {
        ChannelConfig::Clustered { .. } => {
            let profile = channel.cluster_profile()?.expect("clustered profile");
            chanest_core::channels::sample_clustered_mimo(&profile, rng)
        }
        ChannelConfig::Gaussian { n_r, n_t, variance } => complex_normal_matrix(rng, *n_r, *n_t, *variance),
        ChannelConfig::Siso { length, profile, pulse } => {
            let taps = sample_taps(&profile.profile()?, rng);
            let h = sample_vector_channel(&taps, &pulse.shape()?, *length)?;
            CMat::from_row_slice(1, *length, &h)
        }
    })
}

/// Pilot matrix and noisy observation for one trial.
pub fn observe_trial(truth: &CMat, alpha: f64, snr_db: f64, seed: u64) -> Result<PilotSet> {
    let n_t = truth.ncols();
    let n_p = pilot_count(alpha, n_t)?;
    let mut rng = split(seed, 0);
    let pilots = chanest_core::channels::gen_qpsk_pilots(n_t, n_p, &mut rng)?;
    Ok(chanest_core::channels::observe(
        truth,
        &pilots,
        snr_to_noise_power(snr_db, n_t),
        &mut rng,
    )?)
}

/// Seed for the stochastic part of an estimator in a trial.
pub fn estimator_seed(trial_seed: u64) -> u64 {
    split(trial_seed, 1).next_u64()
}

/// Langevin configuration for a training set of RMS entry `rms`.
pub fn langevin_config(settings: &LangevinSettings, rms: f64, seed: u64) -> Result<LangevinConfig> {
    let sigma_max = settings.sigma_max_rms * rms;
    let schedule = geometric_schedule(sigma_max, settings.sigma_min, settings.levels)?;
    let decay = settings.step_ratio.powf(1.0 / settings.levels as f64);
    let mut cfg = LangevinConfig::new(
        settings.alpha0_scale * sigma_max * sigma_max,
        settings.beta,
        decay,
        schedule,
        settings.inner_steps,
        seed,
    )?;
    cfg.denominator = settings.denominator.into();
    Ok(cfg)
}

/// Everything an estimator needs beyond the observation.
pub struct EstimatorBank<'a> {
    pub kinds: &'a [EstimatorKind],
    pub langevin: &'a LangevinSettings,
    pub sparse: &'a SparseSettings,
    /// RMS entry of the training split.
    pub rms: f64,
    pub score: Option<EmpiricalScore>,
    /// Prior variance for the analytic Gaussian estimators.
    pub gaussian_variance: Option<f64>,
    /// Test-time residual sign flip, used by the self-test mutation.
    pub flip_residual: bool,
}

pub struct Estimate {
    pub estimate: CMat,
    pub iterations: usize,
}

/// Per-operating-point sparse regularization, chosen on the validation split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedLambdas {
    pub lasso: f64,
    pub fsad: f64,
}

impl<'a> EstimatorBank<'a> {
    pub fn new(cfg: &'a ExperimentConfig, splits: &Splits) -> Result<Self> {
        let needs_score = cfg.estimators.contains(&EstimatorKind::Langevin);
        let score = if needs_score {
            let prior = EmpiricalPrior::new(&splits.train)?.capped(10_000, derive_seed(cfg.base_seed, &cfg.scenario, u32::MAX, 0));
            Some(empirical_smoothed_score(prior))
        } else {
            None
        };
        let gaussian_variance = match &cfg.channel {
            ChannelConfig::Gaussian { variance, .. } => Some(variance * splits.scale * splits.scale),
            _ => None,
        };
        Ok(Self {
            kinds: &cfg.estimators,
            langevin: &cfg.langevin,
            sparse: &cfg.sparse,
            rms: splits.rms(),
            score,
            gaussian_variance,
            flip_residual: false,
        })
    }

    fn sparse_params(&self, lambda: f64) -> SparseParams {
        SparseParams {
            lambda,
            step: None,
            max_iters: self.sparse.max_iters,
            accelerated: self.sparse.accelerated,
            tolerance: self.sparse.tolerance,
        }
    }

    /// Grid search of the sparse baselines on validation observations.
    pub fn tune(&self, cases: &[ValidationCase], noise_power: f64) -> Result<TunedLambdas> {
        let scale = noise_power.sqrt();
        let grid: Vec<SparseParams> = self.sparse.lambda_grid.iter().map(|g| self.sparse_params(g * scale)).collect();
        let mut tuned = TunedLambdas { lasso: grid[0].lambda, fsad: grid[0].lambda };
        if cases.is_empty() {
            return Ok(tuned);
        }
        if self.kinds.contains(&EstimatorKind::Lasso) {
            tuned.lasso = tune_hyperparams(lasso_beamspace, cases, &grid)?.best.lambda;
        }
        if self.kinds.contains(&EstimatorKind::Fsad) {
            let lift = self.sparse.lift;
            tuned.fsad = tune_hyperparams(|ps, p| fsad(ps, lift, p), cases, &grid)?.best.lambda;
        }
        Ok(tuned)
    }

    pub fn run(&self, kind: EstimatorKind, pilots: &PilotSet, truth: &CMat, tuned: &TunedLambdas, seed: u64) -> Result<Estimate> {
        let shape = pilots.channel_shape();
        let one = |estimate| Estimate { estimate, iterations: 1 };
        Ok(match kind {
            EstimatorKind::Langevin | EstimatorKind::LangevinGaussian => {
                let mut cfg = langevin_config(self.langevin, self.rms, seed)?;
                if self.flip_residual {
                    cfg.residual_sign = chanest_core::estimators::ResidualSign::ModelMinusData;
                }
                let report = if kind == EstimatorKind::Langevin {
                    let score = self.score.as_ref().ok_or_else(|| crate::Error::Config("langevin needs a training split".into()))?;
                    langevin_posterior(pilots, score, &cfg)?
                } else {
                    let v = self.gaussian_variance.ok_or_else(|| crate::Error::Config("langevin-gaussian needs a gaussian channel".into()))?;
                    langevin_posterior(pilots, &gaussian_score(CMat::zeros(shape.0, shape.1), v)?, &cfg)?
                };
                Estimate { estimate: report.estimate, iterations: report.iterations }
            }
            EstimatorKind::Lasso => {
                let r = lasso_beamspace(pilots, &self.sparse_params(tuned.lasso))?;
                Estimate { estimate: r.estimate, iterations: r.iterations }
            }
            EstimatorKind::Fsad => {
                let r = fsad(pilots, self.sparse.lift, &self.sparse_params(tuned.fsad))?;
                Estimate { estimate: r.estimate, iterations: r.iterations }
            }
            EstimatorKind::Ridge => one(regularized_ls(pilots, pilots.noise_power())?),
            EstimatorKind::GaussianOracle => {
                let v = self.gaussian_variance.ok_or_else(|| crate::Error::Config("gaussian-oracle needs a gaussian channel".into()))?;
                one(gaussian_posterior_mean(pilots, &CMat::zeros(shape.0, shape.1), v)?)
            }
            EstimatorKind::Zero => one(CMat::from_element(shape.0, shape.1, C64::new(0.0, 0.0))),
            EstimatorKind::Perfect => one(truth.clone()),
        })
    }
}

/// Validation observations for one operating point, seeded apart from the
/// test trials.
pub fn validation_cases(cfg: &ExperimentConfig, splits: &Splits, point: u32, alpha: f64, snr_db: f64) -> Result<Vec<ValidationCase>> {
    let tag = format!("{}/validation", cfg.scenario);
    splits
        .validation
        .iter()
        .take(cfg.sparse.tune_cases)
        .enumerate()
        .map(|(i, truth)| {
            let seed = derive_seed(cfg.base_seed, &tag, point, i as u32);
            Ok(ValidationCase {
                pilots: observe_trial(truth, alpha, snr_db, seed)?,
                truth: truth.clone(),
            })
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
