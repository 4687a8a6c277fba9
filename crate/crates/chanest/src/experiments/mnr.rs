//! Posterior sampling on SISO channels from profiles at increasing distance
//! from the training profile.

use chanest_core::channels::{scale_dataset, snr_to_noise_power};
use chanest_core::estimators::nmse_db;
use chanest_core::rng::{derive_seed, split};
use chanest_core::wasserstein::delta_mnr;
use chanest_core::CMat;
use rayon::prelude::*;

use super::generate::{build_splits_for, split_seed};
use super::{estimator_seed, median, observe_trial, sample_channel, EstimatorBank, TunedLambdas};
use crate::config::{ChannelConfig, EstimatorKind, ExperimentConfig};
use crate::report::{format_float, Table};
use crate::{Error, Result};

pub const COLUMNS: [&str; 13] = [
    "scenario",
    "level",
    "profile",
    "snr_db",
    "alpha",
    "trials",
    "failures",
    "w2_squared",
    "sigma_pilot",
    "delta_mnr_squared",
    "median_nmse_db",
    "mean_nmse_db",
    "point",
];

/// Test channels of mismatch level `level`, scaled like the training split.
fn level_channels(cfg: &ExperimentConfig, channel: &ChannelConfig, level: usize, scale: f64) -> Result<Vec<CMat>> {
    let mut rng = split(split_seed(cfg), 16 + level as u64);
    let raw: Vec<CMat> = (0..cfg.sweep.trials).map(|_| sample_channel(channel, &mut rng)).collect::<Result<_>>()?;
    Ok(scale_dataset(&raw, scale))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    let mnr = cfg.mnr.as_ref().ok_or_else(|| Error::Config("missing [mnr] table".into()))?;
    let ChannelConfig::Siso { length, pulse, .. } = &cfg.channel else {
        return Err(Error::Config("mnr needs a siso channel".into()));
    };
    let siso = |profile: &crate::config::TapProfileConfig| ChannelConfig::Siso {
        length: *length,
        profile: profile.clone(),
        pulse: pulse.clone(),
    };
    let splits = build_splits_for(cfg, &siso(&mnr.base))?;
    let mut bank = EstimatorBank::new(cfg, &splits)?;
    if bank.score.is_none() {
        let mut with_score = cfg.clone();
        with_score.estimators = vec![EstimatorKind::Langevin];
        bank.score = EstimatorBank::new(&with_score, &splits)?.score;
    }
    let base = mnr.base.profile()?;
    let tuned = TunedLambdas { lasso: 0.0, fsad: 0.0 };
    let tag = format!("{}/mnr", cfg.scenario);
    let mut table = Table::new(&COLUMNS);
    for (level, profile_cfg) in mnr.levels.iter().enumerate() {
        let profile = profile_cfg.profile()?;
        let channels = level_channels(cfg, &siso(profile_cfg), level, splits.scale)?;
        let mut point = (level * cfg.sweep.alpha.len() * cfg.sweep.snr_db.len()) as u32;
        for &alpha in &cfg.sweep.alpha {
            for &snr_db in &cfg.sweep.snr_db {
                let sigma_pilot = snr_to_noise_power(snr_db, *length).sqrt();
                let report = delta_mnr(&base, &profile, sigma_pilot)?;
                let values: Vec<Option<f64>> = channels
                    .par_iter()
                    .enumerate()
                    .map(|(trial, truth)| {
                        let seed = derive_seed(cfg.base_seed, &tag, point, trial as u32);
                        let pilots = observe_trial(truth, alpha, snr_db, seed)?;
                        let est = bank.run(EstimatorKind::Langevin, &pilots, truth, &tuned, estimator_seed(seed));
                        Ok(est.ok().and_then(|e| nmse_db(&e.estimate, truth).ok()))
                    })
                    .collect::<Result<_>>()?;
                let ok: Vec<f64> = values.iter().flatten().copied().collect();
                let mean = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 };
                table.push(vec![
                    cfg.scenario.clone(),
                    level.to_string(),
                    profile_cfg.label(level),
                    format_float(snr_db),
                    format_float(alpha),
                    values.len().to_string(),
                    (values.len() - ok.len()).to_string(),
                    format_float(report.w2_squared),
                    format_float(sigma_pilot),
                    format_float(report.delta_mnr_squared.expect("delta set")),
                    format_float(median(&ok)),
                    format_float(mean),
                    point.to_string(),
                ]);
                point += 1;
            }
        }
    }
    Ok(table)
}
