//! NMSE sweep over SNR, pilot density and estimators.

use std::time::Instant;

use chanest_core::channels::snr_to_noise_power;
use chanest_core::estimators::nmse_db;
use chanest_core::rng::derive_seed;
use rayon::prelude::*;

use super::{estimator_seed, observe_trial, validation_cases, EstimatorBank, RunOptions, Splits, TunedLambdas};
use crate::config::ExperimentConfig;
use crate::report::{format_float, Table, SENTINEL};
use crate::{Error, Result};

pub const COLUMNS: [&str; 11] = [
    "scenario", "estimator", "snr_db", "alpha", "trial", "seed", "metric", "value", "iters", "wall_ms", "status",
];

/// One operating point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub index: u32,
    pub alpha: f64,
    pub snr_db: f64,
}

/// The sweep grid, alpha-major.
pub fn grid(cfg: &ExperimentConfig) -> Vec<Point> {
    let mut points = Vec::new();
    for &alpha in &cfg.sweep.alpha {
        for &snr_db in &cfg.sweep.snr_db {
            points.push(Point { index: points.len() as u32, alpha, snr_db });
        }
    }
    points
}

fn status_of(e: &chanest_core::Error) -> String {
    format!("error: {e}")
}

pub fn run(cfg: &ExperimentConfig, splits: &Splits, opts: RunOptions) -> Result<Table> {
    run_with(cfg, splits, opts, &EstimatorBank::new(cfg, splits)?)
}

/// As [`run`] with a prepared estimator bank.
pub fn run_with(cfg: &ExperimentConfig, splits: &Splits, opts: RunOptions, bank: &EstimatorBank) -> Result<Table> {
    if splits.test.is_empty() {
        return Err(Error::Config("the test split is empty".into()));
    }
    let mut table = Table::new(&COLUMNS);
    for point in grid(cfg) {
        let noise = snr_to_noise_power(point.snr_db, splits.test[0].ncols());
        let cases = validation_cases(cfg, splits, point.index, point.alpha, point.snr_db)?;
        let tuned = bank.tune(&cases, noise)?;
        let rows: Vec<Vec<Vec<String>>> = (0..cfg.sweep.trials)
            .into_par_iter()
            .map(|trial| trial_rows(cfg, splits, opts, bank, &tuned, point, trial))
            .collect::<Result<_>>()?;
        for row in rows.into_iter().flatten() {
            table.push(row);
        }
    }
    Ok(table)
}

fn trial_rows(
    cfg: &ExperimentConfig,
    splits: &Splits,
    opts: RunOptions,
    bank: &EstimatorBank,
    tuned: &TunedLambdas,
    point: Point,
    trial: usize,
) -> Result<Vec<Vec<String>>> {
    let truth = &splits.test[trial % splits.test.len()];
    let seed = derive_seed(cfg.base_seed, &cfg.scenario, point.index, trial as u32);
    let pilots = observe_trial(truth, point.alpha, point.snr_db, seed)?;
    let mut rows = Vec::with_capacity(bank.kinds.len());
    for &kind in bank.kinds {
        let start = Instant::now();
        let outcome = bank.run(kind, &pilots, truth, tuned, estimator_seed(seed)).and_then(|est| {
            Ok((nmse_db(&est.estimate, truth)?, est.iterations))
        });
        let wall = if opts.timing { format_float(start.elapsed().as_secs_f64() * 1e3) } else { "0".into() };
        let (value, iters, status) = match outcome {
            Ok((v, it)) => (format_float(v), it.to_string(), "ok".to_string()),
            Err(crate::Error::Core(e)) => (SENTINEL.to_string(), "0".into(), status_of(&e)),
            Err(e) => return Err(e),
        };
        rows.push(vec![
            cfg.scenario.clone(),
            kind.label().to_string(),
            format_float(point.snr_db),
            format_float(point.alpha),
            trial.to_string(),
            seed.to_string(),
            "nmse_db".to_string(),
            value,
            iters,
            wall,
            status,
        ]);
    }
    Ok(rows)
}
