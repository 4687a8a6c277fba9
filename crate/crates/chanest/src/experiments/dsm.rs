//! Denoising score-matching loss of the exact smoothed-empirical score.

use chanest_core::rng::{derive_seed, seeded};
use chanest_core::scores::{dsm_loss, empirical_smoothed_score, EmpiricalPrior, NoiseSchedule};
use rayon::prelude::*;

use super::Splits;
use crate::config::{DsmConfig, ExperimentConfig};
use crate::report::{format_float, Table};
use crate::Result;

pub const COLUMNS: [&str; 4] = ["sigma", "loss", "n", "seed"];

/// Eight levels spanning the Langevin schedule, batch 256.
pub fn default_settings(cfg: &ExperimentConfig, rms: f64) -> DsmConfig {
    let hi = cfg.langevin.sigma_max_rms * rms;
    let lo = cfg.langevin.sigma_min;
    let sigmas = (0..8).map(|k| hi * (lo / hi).powf(k as f64 / 7.0)).collect();
    DsmConfig { sigmas, batch: 256 }
}

pub fn run(cfg: &ExperimentConfig, splits: &Splits) -> Result<Table> {
    let settings = cfg.dsm.clone().unwrap_or_else(|| default_settings(cfg, splits.rms()));
    let prior = EmpiricalPrior::new(&splits.train)?;
    let n = prior.len();
    let score = empirical_smoothed_score(prior.clone());
    let tag = format!("{}/dsm", cfg.scenario);
    let rows: Vec<Vec<String>> = settings
        .sigmas
        .par_iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let seed = derive_seed(cfg.base_seed, &tag, i as u32, 0);
            let schedule = NoiseSchedule::new(vec![sigma])?;
            let loss = dsm_loss(&score, &prior, &schedule, settings.batch, &mut seeded(seed))?;
            Ok(vec![format_float(sigma), format_float(loss), n.to_string(), seed.to_string()])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&COLUMNS);
    for row in rows {
        table.push(row);
    }
    Ok(table)
}
