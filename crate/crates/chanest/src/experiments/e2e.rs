//! Uncoded BER through SVD precoding and LMMSE equalization with estimated
//! channels.

use chanest_core::channels::snr_to_noise_power;
use chanest_core::linksim::{run_link, LinkConfig, Modulation};
use chanest_core::rng::derive_seed;
use rayon::prelude::*;

use super::estimate::grid;
use super::{estimator_seed, observe_trial, validation_cases, EstimatorBank, Splits};
use crate::config::{EstimatorKind, ExperimentConfig};
use crate::report::{format_float, Table, SENTINEL};
use crate::{Error, Result};

pub const COLUMNS: [&str; 13] = [
    "scenario",
    "estimator",
    "snr_pilot_db",
    "alpha",
    "esn0_db",
    "modulation",
    "n_s",
    "trial",
    "seed",
    "ber",
    "bit_errors",
    "num_bits",
    "status",
];

fn modulation_label(m: Modulation) -> &'static str {
    match m {
        Modulation::Qam16 => "qam16",
        Modulation::Qam64 => "qam64",
    }
}

/// Data noise power for a per-stream symbol energy of one.
pub fn esn0_to_noise_power(esn0_db: f64) -> f64 {
    10f64.powf(-esn0_db / 10.0)
}

pub fn run(cfg: &ExperimentConfig, splits: &Splits) -> Result<Table> {
    let e2e = cfg.e2e.as_ref().ok_or_else(|| Error::Config("missing [e2e] table".into()))?;
    if splits.test.is_empty() {
        return Err(Error::Config("the test split is empty".into()));
    }
    let mut with_perfect = cfg.clone();
    if !with_perfect.estimators.contains(&EstimatorKind::Perfect) {
        with_perfect.estimators.insert(0, EstimatorKind::Perfect);
    }
    let bank = EstimatorBank::new(&with_perfect, splits)?;
    let modulations: Vec<Modulation> = e2e.modulations.iter().map(Modulation::from).collect();
    let tag = format!("{}/e2e", cfg.scenario);
    let mut table = Table::new(&COLUMNS);
    for point in grid(cfg) {
        let noise = snr_to_noise_power(point.snr_db, splits.test[0].ncols());
        let tuned = bank.tune(&validation_cases(cfg, splits, point.index, point.alpha, point.snr_db)?, noise)?;
        let rows: Vec<Vec<Vec<String>>> = (0..cfg.sweep.trials)
            .into_par_iter()
            .map(|trial| -> Result<Vec<Vec<String>>> {
                let truth = &splits.test[trial % splits.test.len()];
                let seed = derive_seed(cfg.base_seed, &tag, point.index, trial as u32);
                let pilots = observe_trial(truth, point.alpha, point.snr_db, seed)?;
                let mut rows = Vec::new();
                for (k, &kind) in bank.kinds.iter().enumerate() {
                    let est = bank.run(kind, &pilots, truth, &tuned, estimator_seed(seed));
                    for (ei, &esn0) in e2e.esn0_db.iter().enumerate() {
                        for (mi, &m) in modulations.iter().enumerate() {
                            let link_seed = derive_seed(seed, &tag, (ei * modulations.len() + mi) as u32, k as u32);
                            let link = LinkConfig::new(e2e.streams, m, e2e.num_symbols, esn0_to_noise_power(esn0), link_seed);
                            let outcome = match &est {
                                Ok(e) => run_link(truth, &e.estimate, &link).map_err(|e| format!("error: {e}")),
                                Err(e) => Err(format!("error: {e}")),
                            };
                            let (ber, errors, bits, status) = match outcome {
                                Ok(o) => (format_float(o.ber), o.bit_errors.to_string(), o.num_bits.to_string(), "ok".to_string()),
                                Err(s) => (SENTINEL.to_string(), "0".into(), "0".into(), s),
                            };
                            rows.push(vec![
                                cfg.scenario.clone(),
                                kind.label().to_string(),
                                format_float(point.snr_db),
                                format_float(point.alpha),
                                format_float(esn0),
                                modulation_label(m).to_string(),
                                e2e.streams.to_string(),
                                trial.to_string(),
                                link_seed.to_string(),
                                ber,
                                errors,
                                bits,
                                status,
                            ]);
                        }
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_>>()?;
        for row in rows.into_iter().flatten() {
            table.push(row);
        }
    }
    Ok(table)
}
