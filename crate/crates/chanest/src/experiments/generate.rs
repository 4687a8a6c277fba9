//! Train/validation/test channel generation.

use std::fs;
use std::path::{Path, PathBuf};

use chanest_core::channels::{dataset_power, normalize_dataset, scale_dataset};
use chanest_core::rng::{derive_seed, split};
use chanest_core::CMat;

use super::sample_channel;
use crate::config::{ChannelConfig, ExperimentConfig};
use crate::dataset::{export_csv, read_dataset, write_dataset};
use crate::report::{format_float, Table};
use crate::{Error, Result};

const TRAIN: &str = "train";
const VALIDATION: &str = "validation";
const TEST: &str = "test";
const MANIFEST: &str = "manifest.csv";

/// The three dataset splits, all scaled by the factor that gives the
/// training split unit mean power per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<CMat>,
    pub validation: Vec<CMat>,
    pub test: Vec<CMat>,
    pub scale: f64,
}

impl Splits {
    /// RMS entry of the training split.
    pub fn rms(&self) -> f64 {
        dataset_power(&self.train).sqrt()
    }
}

/// Seed of the generator for split `stream`.
pub fn split_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(cfg.base_seed, &format!("{}/dataset", cfg.scenario), 0, 0)
}

fn draw(channel: &ChannelConfig, n: usize, seed: u64, stream: u64) -> Result<Vec<CMat>> {
    let mut rng = split(seed, stream);
    (0..n).map(|_| sample_channel(channel, &mut rng)).collect()
}

/// Draws every split in memory. Each split reads a separate ChaCha stream.
pub fn build_splits(cfg: &ExperimentConfig) -> Result<Splits> {
    build_splits_for(cfg, &cfg.channel)
}

/// As [`build_splits`] with the channel family overridden.
pub fn build_splits_for(cfg: &ExperimentConfig, channel: &ChannelConfig) -> Result<Splits> {
    let seed = split_seed(cfg);
    let raw_train = draw(channel, cfg.dataset.train, seed, 1)?;
    let (train, scale) = normalize_dataset(&raw_train)?;
    let validation = scale_dataset(&draw(channel, cfg.dataset.validation, seed, 2)?, scale);
    let test = scale_dataset(&draw(channel, cfg.dataset.test, seed, 3)?, scale);
    Ok(Splits { train, validation, test, scale })
}

fn split_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.csim"))
}

/// Writes the splits and a manifest under `dir`; returns the manifest table.
pub fn write_splits(splits: &Splits, dir: &Path, seed: u64) -> Result<Table> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut table = Table::new(&["split", "count", "rows", "cols", "scale", "seed"]);
    for (name, data) in [(TRAIN, &splits.train), (VALIDATION, &splits.validation), (TEST, &splits.test)] {
        let (rows, cols) = data.first().map_or((0, 0), |h| h.shape());
        write_dataset(&split_path(dir, name), (rows, cols), data)?;
        table.push(vec![
            name.to_string(),
            data.len().to_string(),
            rows.to_string(),
            cols.to_string(),
            format_float(splits.scale),
            seed.to_string(),
        ]);
    }
    table.write(&dir.join(MANIFEST))?;
    Ok(table)
}

/// Reads splits written by [`write_splits`].
pub fn read_splits(dir: &Path) -> Result<Splits> {
    let manifest = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut scale = None;
    for record in reader.records() {
        let record = record?;
        if let Some(s) = record.get(4) {
            scale = s.parse::<f64>().ok();
        }
    }
    let scale = scale.ok_or_else(|| Error::Format {
        path: manifest.clone(),
        reason: "missing scale column".into(),
    })?;
    Ok(Splits {
        train: read_dataset(&split_path(dir, TRAIN))?.1,
        validation: read_dataset(&split_path(dir, VALIDATION))?.1,
        test: read_dataset(&split_path(dir, TEST))?.1,
        scale,
    })
}

/// Generates and writes the datasets named by `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    let splits = build_splits(cfg)?;
    write_splits(&splits, &cfg.dataset.dir, split_seed(cfg))
}

/// Writes `<split>.csv` beside each binary split under `dir`.
pub fn export_splits_csv(dir: &Path) -> Result<()> {
    for name in [TRAIN, VALIDATION, TEST] {
        let (_, data) = read_dataset(&split_path(dir, name))?;
        export_csv(&dir.join(format!("{name}.csv")), &data)?;
    }
    Ok(())
}
