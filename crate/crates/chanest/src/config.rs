//! Experiment configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use chanest_core::channels::{ClusterProfile, PulseShape, TapProfile};
use chanest_core::estimators::LikelihoodDenominator;
use chanest_core::linksim::Modulation;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub base_seed: u64,
    /// Default CSV destination; `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub channel: ChannelConfig,
    pub dataset: DatasetConfig,
    pub sweep: SweepConfig,
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub langevin: LangevinSettings,
    #[serde(default)]
    pub sparse: SparseSettings,
    #[serde(default)]
    pub theory: Option<TheoryConfig>,
    #[serde(default)]
    pub mnr: Option<MnrConfig>,
    #[serde(default)]
    pub e2e: Option<E2eConfig>,
    #[serde(default)]
    pub dsm: Option<DsmConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelConfig {
    /// Sum of ULA path responses with complex Gaussian gains.
    Clustered {
        n_r: usize,
        n_t: usize,
        spacing: f64,
        gain_stds: Vec<f64>,
        aoa_centers: Vec<f64>,
        aod_centers: Vec<f64>,
        angular_spread: f64,
    },
    /// i.i.d. `CN(0, variance)` entries.
    Gaussian { n_r: usize, n_t: usize, variance: f64 },
    /// Sampled tapped-delay SISO channel, stored as a `1 x length` matrix.
    Siso {
        length: usize,
        profile: TapProfileConfig,
        #[serde(default)]
        pulse: PulseConfig,
    },
}

impl ChannelConfig {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ChannelConfig::Clustered { n_r, n_t, .. } | ChannelConfig::Gaussian { n_r, n_t, .. } => (*n_r, *n_t),
            ChannelConfig::Siso { length, .. } => (1, *length),
        }
    }

    pub fn cluster_profile(&self) -> Result<Option<ClusterProfile>> {
        match self {
            ChannelConfig::Clustered {
                n_r,
                n_t,
                spacing,
                gain_stds,
                aoa_centers,
                aod_centers,
                angular_spread,
            } => Ok(Some(ClusterProfile::new(
                gain_stds.clone(),
                aoa_centers.clone(),
                aod_centers.clone(),
                *angular_spread,
                (*n_r, *n_t),
                *spacing,
            )?)),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapProfileConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub sigmas: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl TapProfileConfig {
    pub fn profile(&self) -> Result<TapProfile> {
        Ok(TapProfile::new(self.sigmas.clone(), self.alphas.clone())?)
    }

    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("profile{index}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKindConfig {
    RaisedCosine,
    Sinc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub kind: PulseKindConfig,
    pub rolloff: f64,
    pub truncation: usize,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            kind: PulseKindConfig::RaisedCosine,
            rolloff: 0.25,
            truncation: 8,
        }
    }
}

impl PulseConfig {
    pub fn shape(&self) -> Result<PulseShape> {
        Ok(match self.kind {
            PulseKindConfig::RaisedCosine => PulseShape::raised_cosine(self.rolloff, self.truncation)?,
            PulseKindConfig::Sinc => PulseShape::sinc(self.truncation),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub alpha: Vec<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Annealed Langevin posterior sampling with the empirical training score.
    Langevin,
    /// Annealed Langevin posterior sampling with the analytic Gaussian score.
    LangevinGaussian,
    Lasso,
    Fsad,
    /// Ridge regression with ridge equal to the pilot noise power.
    Ridge,
    /// Closed-form posterior mean under the Gaussian prior.
    GaussianOracle,
    /// The all-zero estimate.
    Zero,
    /// The true channel.
    Perfect,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Langevin => "langevin",
            EstimatorKind::LangevinGaussian => "langevin-gaussian",
            EstimatorKind::Lasso => "lasso",
            EstimatorKind::Fsad => "fsad",
            EstimatorKind::Ridge => "ridge",
            EstimatorKind::GaussianOracle => "gaussian-oracle",
            EstimatorKind::Zero => "zero",
            EstimatorKind::Perfect => "perfect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorConfig {
    NoisePlusLevel,
    NoisePlusAnnealing,
}

impl From<DenominatorConfig> for LikelihoodDenominator {
    fn from(d: DenominatorConfig) -> Self {
        match d {
            DenominatorConfig::NoisePlusLevel => LikelihoodDenominator::NoisePlusLevel,
            DenominatorConfig::NoisePlusAnnealing => LikelihoodDenominator::NoisePlusAnnealing,
        }
    }
}

/// Annealing hyper-parameters. Noise levels run geometrically from
/// `sigma_max_rms` times the training RMS entry down to `sigma_min`; the
/// step is `alpha0_scale * sigma_max^2` at the first level and shrinks by the
/// overall factor `step_ratio` across the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinSettings {
    pub alpha0_scale: f64,
    pub beta: f64,
    pub step_ratio: f64,
    pub levels: usize,
    pub sigma_max_rms: f64,
    pub sigma_min: f64,
    pub inner_steps: usize,
    pub denominator: DenominatorConfig,
}

impl Default for LangevinSettings {
    fn default() -> Self {
        Self {
            alpha0_scale: 5e-5,
            beta: 1.0,
            step_ratio: 0.01,
            levels: 200,
            sigma_max_rms: 3.0,
            sigma_min: 0.01,
            inner_steps: 3,
            denominator: DenominatorConfig::NoisePlusLevel,
        }
    }
}

/// Proximal-gradient baselines; `lambda_grid` is in units of the pilot noise
/// standard deviation and is searched on the validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseSettings {
    pub lambda_grid: Vec<f64>,
    pub max_iters: usize,
    pub accelerated: bool,
    pub lift: usize,
    pub tolerance: f64,
    /// Validation channels used for the grid search.
    pub tune_cases: usize,
}

impl Default for SparseSettings {
    fn default() -> Self {
        Self {
            lambda_grid: vec![0.03, 0.1, 0.3, 1.0, 3.0],
            max_iters: 300,
            accelerated: true,
            lift: 4,
            tolerance: 1e-7,
            tune_cases: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub profiles: Vec<TapProfileConfig>,
    pub sigma_pilot: Vec<f64>,
    pub quadrature_nodes: usize,
    pub monte_carlo_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnrConfig {
    /// Training profile; the score is built from its samples.
    pub base: TapProfileConfig,
    /// Test profiles, in order of increasing mismatch.
    pub levels: Vec<TapProfileConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulationConfig {
    Qam16,
    Qam64,
}

impl From<&ModulationConfig> for Modulation {
    fn from(m: &ModulationConfig) -> Self {
        match m {
            ModulationConfig::Qam16 => Modulation::Qam16,
            ModulationConfig::Qam64 => Modulation::Qam64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E2eConfig {
    pub esn0_db: Vec<f64>,
    pub modulations: Vec<ModulationConfig>,
    pub streams: usize,
    pub num_symbols: usize,
}

/// DSM loss report of the exact training-set score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsmConfig {
    pub sigmas: Vec<f64>,
    pub batch: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.sweep.snr_db.is_empty() || self.sweep.alpha.is_empty() {
            return fail("sweep grids must be nonempty");
        }
        if self.sweep.trials == 0 {
            return fail("sweep.trials must be at least 1");
        }
        if self.sweep.trials > u32::MAX as usize || self.sweep.snr_db.len() * self.sweep.alpha.len() > u32::MAX as usize {
            return fail("sweep is too large for 32-bit seed indices");
        }
        if self.dataset.train == 0 || self.dataset.test == 0 {
            return fail("dataset.train and dataset.test must be at least 1");
        }
        if self.estimators.is_empty() {
            return fail("estimators must be nonempty");
        }
        if self.sparse.lambda_grid.is_empty() {
            return fail("sparse.lambda_grid must be nonempty");
        }
        let l = &self.langevin;
        if l.levels < 2 || l.inner_steps == 0 || !(l.step_ratio > 0.0 && l.step_ratio < 1.0) {
            return fail("langevin needs levels >= 2, inner_steps >= 1 and 0 < step_ratio < 1");
        }
        if let Some(t) = &self.theory {
            if t.profiles.len() < 2 {
                return fail("theory needs at least two profiles");
            }
        }
        if let Some(d) = &self.dsm {
            if d.sigmas.is_empty() || d.batch == 0 || d.sigmas.iter().any(|s| *s <= 0.0 || s.is_nan()) {
                return fail("dsm needs positive sigmas and batch >= 1");
            }
        }
        if let Some(m) = &self.mnr {
            if m.levels.is_empty() {
                return fail("mnr needs at least one test profile");
            }
        }
        Ok(())
    }
}
