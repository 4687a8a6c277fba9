//! Channel generators, pilots and the pilot observation model `Y = H P + N`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::OpenClosed01;
use rand::Rng;

use crate::linalg::{self, CMat, C64};
use crate::rng::{complex_normal, complex_normal_matrix};
use crate::{Error, Result};

const POWER_TOL: f64 = 1e-9;
const PILOT_MODULUS_TOL: f64 = 1e-12;

fn check_unit_power(context: &str, stds: &[f64]) -> Result<()> {
    if stds.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid(format!("{context}: gains must be finite and nonnegative")));
    }
    let power: f64 = stds.iter().map(|s| s * s).sum();
    if (power - 1.0).abs() > POWER_TOL {
        return Err(Error::invalid(format!(
            "{context}: squared gains sum to {power}, expected 1"
        )));
    }
    Ok(())
}

/// Per-tap gain standard deviations and delay scales of a SISO tapped channel
/// distribution. Taps carry unit average total power.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    sigmas: Vec<f64>,
    alphas: Vec<f64>,
}

impl TapProfile {
    pub fn new(sigmas: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::invalid("tap profile needs at least one tap"));
        }
        if sigmas.len() != alphas.len() {
            return Err(Error::invalid(format!(
                "tap profile has {} gains but {} delay scales",
                sigmas.len(),
                alphas.len()
            )));
        }
        check_unit_power("tap profile", &sigmas)?;
        if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::invalid("delay scales must be finite and nonnegative"));
        }
        Ok(Self { sigmas, alphas })
    }

    pub fn num_taps(&self) -> usize {
        self.sigmas.len()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// One draw of tap gains and delays (delays in sample periods).
#[derive(Debug, Clone, PartialEq)]
pub struct TapRealization {
    pub gains: Vec<C64>,
    pub delays: Vec<f64>,
}

/// Draws `h_i ~ CN(0, sigma_i^2)` and `tau_i = -alpha_i ln x_i` with
/// `x_i ~ U(0, 1]`, all mutually independent.
pub fn sample_taps<R: Rng + ?Sized>(profile: &TapProfile, rng: &mut R) -> TapRealization {
    let gains = profile
        .sigmas
        .iter()
        .map(|s| complex_normal(rng, s * s))
        .collect();
    let delays = profile
        .alphas
        .iter()
        .map(|a| {
            let x: f64 = rng.sample(OpenClosed01);
            // a unit draw gives a zero delay, never -0.0
            (-a * x.ln()).max(0.0)
        })
        .collect();
    TapRealization { gains, delays }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    RaisedCosine,
    Sinc,
}

/// Fixed pulse `g(t)` with unit sample period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    kind: PulseKind,
    rolloff: f64,
    truncation: usize,
}

impl Default for PulseShape {
    /// Raised cosine, roll-off 0.25, truncated at +/-8 samples.
    fn default() -> Self {
        Self {
            kind: PulseKind::RaisedCosine,
            rolloff: 0.25,
            truncation: 8,
        }
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

impl PulseShape {
    pub fn raised_cosine(rolloff: f64, truncation: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(Error::invalid(format!("roll-off {rolloff} outside [0, 1]")));
        }
        Ok(Self {
            kind: PulseKind::RaisedCosine,
            rolloff,
            truncation,
        })
    }

    pub fn sinc(truncation: usize) -> Self {
        Self {
            kind: PulseKind::Sinc,
            rolloff: 0.0,
            truncation,
        }
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.truncation as f64 {
            return 0.0;
        }
        match self.kind {
            PulseKind::Sinc => sinc(t),
            PulseKind::RaisedCosine => {
                let b = self.rolloff;
                if b == 0.0 {
                    return sinc(t);
                }
                let x = 2.0 * b * t;
                let denom = 1.0 - x * x;
                if denom.abs() < 1e-10 {
                    PI / 4.0 * sinc(1.0 / (2.0 * b))
                } else {
                    sinc(t) * (PI * b * t).cos() / denom
                }
            }
        }
    }
}

/// Sampled impulse response `h[i] = sum_k gains[k] g(i - delays[k])`,
/// `i = 0..n`.
pub fn sample_vector_channel(real: &TapRealization, pulse: &PulseShape, n: usize) -> Result<Vec<C64>> {
    if n == 0 {
        return Err(Error::invalid("vector channel length must be at least 1"));
    }
    if real.gains.len() != real.delays.len() {
        return Err(Error::invalid("tap gains and delays differ in length"));
    }
    Ok((0..n)
        .map(|i| {
            real.gains
                .iter()
                .zip(&real.delays)
                .map(|(g, d)| g * pulse.eval(i as f64 - d))
                .sum()
        })
        .collect())
}

/// ULA response: entry `n` is `exp(j 2 pi spacing n sin(angle))`.
pub fn steering_vector(n: usize, spacing: f64, angle: f64) -> Vec<C64> {
    let phase = 2.0 * PI * spacing * angle.sin();
    (0..n).map(|k| C64::from_polar(1.0, phase * k as f64)).collect()
}

/// One propagation path of a clustered channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: C64,
    pub aoa: f64,
    pub aod: f64,
}

/// Synthetic clustered MIMO channel family over half-wavelength-style ULAs.
///
/// Path `p` has gain `CN(0, gain_stds[p]^2)` and angles
/// `center_p + angular_spread * u` with `u ~ U(-1, 1)` drawn independently for
/// arrival and departure.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProfile {
    gain_stds: Vec<f64>,
    aoa_centers: Vec<f64>,
    aod_centers: Vec<f64>,
    angular_spread: f64,
    n_r: usize,
    n_t: usize,
    spacing: f64,
}

impl ClusterProfile {
    pub fn new(
        gain_stds: Vec<f64>,
        aoa_centers: Vec<f64>,
        aod_centers: Vec<f64>,
        angular_spread: f64,
        (n_r, n_t): (usize, usize),
        spacing: f64,
    ) -> Result<Self> {
        if gain_stds.is_empty() {
            return Err(Error::invalid("clustered profile needs at least one path"));
        }
        if aoa_centers.len() != gain_stds.len() || aod_centers.len() != gain_stds.len() {
            return Err(Error::invalid("one arrival and one departure center per path required"));
        }
        if n_r == 0 || n_t == 0 {
            return Err(Error::invalid("array sizes must be at least 1"));
        }
        if !(angular_spread >= 0.0 && angular_spread.is_finite()) {
            return Err(Error::invalid("angular spread must be finite and nonnegative"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("element spacing must be positive"));
        }
        check_unit_power("clustered profile", &gain_stds)?;
        Ok(Self {
            gain_stds,
            aoa_centers,
            aod_centers,
            angular_spread,
            n_r,
            n_t,
            spacing,
        })
    }

    pub fn num_paths(&self) -> usize {
        self.gain_stds.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_r, self.n_t)
    }

    /// `H = sum_p g_p a_r(aoa_p) a_t(aod_p)^H` for explicit paths.
    pub fn channel(&self, paths: &[PathParams]) -> CMat {
        let mut h = linalg::zeros(self.n_r, self.n_t);
        for p in paths {
            let ar = steering_vector(self.n_r, self.spacing, p.aoa);
            let at = steering_vector(self.n_t, self.spacing, p.aod);
            for (j, t) in at.iter().enumerate() {
                let col = p.gain * t.conj();
                for (i, r) in ar.iter().enumerate() {
                    h[(i, j)] += r * col;
                }
            }
        }
        h
    }
}

pub fn sample_clustered_mimo<R: Rng + ?Sized>(profile: &ClusterProfile, rng: &mut R) -> CMat {
    let paths: Vec<PathParams> = (0..profile.num_paths())
        .map(|p| {
            let s = profile.gain_stds[p];
            let gain = complex_normal(rng, s * s);
            let ua: f64 = rng.random_range(-1.0..1.0);
            let ud: f64 = rng.random_range(-1.0..1.0);
            PathParams {
                gain,
                aoa: profile.aoa_centers[p] + profile.angular_spread * ua,
                aod: profile.aod_centers[p] + profile.angular_spread * ud,
            }
        })
        .collect();
    profile.channel(&paths)
}

/// Mean of `|h_ij|^2` over every entry of every matrix.
pub fn dataset_power(channels: &[CMat]) -> f64 {
    let count: usize = channels.iter().map(|h| h.len()).sum();
    let total: f64 = channels.iter().map(linalg::frobenius_sq).sum();
    total / count as f64
}

/// Scales the dataset so the mean entry power is 1. Returns the scaled
/// channels and the single factor applied.
pub fn normalize_dataset(channels: &[CMat]) -> Result<(Vec<CMat>, f64)> {
    if channels.is_empty() {
        return Err(Error::invalid("cannot normalize an empty dataset"));
    }
    let power = dataset_power(channels);
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::ZeroReference);
    }
    let scale = 1.0 / power.sqrt();
    Ok((scale_dataset(channels, scale), scale))
}

pub fn scale_dataset(channels: &[CMat], scale: f64) -> Vec<CMat> {
    channels.iter().map(|h| h * C64::new(scale, 0.0)).collect()
}

/// QPSK pilot matrix of shape `n_t x n_p` with entries `(+-1 +- j)/sqrt(2)`.
pub fn gen_qpsk_pilots<R: Rng + ?Sized>(n_t: usize, n_p: usize, rng: &mut R) -> Result<CMat> {
    if n_t == 0 || n_p == 0 {
        return Err(Error::invalid("pilot dimensions must be at least 1"));
    }
    Ok(CMat::from_fn(n_t, n_p, |_, _| {
        let bits: u8 = rng.random_range(0..4);
        let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        C64::new(re, im)
    }))
}

/// Number of pilots for undersampling ratio `alpha = n_p / n_t`.
pub fn pilot_count(alpha: f64, n_t: usize) -> Result<usize> {
    let n_p = (alpha * n_t as f64).round();
    if !(n_p >= 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} leaves no pilots for n_t = {n_t}")));
    }
    Ok(n_p as usize)
}

/// Pilot matrix, received pilots and pilot noise power of one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    pilots: CMat,
    received: CMat,
    noise_power: f64,
}

impl PilotSet {
    /// Validated constructor: every pilot entry must have unit modulus.
    pub fn new(pilots: CMat, received: CMat, noise_power: f64) -> Result<Self> {
        if pilots
            .iter()
            .any(|p| (p.norm() - 1.0).abs() > PILOT_MODULUS_TOL)
        {
            return Err(Error::invalid("pilot entries must have unit modulus"));
        }
        Self::general(pilots, received, noise_power)
    }

    /// Accepts any finite pilot matrix (identity pilots, scaled unitaries).
    pub fn general(pilots: CMat, received: CMat, noise_power: f64) -> Result<Self> {
        if pilots.ncols() == 0 || pilots.nrows() == 0 {
            return Err(Error::invalid("at least one pilot and one transmit antenna required"));
        }
        if received.ncols() != pilots.ncols() {
            return Err(Error::ShapeMismatch {
                context: "received pilots",
                expected: (received.nrows(), pilots.ncols()),
                found: received.shape(),
            });
        }
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return Err(Error::invalid("pilot noise power must be finite and nonnegative"));
        }
        if !linalg::is_finite(&pilots) || !linalg::is_finite(&received) {
            return Err(Error::NonFinite("pilot set"));
        }
        Ok(Self {
            pilots,
            received,
            noise_power,
        })
    }

    pub fn pilots(&self) -> &CMat {
        &self.pilots
    }

    pub fn received(&self) -> &CMat {
        &self.received
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// Shape `(n_r, n_t)` of the channel being observed.
    pub fn channel_shape(&self) -> (usize, usize) {
        (self.received.nrows(), self.pilots.nrows())
    }

    pub fn num_pilots(&self) -> usize {
        self.pilots.ncols()
    }

    /// Undersampling ratio `n_p / n_t`.
    pub fn alpha(&self) -> f64 {
        self.pilots.ncols() as f64 / self.pilots.nrows() as f64
    }
}

/// Noisy pilot observation `Y = H P + N`, `N` i.i.d. CN(0, `noise_power`).
pub fn observe<R: Rng + ?Sized>(h: &CMat, pilots: &CMat, noise_power: f64, rng: &mut R) -> Result<PilotSet> {
    if h.ncols() != pilots.nrows() {
        return Err(Error::ShapeMismatch {
            context: "observe: pilots",
            expected: (h.ncols(), pilots.ncols()),
            found: pilots.shape(),
        });
    }
    let mut y = h * pilots;
    if noise_power > 0.0 {
        y += complex_normal_matrix(rng, h.nrows(), pilots.ncols(), noise_power);
    }
    PilotSet::general(pilots.clone(), y, noise_power)
}

/// Pilot noise power for `SNR = n_t / sigma^2`.
pub fn snr_to_noise_power(snr_db: f64, n_t: usize) -> f64 {
    n_t as f64 / 10.0.powf(snr_db / 10.0)
}

pub fn noise_power_to_snr(noise_power: f64, n_t: usize) -> f64 {
    10.0 * (n_t as f64 / noise_power).log10()
}
