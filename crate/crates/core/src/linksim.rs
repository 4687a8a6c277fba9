//! Precoded downlink simulation with LMMSE equalization and hard-decision QAM.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::linalg::{self, CMat, C64};
use crate::rng::{complex_normal, split};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }
}

/// Square Gray-labeled QAM with unit average energy. The first half of each
/// label selects the in-phase level, the second half the quadrature level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationMap {
    modulation: Modulation,
    /// Points indexed by label.
    points: Vec<C64>,
    /// Gray label of each amplitude level, lowest amplitude first.
    level_labels: Vec<usize>,
    scale: f64,
}

impl ConstellationMap {
    pub fn new(modulation: Modulation) -> Self {
        let order = modulation.order();
        let m = 1usize << (modulation.bits_per_symbol() / 2);
        let scale = 1.0 / (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let level_labels: Vec<usize> = (0..m).map(|i| i ^ (i >> 1)).collect();
        let mut label_levels = alloc::vec![0; m];
        for (level, &label) in level_labels.iter().enumerate() {
            label_levels[label] = level;
        }
        let amp = |level: usize| (2.0 * level as f64 - (m as f64 - 1.0)) * scale;
        let points = (0..order)
            .map(|label| {
                let i = label_levels[label / m];
                let q = label_levels[label % m];
                C64::new(amp(i), amp(q))
            })
            .collect();
        Self {
            modulation,
            points,
            level_labels,
            scale,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    fn side(&self) -> usize {
        self.level_labels.len()
    }

    fn nearest_level(&self, x: f64) -> usize {
        let m = self.side() as f64;
        let idx = ((x / self.scale + m - 1.0) / 2.0).round();
        if idx.is_nan() {
            0
        } else {
            idx.clamp(0.0, m - 1.0) as usize
        }
    }

    /// Label of the nearest constellation point.
    pub fn decide(&self, symbol: C64) -> usize {
        let i = self.level_labels[self.nearest_level(symbol.re)];
        let q = self.level_labels[self.nearest_level(symbol.im)];
        i * self.side() + q
    }

    /// Maps bits (one `0`/`1` per byte, most significant first) to symbols.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let k = self.modulation.bits_per_symbol();
        if !bits.len().is_multiple_of(k) {
            return Err(Error::invalid("bit count must be a multiple of the bits per symbol"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bits must be 0 or 1"));
        }
        Ok(bits
            .chunks(k)
            .map(|c| self.points[c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)])
            .collect())
    }

    pub fn demodulate(&self, symbols: &[C64]) -> Vec<u8> {
        let k = self.modulation.bits_per_symbol();
        let mut bits = Vec::with_capacity(symbols.len() * k);
        for &s in symbols {
            let label = self.decide(s);
            for shift in (0..k).rev() {
                bits.push(((label >> shift) & 1) as u8);
            }
        }
        bits
    }
}

pub fn qam_mod(bits: &[u8], modulation: Modulation) -> Result<Vec<C64>> {
    ConstellationMap::new(modulation).modulate(bits)
}

pub fn qam_demod(symbols: &[C64], modulation: Modulation) -> Vec<u8> {
    ConstellationMap::new(modulation).demodulate(symbols)
}

/// Top `streams` right singular vectors of `h_est`, strongest first.
pub fn svd_precoder(h_est: &CMat, streams: usize) -> Result<CMat> {
    let (rows, cols) = h_est.shape();
    if streams == 0 || streams > rows.min(cols) {
        return Err(Error::invalid("stream count must lie in 1..=min(N_r, N_t)"));
    }
    if !linalg::is_finite(h_est) {
        return Err(Error::NonFinite("precoder channel"));
    }
    if linalg::frobenius_sq(h_est) == 0.0 {
        return Err(Error::ZeroReference);
    }
    let svd = h_est.clone().svd(false, true);
    let v_t = svd.v_t.ok_or(Error::Singular)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(CMat::from_fn(cols, streams, |n, s| v_t[(order[s], n)].conj()))
}

/// `H V X + N`, `N` i.i.d. `CN(0, noise_power)`.
pub fn transmit<R: Rng + ?Sized>(
    h_true: &CMat,
    precoder: &CMat,
    symbols: &CMat,
    noise_power: f64,
    rng: &mut R,
) -> Result<CMat> {
    if !(noise_power >= 0.0) {
        return Err(Error::invalid("noise power must be nonnegative"));
    }
    linalg::check_shape("precoder", precoder, (h_true.ncols(), symbols.nrows()))?;
    let mut y = h_true * precoder * symbols;
    if noise_power > 0.0 {
        for x in y.iter_mut() {
            *x += complex_normal(rng, noise_power);
        }
    }
    Ok(y)
}

/// `(G^H G + reg I)^{-1} G^H Y` with `G = H_est V`.
pub fn lmmse_equalize(received: &CMat, h_est: &CMat, precoder: &CMat, regularizer: f64) -> Result<CMat> {
    if !(regularizer >= 0.0) {
        return Err(Error::invalid("regularizer must be nonnegative"));
    }
    linalg::check_shape("precoder", precoder, (h_est.ncols(), precoder.ncols()))?;
    linalg::check_shape("received", received, (h_est.nrows(), received.ncols()))?;
    let g = h_est * precoder;
    linalg::regularized_normal_solve(&g, received, regularizer)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub streams: usize,
    pub modulation: Modulation,
    /// Symbol vectors sent per run.
    pub num_symbols: usize,
    /// Data-phase noise power per receive entry.
    pub noise_power: f64,
    /// Equalizer regularizer; defaults to `noise_power`.
    pub equalizer_regularizer: Option<f64>,
    /// Divides each equalized stream by its nominal LMMSE gain before
    /// decisions.
    pub bias_compensation: bool,
    pub seed: u64,
}

impl LinkConfig {
    pub fn new(streams: usize, modulation: Modulation, num_symbols: usize, noise_power: f64, seed: u64) -> Self {
        Self {
            streams,
            modulation,
            num_symbols,
            noise_power,
            equalizer_regularizer: None,
            bias_compensation: true,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOutcome {
    pub bit_errors: u64,
    pub num_bits: u64,
    pub ber: f64,
}

/// Random bits, SVD precoding from `h_est`, transmission over `h_true`, LMMSE
/// equalization with `h_est` and hard decisions.
pub fn run_link(h_true: &CMat, h_est: &CMat, config: &LinkConfig) -> Result<LinkOutcome> {
    linalg::check_shape("estimated channel", h_est, h_true.shape())?;
    if config.num_symbols == 0 {
        return Err(Error::invalid("num_symbols must be at least 1"));
    }
    let map = ConstellationMap::new(config.modulation);
    let k = config.modulation.bits_per_symbol();
    let n_s = config.streams;
    let precoder = svd_precoder(h_est, n_s)?;

    let mut bit_rng = split(config.seed, 0);
    let mut noise_rng = split(config.seed, 1);
    let bits: Vec<u8> = (0..n_s * config.num_symbols * k)
        .map(|_| bit_rng.random::<bool>() as u8)
        .collect();
    let symbols = CMat::from_vec(n_s, config.num_symbols, map.modulate(&bits)?);
    let received = transmit(h_true, &precoder, &symbols, config.noise_power, &mut noise_rng)?;

    let reg = config.equalizer_regularizer.unwrap_or(config.noise_power);
    let mut eq = lmmse_equalize(&received, h_est, &precoder, reg)?;
    if config.bias_compensation && reg > 0.0 {
        let g = h_est * &precoder;
        let gain = linalg::regularized_normal_solve(&g, &g, reg)?;
        for s in 0..n_s {
            let d = gain[(s, s)];
            if d.norm() > 0.0 {
                let mut row = eq.row_mut(s);
                row /= d;
            }
        }
    }

    let decided = map.demodulate(eq.as_slice());
    let bit_errors = bits.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
    let num_bits = bits.len() as u64;
    Ok(LinkOutcome {
        bit_errors,
        num_bits,
        ber: bit_errors as f64 / num_bits as f64,
    })
}
