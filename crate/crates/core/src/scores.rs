//! Score functions of channel priors and score-matching losses.
//!
//! Convention: for a complex perturbation `Z` with per-entry variance
//! `sigma^2`, the denoising target is `-Z / sigma^2`. A prior `CN(mu, v I)`
//! therefore has score `(mu - x) / v`. The likelihood score used by the
//! samplers follows the same convention.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::linalg::{self, CMat, C64};
use crate::rng::{complex_normal, seeded};
use crate::{Error, Result};

/// A (possibly noise-level conditioned) score of a channel prior.
pub trait ScoreFunction: Sync {
    fn name(&self) -> &str;

    /// Writes the score at `point` for noise level `sigma` into `out`, which
    /// has the shape of `point`.
    fn evaluate_into(&self, point: &CMat, sigma: f64, out: &mut CMat) -> Result<()>;

    fn evaluate(&self, point: &CMat, sigma: f64) -> Result<CMat> {
        let mut out = linalg::zeros(point.nrows(), point.ncols());
        self.evaluate_into(point, sigma, &mut out)?;
        Ok(out)
    }
}

impl<S: ScoreFunction + ?Sized> ScoreFunction for &S {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn evaluate_into(&self, point: &CMat, sigma: f64, out: &mut CMat) -> Result<()> {
        (**self).evaluate_into(point, sigma, out)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("noise level must be positive, got {sigma}")))
    }
}

/// Strictly decreasing positive noise levels `sigma_1 > ... > sigma_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    levels: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("noise schedule needs at least one level"));
        }
        if levels.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("noise levels must be positive and finite"));
        }
        if levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("noise levels must be strictly decreasing"));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// `levels[l] = sigma_max (sigma_min / sigma_max)^(l / (L - 1))`.
pub fn geometric_schedule(sigma_max: f64, sigma_min: f64, levels: usize) -> Result<NoiseSchedule> {
    if !(sigma_min > 0.0 && sigma_max > sigma_min && sigma_max.is_finite()) {
        return Err(Error::invalid("geometric schedule needs sigma_max > sigma_min > 0"));
    }
    if levels < 2 {
        return Err(Error::invalid("geometric schedule needs at least two levels"));
    }
    let ratio = sigma_min / sigma_max;
    let last = (levels - 1) as f64;
    let mut out: Vec<f64> = (0..levels)
        .map(|l| sigma_max * ratio.powf(l as f64 / last))
        .collect();
    out[levels - 1] = sigma_min;
    NoiseSchedule::new(out)
}

/// Score of `CN(mean, v I)`, optionally smoothed by the evaluation noise
/// level (`CN(mean, (v + sigma^2) I)`).
#[derive(Debug, Clone)]
pub struct GaussianScore {
    mean: CMat,
    variance: f64,
    smoothed: bool,
    name: String,
}

impl GaussianScore {
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn mean(&self) -> &CMat {
        &self.mean
    }

    /// The noise-level conditioned variant, `(mean - x) / (v + sigma^2)`.
    pub fn smoothed(mean: CMat, variance: f64) -> Result<Self> {
        let mut s = gaussian_score(mean, variance)?;
        s.smoothed = true;
        s.name = format!("gaussian-smoothed(v={variance})");
        Ok(s)
    }
}

/// `(mean - x) / v`, independent of the noise level.
pub fn gaussian_score(mean: CMat, variance: f64) -> Result<GaussianScore> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::invalid("Gaussian prior variance must be positive"));
    }
    Ok(GaussianScore {
        mean,
        variance,
        smoothed: false,
        name: format!("gaussian(v={variance})"),
    })
}

impl ScoreFunction for GaussianScore {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate_into(&self, point: &CMat, sigma: f64, out: &mut CMat) -> Result<()> {
        linalg::check_shape("gaussian score", point, self.mean.shape())?;
        let v = if self.smoothed {
            check_sigma(sigma)?;
            self.variance + sigma * sigma
        } else {
            self.variance
        };
        let inv = 1.0 / v;
        for ((o, m), x) in out.iter_mut().zip(self.mean.iter()).zip(point.iter()) {
            *o = (m - x) * inv;
        }
        Ok(())
    }
}

/// Mixture of isotropic complex Gaussians, smoothed by the noise level.
#[derive(Debug, Clone)]
pub struct GaussianMixtureScore {
    weights: Vec<f64>,
    means: Vec<CMat>,
    variances: Vec<f64>,
}

impl GaussianMixtureScore {
    /// Components `(weight, mean, variance)`; weights are renormalized.
    /// Zero variances are allowed (point masses), provided `sigma > 0` at
    /// evaluation.
    pub fn new(components: Vec<(f64, CMat, f64)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        let shape = first.1.shape();
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components
            .iter()
            .any(|(w, m, v)| !(*w > 0.0) || *v < 0.0 || m.shape() != shape)
        {
            return Err(Error::invalid(
                "mixture components need positive weight, nonnegative variance and a common shape",
            ));
        }
        let mut weights = Vec::with_capacity(components.len());
        let mut means = Vec::with_capacity(components.len());
        let mut variances = Vec::with_capacity(components.len());
        for (w, m, v) in components {
            weights.push(w / total);
            means.push(m);
            variances.push(v);
        }
        Ok(Self { weights, means, variances })
    }
}

impl ScoreFunction for GaussianMixtureScore {
    fn name(&self) -> &str {
        "gaussian-mixture"
    }

    fn evaluate_into(&self, point: &CMat, sigma: f64, out: &mut CMat) -> Result<()> {
        check_sigma(sigma)?;
        linalg::check_shape("mixture score", point, self.means[0].shape())?;
        let d = point.len() as f64;
        let s2 = sigma * sigma;
        let logits: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| {
                let s = v + s2;
                let dist: f64 = point.iter().zip(m.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
                w.ln() - d * s.ln() - dist / s
            })
            .collect();
        let resp = softmax(&logits);
        out.fill(C64::new(0.0, 0.0));
        for ((r, m), v) in resp.iter().zip(&self.means).zip(&self.variances) {
            if *r == 0.0 {
                continue;
            }
            let k = r / (v + s2);
            for ((o, mu), x) in out.iter_mut().zip(m.iter()).zip(point.iter()) {
                *o += (mu - x) * k;
            }
        }
        Ok(())
    }
}

/// Log-sum-exp stabilized softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Training channels stored contiguously (each sample in the column-major
/// layout of [`CMat`]).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPrior {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl EmpiricalPrior {
    pub fn new(samples: &[CMat]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::invalid("empirical prior needs at least one sample"))?;
        let (rows, cols) = first.shape();
        let mut data = Vec::with_capacity(samples.len() * rows * cols);
        for s in samples {
            linalg::check_shape("empirical prior sample", s, (rows, cols))?;
            if !linalg::is_finite(s) {
                return Err(Error::NonFinite("empirical prior sample"));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Self { rows, cols, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.rows * self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn sample_slice(&self, i: usize) -> &[C64] {
        let d = self.rows * self.cols;
        &self.data[i * d..(i + 1) * d]
    }

    pub fn sample(&self, i: usize) -> CMat {
        CMat::from_column_slice(self.rows, self.cols, self.sample_slice(i))
    }

    /// Keeps at most `max` samples, chosen by a seeded partial shuffle.
    pub fn capped(self, max: usize, seed: u64) -> Self {
        let n = self.len();
        if n <= max {
            return self;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = seeded(seed);
        for i in 0..max {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        let mut keep = idx[..max].to_vec();
        keep.sort_unstable();
        let mut data = Vec::with_capacity(max * self.rows * self.cols);
        for i in keep {
            data.extend_from_slice(self.sample_slice(i));
        }
        Self { data, ..self }
    }
}

/// Exact minimizer of the denoising score-matching loss for the empirical
/// distribution `(1/n) sum_i delta_{H_i}`: the score of that distribution
/// convolved with `CN(0, sigma^2 I)`.
#[derive(Debug, Clone)]
pub struct EmpiricalScore {
    prior: EmpiricalPrior,
}

pub fn empirical_smoothed_score(prior: EmpiricalPrior) -> EmpiricalScore {
    EmpiricalScore { prior }
}

impl EmpiricalScore {
    pub fn prior(&self) -> &EmpiricalPrior {
        &self.prior
    }

    /// Posterior weights `softmax_i(-||x - H_i||^2 / sigma^2)`.
    pub fn weights(&self, point: &CMat, sigma: f64) -> Result<Vec<f64>> {
        check_sigma(sigma)?;
        linalg::check_shape("empirical score", point, self.prior.shape())?;
        let x = point.as_slice();
        let s2 = sigma * sigma;
        let logits: Vec<f64> = (0..self.prior.len())
            .map(|i| {
                let dist: f64 = self
                    .prior
                    .sample_slice(i)
                    .iter()
                    .zip(x)
                    .map(|(h, x)| (h - x).norm_sqr())
                    .sum();
                -dist / s2
            })
            .collect();
        Ok(softmax(&logits))
    }
}

impl ScoreFunction for EmpiricalScore {
    fn name(&self) -> &str {
        "empirical-smoothed"
    }

    fn evaluate_into(&self, point: &CMat, sigma: f64, out: &mut CMat) -> Result<()> {
        let w = self.weights(point, sigma)?;
        out.fill(C64::new(0.0, 0.0));
        let acc = out.as_mut_slice();
        for (i, wi) in w.iter().enumerate() {
            if *wi == 0.0 {
                continue;
            }
            for (a, h) in acc.iter_mut().zip(self.prior.sample_slice(i)) {
                *a += h * *wi;
            }
        }
        let inv = 1.0 / (sigma * sigma);
        for (a, x) in acc.iter_mut().zip(point.as_slice()) {
            *a = (*a - x) * inv;
        }
        Ok(())
    }
}

/// Unstabilized direct sum of the empirical smoothed score. Reference for
/// small, well-scaled inputs only: overflows or divides by zero far from the
/// data.
pub fn empirical_score_direct(prior: &EmpiricalPrior, point: &CMat, sigma: f64) -> CMat {
    let s2 = sigma * sigma;
    let mut num = linalg::zeros(point.nrows(), point.ncols());
    let mut den = 0.0;
    for i in 0..prior.len() {
        let h = prior.sample(i);
        let k = (-linalg::frobenius_sq(&(&h - point)) / s2).exp();
        num += (h - point) * C64::new(k / s2, 0.0);
        den += k;
    }
    num / C64::new(den, 0.0)
}

/// Finite-sample weighted DSM loss
/// `(1/B) sum_b sigma_b^2 ||s(H_b + Z_b, sigma_b) + Z_b / sigma_b^2||_F^2`
/// with `H_b` drawn uniformly from the prior, `sigma_b` uniformly from the
/// schedule and `Z_b ~ CN(0, sigma_b^2 I)`.
pub fn dsm_loss<S, R>(
    score: &S,
    prior: &EmpiricalPrior,
    schedule: &NoiseSchedule,
    batch: usize,
    rng: &mut R,
) -> Result<f64>
where
    S: ScoreFunction + ?Sized,
    R: Rng + ?Sized,
{
    if batch == 0 {
        return Err(Error::invalid("DSM batch size must be at least 1"));
    }
    let (rows, cols) = prior.shape();
    let mut out = linalg::zeros(rows, cols);
    let mut total = 0.0;
    for _ in 0..batch {
        let i = rng.random_range(0..prior.len());
        let sigma = schedule.levels()[rng.random_range(0..schedule.len())];
        let s2 = sigma * sigma;
        let z = CMat::from_fn(rows, cols, |_, _| complex_normal(rng, s2));
        let noisy = CMat::from_column_slice(rows, cols, prior.sample_slice(i)) + &z;
        score.evaluate_into(&noisy, sigma, &mut out)?;
        let err: f64 = out
            .iter()
            .zip(z.iter())
            .map(|(s, z)| (s + z / s2).norm_sqr())
            .sum();
        total += s2 * err;
    }
    Ok(total / batch as f64)
}

/// Mean of `||s(H_i, sigma) - oracle(H_i, sigma)||_F^2` over `samples`.
pub fn esm_loss<S, O>(score: &S, oracle: &O, samples: &[CMat], sigma: f64) -> Result<f64>
where
    S: ScoreFunction + ?Sized,
    O: ScoreFunction + ?Sized,
{
    if samples.is_empty() {
        return Err(Error::invalid("ESM loss needs at least one sample"));
    }
    let mut total = 0.0;
    for h in samples {
        let a = score.evaluate(h, sigma)?;
        let b = oracle.evaluate(h, sigma)?;
        total += linalg::frobenius_sq(&(a - b));
    }
    Ok(total / samples.len() as f64)
}
