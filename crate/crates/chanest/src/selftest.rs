//! Built-in invariant suites behind `chanest selftest`.

use std::time::Instant;

use chanest_core::channels::{gen_qpsk_pilots, normalize_dataset, observe, sample_clustered_mimo, ClusterProfile, PilotSet};
use chanest_core::estimators::{
    fsad, gaussian_posterior_mean, lasso_beamspace, langevin_posterior, nmse_db, LangevinConfig, ResidualSign,
    SparseParams,
};
use chanest_core::linksim::{run_link, LinkConfig, Modulation};
use chanest_core::rng::{complex_normal_matrix, seeded, split};
use chanest_core::scores::{
    dsm_loss, empirical_smoothed_score, gaussian_score, geometric_schedule, EmpiricalPrior, ScoreFunction,
};
use chanest_core::wasserstein::{log_sq_integral_check, w2sq_exp_delays, w2sq_scalar_quantile};
use chanest_core::{CMat, C64};

use crate::experiments::median;
use crate::report::Table;

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    /// Flips the residual of the likelihood score. The conjugate-oracle
    /// check is expected to fail under this mutation.
    pub flip_likelihood_sign: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn check(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (passed, detail) = f();
    Check { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// `exact + offset / sigma`.
struct Offset<'a, S> {
    inner: &'a S,
    offset: CMat,
}

impl<S: ScoreFunction> ScoreFunction for Offset<'_, S> {
    fn name(&self) -> &str {
        "offset"
    }

    fn evaluate_into(&self, x: &CMat, sigma: f64, out: &mut CMat) -> chanest_core::Result<()> {
        self.inner.evaluate_into(x, sigma, out)?;
        *out += &self.offset / C64::new(sigma, 0.0);
        Ok(())
    }
}

struct ZeroScore;

impl ScoreFunction for ZeroScore {
    fn name(&self) -> &str {
        "zero"
    }

    fn evaluate_into(&self, _: &CMat, _: f64, out: &mut CMat) -> chanest_core::Result<()> {
        out.fill(C64::new(0.0, 0.0));
        Ok(())
    }
}

/// Normalized two-cluster `rows x cols` prior of `n` samples.
pub fn clustered_prior(n: usize, shape: (usize, usize), seed: u64) -> chanest_core::Result<EmpiricalPrior> {
    let profile = ClusterProfile::new(
        vec![0.8f64.sqrt(), 0.2f64.sqrt()],
        vec![0.3, -0.6],
        vec![-0.2, 0.9],
        0.05,
        shape,
        0.5,
    )?;
    let mut rng = seeded(seed);
    let raw: Vec<CMat> = (0..n).map(|_| sample_clustered_mimo(&profile, &mut rng)).collect();
    EmpiricalPrior::new(&normalize_dataset(&raw)?.0)
}

/// Trials in which the exact smoothed-empirical score has strictly lower DSM
/// loss than the zero score and every one of `perturbations` perturbed
/// scores, out of `trials`.
pub fn dsm_optimality(prior: &EmpiricalPrior, trials: u64, perturbations: u64, batch: usize) -> chanest_core::Result<u64> {
    let exact = empirical_smoothed_score(prior.clone());
    let schedule = geometric_schedule(3.0, 0.05, 10)?;
    let (rows, cols) = prior.shape();
    let mut wins = 0;
    for trial in 0..trials {
        let seed = 1000 + trial;
        let base = dsm_loss(&exact, prior, &schedule, batch, &mut seeded(seed))?;
        let mut won = base < dsm_loss(&ZeroScore, prior, &schedule, batch, &mut seeded(seed))?;
        for k in 0..perturbations {
            let offset = complex_normal_matrix(&mut split(seed, k), rows, cols, 0.01);
            let perturbed = Offset { inner: &exact, offset };
            won &= base < dsm_loss(&perturbed, prior, &schedule, batch, &mut seeded(seed))?;
        }
        wins += u64::from(won);
    }
    Ok(wins)
}

fn gaussian_problem(shape: (usize, usize), n_p: usize, noise: f64, seed: u64) -> chanest_core::Result<(CMat, PilotSet)> {
    let mut rng = seeded(seed);
    let h = complex_normal_matrix(&mut rng, shape.0, shape.1, 1.0);
    let pilots = gen_qpsk_pilots(shape.1, n_p, &mut rng)?;
    let ps = observe(&h, &pilots, noise, &mut rng)?;
    Ok((h, ps))
}

/// Median NMSE gap in dB between Langevin sampling with the analytic
/// Gaussian score and the closed-form posterior mean on a `4 x 8` system.
pub fn conjugate_oracle_gap(trials: u64, flip: bool) -> chanest_core::Result<f64> {
    let score = gaussian_score(CMat::zeros(4, 8), 1.0)?;
    let mut gaps = Vec::new();
    for trial in 0..trials {
        let (h, ps) = gaussian_problem((4, 8), 8, 1.0, 100 + trial)?;
        let mut cfg = LangevinConfig::new(0.02, 1.0, 0.999, geometric_schedule(1.0, 0.01, 300)?, 3, 500 + trial)?;
        if flip {
            cfg.residual_sign = ResidualSign::ModelMinusData;
        }
        let oracle = gaussian_posterior_mean(&ps, &CMat::zeros(4, 8), 1.0)?;
        let gap = match langevin_posterior(&ps, &score, &cfg) {
            Ok(r) => nmse_db(&r.estimate, &h)? - nmse_db(&oracle, &h)?,
            Err(chanest_core::Error::Diverged { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        gaps.push(gap);
    }
    Ok(median(&gaps))
}

fn describe<T: std::fmt::Display>(r: chanest_core::Result<T>, ok: impl FnOnce(&T) -> bool) -> (bool, String) {
    match r {
        Ok(v) => (ok(&v), v.to_string()),
        Err(e) => (false, format!("error: {e}")),
    }
}

pub fn run(opts: SelftestOptions) -> Vec<Check> {
    let mut checks = Vec::new();
    checks.push(check("quadrature-log-squared", || {
        describe(log_sq_integral_check(1_000_000), |v| (v - 2.0).abs() < 1e-3)
    }));
    checks.push(check("quadrature-gaussian-pair", || {
        let normal = statrs::distribution::Normal::standard();
        let q = move |u: f64| statrs::distribution::ContinuousCDF::inverse_cdf(&normal, u);
        describe(w2sq_scalar_quantile(q, |u| 2.0 * q(u), 100_000), |v| (v - 1.0).abs() < 1e-3)
    }));
    checks.push(check("quadrature-exponential-pair", || {
        let quad = w2sq_scalar_quantile(|u| -(-u).ln_1p(), |_| 0.0, 1_000_000);
        describe(quad, |v| {
            let exact = w2sq_exp_delays(1.0, 0.0).unwrap_or(f64::NAN);
            ((v - exact) / exact).abs() < 1e-4
        })
    }));
    checks.push(check("dsm-optimality", || {
        let wins = clustered_prior(500, (4, 16), 7).and_then(|p| dsm_optimality(&p, 5, 5, 100));
        match wins {
            Ok(w) => (w == 5, format!("{w}/5")),
            Err(e) => (false, format!("error: {e}")),
        }
    }));
    checks.push(check("conjugate-oracle", || {
        describe(conjugate_oracle_gap(11, opts.flip_likelihood_sign), |g| g.abs() < 1.0)
    }));
    checks.push(check("fsad-lift-one-equals-lasso", || {
        let result = (|| -> chanest_core::Result<bool> {
            let mut rng = seeded(60);
            let h = complex_normal_matrix(&mut rng, 8, 32, 1.0);
            let pilots = gen_qpsk_pilots(32, 19, &mut rng)?;
            let ps = observe(&h, &pilots, 0.32, &mut rng)?;
            let mut same = true;
            for accelerated in [false, true] {
                let params = SparseParams { lambda: 0.5, max_iters: 200, accelerated, ..SparseParams::default() };
                same &= lasso_beamspace(&ps, &params)? == fsad(&ps, 1, &params)?;
            }
            Ok(same)
        })();
        describe(result, |s| *s)
    }));
    checks.push(check("link-perfect-csi-noiseless", || {
        let result = (|| -> chanest_core::Result<f64> {
            let h = complex_normal_matrix(&mut seeded(5), 8, 32, 1.0);
            Ok(run_link(&h, &h, &LinkConfig::new(4, Modulation::Qam16, 1000, 0.0, 9))?.ber)
        })();
        describe(result, |b| *b == 0.0)
    }));
    checks
}

/// Pass/fail table of a self-test run.
pub fn table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["check", "status", "detail"]);
    for c in checks {
        t.push(vec![
            c.name.to_string(),
            if c.passed { "pass" } else { "fail" }.to_string(),
            c.detail.clone(),
        ]);
    }
    t
}
