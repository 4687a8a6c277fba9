use std::sync::atomic::{AtomicUsize, Ordering};

use chanest_core::channels::{gen_qpsk_pilots, observe, PilotSet};
use chanest_core::estimators::*;
use chanest_core::linalg::{frobenius_sq, CMat, C64};
use chanest_core::rng::{complex_normal_matrix, seeded};
use chanest_core::scores::{gaussian_score, geometric_schedule, NoiseSchedule, ScoreFunction};
use chanest_core::{Error, Result};

fn config(alpha0: f64, decay: f64, schedule: NoiseSchedule, seed: u64) -> LangevinConfig {
    LangevinConfig::new(alpha0, 1.0, decay, schedule, 3, seed).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Counting<S> {
    inner: S,
    calls: AtomicUsize,
}

impl<S: ScoreFunction> ScoreFunction for Counting<S> {
    fn name(&self) -> &str {
        "counting"
    }
    fn evaluate_into(&self, x: &CMat, sigma: f64, out: &mut CMat) -> Result<()> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate_into(x, sigma, out)
    }
}

struct ZeroScore;

impl ScoreFunction for ZeroScore {
    fn name(&self) -> &str {
        "zero"
    }
    fn evaluate_into(&self, _: &CMat, _: f64, out: &mut CMat) -> Result<()> {
        out.fill(C64::new(0.0, 0.0));
        Ok(())
    }
}

struct NanScore;

impl ScoreFunction for NanScore {
    fn name(&self) -> &str {
        "nan"
    }
    fn evaluate_into(&self, _: &CMat, _: f64, out: &mut CMat) -> Result<()> {
        out.fill(C64::new(f64::NAN, 0.0));
        Ok(())
    }
}

fn problem(rows: usize, cols: usize, n_p: usize, noise: f64, seed: u64) -> (CMat, PilotSet) {
    let mut rng = seeded(seed);
    let h = complex_normal_matrix(&mut rng, rows, cols, 1.0);
    let p = gen_qpsk_pilots(cols, n_p, &mut rng).unwrap();
    let ps = observe(&h, &p, noise, &mut rng).unwrap();
    (h, ps)
}

#[test]
fn likelihood_score_examples() {
    let (h, ps) = problem(3, 5, 4, 0.0, 1);
    let cfg = config(0.01, 0.9, NoiseSchedule::new(vec![1.0]).unwrap(), 0);
    let z = likelihood_score(&h, &ps, 0.5, &cfg, 0).unwrap();
    assert!(z.norm() < 1e-12);

    let y = complex_normal_matrix(&mut seeded(2), 3, 4, 1.0);
    let hh = complex_normal_matrix(&mut seeded(3), 3, 4, 1.0);
    let ident = PilotSet::general(CMat::identity(4, 4), y.clone(), 1.0).unwrap();
    let got = likelihood_score(&hh, &ident, 1.0, &cfg, 0).unwrap();
    let want = (&y - &hh) * C64::new(0.5, 0.0);
    assert!((got - want).norm() < 1e-14);
}

#[test]
fn likelihood_score_is_the_log_likelihood_gradient() {
    let (_, ps) = problem(3, 6, 4, 0.3, 4);
    let h = complex_normal_matrix(&mut seeded(5), 3, 6, 1.0);
    let sigma = 0.7;
    let cfg = config(0.01, 0.9, NoiseSchedule::new(vec![1.0]).unwrap(), 0);
    let den = ps.noise_power() + sigma * sigma;
    let logp = |h: &CMat| -frobenius_sq(&(ps.received() - h * ps.pilots())) / den;
    let got = likelihood_score(&h, &ps, sigma, &cfg, 0).unwrap();
    let eps = 1e-6;
    for k in 0..h.len() {
        let mut d = [0.0; 2];
        for (part, slot) in d.iter_mut().enumerate() {
            let mut hp = h.clone();
            let mut hm = h.clone();
            if part == 0 {
                hp[k].re += eps;
                hm[k].re -= eps;
            } else {
                hp[k].im += eps;
                hm[k].im -= eps;
            }
            *slot = (logp(&hp) - logp(&hm)) / (2.0 * eps);
        }
        // conjugate Wirtinger derivative
        let fd = C64::new(d[0], d[1]) * 0.5;
        assert!((fd - got[k]).norm() <= 1e-6 * got[k].norm().max(1.0), "entry {k}");
    }
}

#[test]
fn annealing_denominator_variant() {
    let (h, ps) = problem(2, 4, 3, 0.2, 6);
    let mut cfg = config(0.05, 0.5, NoiseSchedule::new(vec![2.0, 1.0]).unwrap(), 0);
    cfg.denominator = LikelihoodDenominator::NoisePlusAnnealing;
    let got = likelihood_score(&h, &ps, 0.8, &cfg, 1).unwrap();
    let step = 0.05 * 0.5;
    let den = 0.2 + 2.0 * step * 0.64;
    let want = (ps.received() - &h * ps.pilots()) * ps.pilots().adjoint() / C64::new(den, 0.0);
    assert!((got - want).norm() < 1e-12);
}

#[test]
fn step_sizes_decay_geometrically() {
    let cfg = config(3e-3, 0.97, geometric_schedule(3.0, 0.01, 200).unwrap(), 0);
    let steps = cfg.step_sizes();
    assert_eq!(steps.len(), 200);
    assert_eq!(steps[0], 3e-3);
    for (i, w) in steps.windows(2).enumerate() {
        assert_eq!(w[1], w[0] * 0.97);
        assert_eq!(cfg.step_at(i + 1), w[1]);
        assert!((w[1] / w[0] - 0.97).abs() <= 1e-15);
    }
}

#[test]
fn config_validation() {
    let s = || NoiseSchedule::new(vec![1.0]).unwrap();
    assert!(LangevinConfig::new(0.0, 1.0, 0.5, s(), 3, 0).is_err());
    assert!(LangevinConfig::new(0.1, 0.0, 0.5, s(), 3, 0).is_err());
    assert!(LangevinConfig::new(0.1, 1.0, 1.0, s(), 3, 0).is_err());
    assert!(LangevinConfig::new(0.1, 1.0, 0.5, s(), 0, 0).is_err());
}

#[test]
fn posterior_runs_exactly_l_times_m_updates() {
    let (_, ps) = problem(4, 8, 5, 0.1, 7);
    let score = Counting {
        inner: gaussian_score(CMat::zeros(4, 8), 1.0).unwrap(),
        calls: AtomicUsize::new(0),
    };
    let mut cfg = config(0.01, 0.99, geometric_schedule(1.0, 0.1, 17).unwrap(), 3);
    cfg.inner_steps = 4;
    let report = langevin_posterior(&ps, &score, &cfg).unwrap();
    assert_eq!(report.iterations, 68);
    assert_eq!(report.residual_trace.len(), 68);
    assert_eq!(report.score_evaluations, 68);
    assert_eq!(report.likelihood_evaluations, 68);
    assert_eq!(score.calls.load(Ordering::Relaxed), 68);
}

#[test]
fn posterior_is_deterministic() {
    let (_, ps) = problem(4, 8, 5, 0.1, 8);
    let score = gaussian_score(CMat::zeros(4, 8), 1.0).unwrap();
    let cfg = config(0.01, 0.99, geometric_schedule(1.0, 0.1, 20).unwrap(), 11);
    let a = langevin_posterior(&ps, &score, &cfg).unwrap();
    let b = langevin_posterior(&ps, &score, &cfg).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed = 12;
    assert_ne!(langevin_posterior(&ps, &score, &other).unwrap().estimate, a.estimate);
}

#[test]
fn posterior_reports_divergence() {
    let (_, ps) = problem(2, 4, 3, 0.1, 9);
    let cfg = config(0.01, 0.9, geometric_schedule(1.0, 0.1, 5).unwrap(), 0);
    assert_eq!(
        langevin_posterior(&ps, &NanScore, &cfg).unwrap_err(),
        Error::Diverged { level: 0, step: 0 }
    );
    // a step far above the stability bound blows up in finite time
    let (_, ps) = problem(2, 4, 4, 1e-6, 10);
    let cfg = config(10.0, 0.999, geometric_schedule(1.0, 0.5, 400).unwrap(), 0);
    assert!(matches!(
        langevin_posterior(&ps, &ZeroScore, &cfg),
        Err(Error::Diverged { .. })
    ));
}

#[test]
fn posterior_matches_gaussian_posterior_mean() {
    // square QPSK pilots, prior CN(0, I), unit pilot noise
    let score = gaussian_score(CMat::zeros(4, 8), 1.0).unwrap();
    let mut gaps = Vec::new();
    for trial in 0..21 {
        let (h, ps) = problem(4, 8, 8, 1.0, 100 + trial);
        let cfg = config(0.02, 0.999, geometric_schedule(1.0, 0.01, 300).unwrap(), 500 + trial);
        let est = langevin_posterior(&ps, &score, &cfg).unwrap().estimate;
        let oracle = gaussian_posterior_mean(&ps, &CMat::zeros(4, 8), 1.0).unwrap();
        gaps.push(nmse_db(&est, &h).unwrap() - nmse_db(&oracle, &h).unwrap());
    }
    let gap = median(gaps);
    assert!(gap.abs() < 1.0, "median gap {gap} dB");
}

#[test]
fn zero_score_converges_to_least_squares() {
    // overdetermined pilots; beta -> 0 removes the injected noise
    let (_, ps) = problem(3, 4, 8, 1.0, 13);
    let mut cfg = config(0.02, 0.9999, geometric_schedule(1e-3, 1e-4, 200).unwrap(), 1);
    cfg.beta = 1e-12;
    let report = langevin_posterior(&ps, &ZeroScore, &cfg).unwrap();
    let tail = &report.residual_trace[report.residual_trace.len() - 3..];
    assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let ls = regularized_ls(&ps, ps.noise_power() * 0.0 + 1e-6).unwrap();
    let rel = (&report.estimate - &ls).norm() / ls.norm();
    assert!(rel < 1e-3, "relative distance {rel}");
}

#[test]
fn prior_sampling_recovers_gaussian_moments() {
    // the unsmoothed score has stationary variance beta sigma^2 v; end at sigma = 1
    let v = 0.5;
    let score = gaussian_score(CMat::zeros(1, 1), v).unwrap();
    let n = 500;
    let draws: Vec<C64> = (0..n)
        .map(|seed| {
            let cfg = config(0.005, 0.9999, geometric_schedule(1.01, 1.0, 300).unwrap(), seed);
            langevin_prior(&score, (1, 1), &cfg).unwrap()[(0, 0)]
        })
        .collect();
    let mean = draws.iter().sum::<C64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
    let se = (v / n as f64).sqrt();
    assert!(mean.norm() < 3.0 * se, "mean {mean}");
    assert!((var - v).abs() < 0.1 * v, "variance {var}");
}

#[test]
fn prior_sampling_concentrates_on_a_single_sample() {
    use chanest_core::scores::{empirical_smoothed_score, EmpiricalPrior};
    let h1 = complex_normal_matrix(&mut seeded(21), 2, 3, 1.0);
    let score = empirical_smoothed_score(EmpiricalPrior::new(std::slice::from_ref(&h1)).unwrap());
    let levels = 60;
    let (smax, smin) = (1.0f64, 0.01);
    let decay = (smin / smax).powf(2.0 / (levels - 1) as f64);
    for seed in 0..5 {
        let cfg = config(0.5 * smax * smax, decay, geometric_schedule(smax, smin, levels).unwrap(), seed);
        let draw = langevin_prior(&score, (2, 3), &cfg).unwrap();
        assert!((draw - &h1).norm() < 0.1 * h1.norm());
    }
}

#[test]
fn soft_threshold_examples() {
    assert_eq!(soft_threshold(C64::new(0.5, 0.0), 1.0), C64::new(0.0, 0.0));
    assert_eq!(soft_threshold(C64::new(3.0, 4.0), 5.0), C64::new(0.0, 0.0));
    let got = soft_threshold(C64::new(3.0, 4.0), 1.0);
    assert!((got - C64::new(3.0, 4.0) * 0.8).norm() < 1e-15);
    assert_eq!(soft_threshold(C64::new(-2.0, 0.0), 0.0), C64::new(-2.0, 0.0));
}

#[test]
fn dft_frames() {
    let f = parseval_dft(8, 1).unwrap();
    assert!((f.adjoint() * &f - CMat::identity(8, 8)).norm() < 1e-12);
    assert!((&f * f.adjoint() - CMat::identity(8, 8)).norm() < 1e-12);
    let w = parseval_dft(6, 4).unwrap();
    assert_eq!(w.shape(), (24, 6));
    assert!((w.adjoint() * &w - CMat::identity(6, 6)).norm() < 1e-12);
    let raw = oversampled_dft(6, 4).unwrap();
    let expect = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * 15.0 / 24.0);
    assert!((raw[(5, 3)] - expect).norm() < 1e-12);
}

#[test]
fn regularized_ls_examples() {
    let mut rng = seeded(30);
    let h = complex_normal_matrix(&mut rng, 3, 4, 1.0);
    let p = gen_qpsk_pilots(4, 4, &mut rng).unwrap();
    // QPSK Hadamard-like pilots need not be invertible; use a scaled unitary
    let u = parseval_dft(4, 1).unwrap() * C64::new(2.0, 0.0);
    let ps = PilotSet::general(u.clone(), &h * &u, 0.0).unwrap();
    assert!((regularized_ls(&ps, 0.0).unwrap() - &h).norm() < 1e-12);
    assert!(regularized_ls(&ps, 1e12).unwrap().norm() < 1e-9);

    let under = observe(&h, &gen_qpsk_pilots(4, 2, &mut rng).unwrap(), 0.1, &mut rng).unwrap();
    assert_eq!(regularized_ls(&under, 0.0), Err(Error::Singular));
    let _ = p;

    for (rows, cols, n_p, seed) in [(2, 3, 5, 1), (4, 6, 3, 2), (5, 5, 5, 3)] {
        let (_, ps) = problem(rows, cols, n_p, 0.4, seed);
        let a = regularized_ls(&ps, 0.4).unwrap();
        let b = gaussian_posterior_mean(&ps, &CMat::zeros(rows, cols), 1.0).unwrap();
        assert!((a - b).norm() < 1e-10);
    }
}

fn sparse(lambda: f64, iters: usize) -> SparseParams {
    SparseParams {
        lambda,
        max_iters: iters,
        ..SparseParams::default()
    }
}

#[test]
fn lasso_exact_and_zero_limits() {
    let h = complex_normal_matrix(&mut seeded(40), 3, 4, 1.0);
    let u = parseval_dft(4, 1).unwrap() * C64::new(3.0, 0.0);
    let ps = PilotSet::general(u.clone(), &h * &u, 0.0).unwrap();
    let est = lasso_beamspace(&ps, &sparse(0.0, 50)).unwrap().estimate;
    assert!((est - &h).norm() / h.norm() < 1e-6);
    let est = fsad(&ps, 4, &sparse(0.0, 2000)).unwrap().estimate;
    assert!((est - &h).norm() / h.norm() < 1e-6);

    let zero = PilotSet::general(u, CMat::zeros(3, 4), 0.0).unwrap();
    assert_eq!(lasso_beamspace(&zero, &sparse(1e3, 10)).unwrap().estimate.norm(), 0.0);
    let (_, ps) = problem(4, 8, 5, 0.1, 41);
    assert_eq!(lasso_beamspace(&ps, &sparse(1e6, 10)).unwrap().estimate.norm(), 0.0);
}

#[test]
fn proximal_objective_is_monotone() {
    for (lift, accelerated) in [(1, false), (1, true), (4, false), (4, true)] {
        let (_, ps) = problem(4, 8, 5, 0.2, 50 + lift as u64);
        let params = SparseParams {
            lambda: 0.3,
            max_iters: 300,
            accelerated,
            ..SparseParams::default()
        };
        let report = fsad(&ps, lift, &params).unwrap();
        assert_eq!(report.objective_trace.len(), 300);
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "lift {lift}, accelerated {accelerated}");
        }
    }
}

#[test]
fn fsad_without_lifting_is_lasso() {
    let (_, ps) = problem(8, 32, 19, 0.32, 60);
    for accelerated in [false, true] {
        let params = SparseParams {
            lambda: 0.5,
            max_iters: 200,
            accelerated,
            ..SparseParams::default()
        };
        let a = lasso_beamspace(&ps, &params).unwrap();
        let b = fsad(&ps, 1, &params).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn unstable_step_is_rejected() {
    let (_, ps) = problem(4, 8, 5, 0.2, 70);
    let p = ps.pilots();
    let lmax = chanest_core::linalg::max_hermitian_eigenvalue(&(p * p.adjoint()));
    let params = SparseParams {
        lambda: 0.1,
        step: Some(2.5 / lmax),
        ..SparseParams::default()
    };
    assert!(matches!(lasso_beamspace(&ps, &params), Err(Error::UnstableStep { .. })));
    let params = SparseParams {
        step: Some(1.9 / lmax),
        ..params
    };
    assert!(lasso_beamspace(&ps, &params).is_ok());
}

#[test]
fn tuning_examples() {
    let cases: Vec<ValidationCase> = (0..3)
        .map(|s| {
            let (h, ps) = problem(4, 8, 8, 0.0, 80 + s);
            ValidationCase { pilots: ps, truth: h }
        })
        .collect();
    let lasso = |ps: &PilotSet, p: &SparseParams| lasso_beamspace(ps, p);
    let single = [sparse(0.7, 20)];
    assert_eq!(tune_hyperparams(lasso, &cases, &single).unwrap().best, single[0]);

    // noiseless, well-determined: lambda = 0 recovers exactly and wins
    let grid = [sparse(2.0, 400), sparse(0.0, 400), sparse(0.5, 400)];
    let res = tune_hyperparams(lasso, &cases, &grid).unwrap();
    assert_eq!(res.best.lambda, 0.0);
    assert_eq!(res.scores.len(), 3);
    assert_eq!(res, tune_hyperparams(lasso, &cases, &grid).unwrap());

    // ties go to the smaller lambda, then the smaller step
    let constant = |_: &PilotSet, _: &SparseParams| {
        Ok(EstimatorReport {
            estimate: CMat::zeros(4, 8),
            iterations: 0,
            residual_trace: vec![],
            objective_trace: vec![],
            score_evaluations: 0,
            likelihood_evaluations: 0,
        })
    };
    let mk = |lambda, step| SparseParams {
        lambda,
        step: Some(step),
        ..SparseParams::default()
    };
    let grid = [mk(0.5, 0.1), mk(0.2, 0.3), mk(0.2, 0.05), mk(0.9, 0.01)];
    assert_eq!(tune_hyperparams(constant, &cases, &grid).unwrap().best, mk(0.2, 0.05));
}

#[test]
fn reference_values() {
    let h = complex_normal_matrix(&mut seeded(1), 4, 6, 1.0);
    assert_eq!(nmse_db(&h, &h).unwrap(), PERFECT_NMSE_DB);
    assert!(nmse_db(&CMat::zeros(4, 6), &h).unwrap().abs() < 1e-12);
    let off = &h + &h * C64::new(0.1, 0.0);
    assert!((nmse_db(&off, &h).unwrap() + 20.0).abs() < 1e-9);
    assert_eq!(nmse_db(&h, &CMat::zeros(4, 6)), Err(Error::ZeroReference));
}
