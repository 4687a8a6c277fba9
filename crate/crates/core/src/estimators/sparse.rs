//! Proximal-gradient solvers for l1-regularized recovery in DFT dictionaries.
//!
//! Both solvers minimize `1/2 ||Y - H P||_F^2 + lambda ||B||_1` over
//! coefficients `B` with `H = W_l^H B W_r`, where `W_l`, `W_r` are
//! Parseval-normalized (possibly oversampled) DFT frames. With lifting 1 the
//! frames are unitary and `B = F_l H F_r^H` exactly.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::EstimatorReport;
use crate::channels::PilotSet;
use crate::linalg::{self, CMat, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseParams {
    pub lambda: f64,
    /// Gradient step; `None` selects `1 / lambda_max(P P^H)`.
    pub step: Option<f64>,
    pub max_iters: usize,
    /// Monotone FISTA instead of plain ISTA.
    pub accelerated: bool,
    /// Stops once `||B_k+1 - B_k||_F <= tolerance ||B_k+1||_F`; 0 disables.
    pub tolerance: f64,
}

impl Default for SparseParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            step: None,
            max_iters: 500,
            accelerated: false,
            tolerance: 0.0,
        }
    }
}

/// `x max(1 - t/|x|, 0)`.
pub fn soft_threshold(x: C64, t: f64) -> C64 {
    let m = x.norm();
    if m <= t {
        C64::new(0.0, 0.0)
    } else {
        x * ((m - t) / m)
    }
}

/// `(lift n) x n` matrix with entries `exp(-j 2 pi k m / (lift n))`.
pub fn oversampled_dft(n: usize, lift: usize) -> Result<CMat> {
    if n == 0 || lift == 0 {
        return Err(Error::invalid("DFT size and lifting factor must be at least 1"));
    }
    let len = n * lift;
    Ok(CMat::from_fn(len, n, |k, m| {
        // phase index reduced modulo len before the float conversion
        let idx = (k * m) % len;
        C64::from_polar(1.0, -2.0 * PI * idx as f64 / len as f64)
    }))
}

/// [`oversampled_dft`] scaled by `1/sqrt(lift n)`, so that `W^H W = I`.
pub fn parseval_dft(n: usize, lift: usize) -> Result<CMat> {
    let w = oversampled_dft(n, lift)?;
    let scale = 1.0 / ((n * lift) as f64).sqrt();
    Ok(w * C64::new(scale, 0.0))
}

fn l1(b: &CMat) -> f64 {
    b.iter().map(|x| x.norm()).sum()
}

struct Problem<'a> {
    wl: CMat,
    wl_h: CMat,
    /// `W_r P`.
    q: CMat,
    q_h: CMat,
    y: &'a CMat,
    lambda: f64,
}

impl Problem<'_> {
    fn residual(&self, b: &CMat) -> CMat {
        self.y - &self.wl_h * b * &self.q
    }

    fn objective(&self, b: &CMat, residual: &CMat) -> f64 {
        0.5 * linalg::frobenius_sq(residual) + self.lambda * l1(b)
    }

    /// One proximal-gradient step from `b` with residual `residual`.
    fn prox_step(&self, b: &CMat, residual: &CMat, step: f64) -> CMat {
        let grad = &self.wl * residual * &self.q_h;
        let t = self.lambda * step;
        let mut next = b + grad * C64::new(step, 0.0);
        for x in next.iter_mut() {
            *x = soft_threshold(*x, t);
        }
        next
    }
}

fn solve(pilots: &PilotSet, lift: usize, params: &SparseParams) -> Result<EstimatorReport> {
    if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
        return Err(Error::invalid("lambda must be finite and nonnegative"));
    }
    if params.max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let (rows, cols) = pilots.channel_shape();
    let p = pilots.pilots();
    let lipschitz = linalg::max_hermitian_eigenvalue(&(p * p.adjoint()));
    let bound = if lipschitz > 0.0 { 2.0 / lipschitz } else { f64::INFINITY };
    let step = match params.step {
        Some(s) if !(s > 0.0 && s.is_finite()) => {
            return Err(Error::invalid("step must be positive"));
        }
        Some(s) if s >= bound => return Err(Error::UnstableStep { step: s, bound }),
        Some(s) => s,
        None if lipschitz > 0.0 => 1.0 / lipschitz,
        None => 1.0,
    };

    let wl = parseval_dft(rows, lift)?;
    let wr = parseval_dft(cols, lift)?;
    let q = &wr * p;
    let problem = Problem {
        wl_h: wl.adjoint(),
        wl,
        q_h: q.adjoint(),
        q,
        y: pilots.received(),
        lambda: params.lambda,
    };

    let mut b = linalg::zeros(rows * lift, cols * lift);
    let mut r = problem.residual(&b);
    let mut f = problem.objective(&b, &r);
    let mut residual_trace = Vec::with_capacity(params.max_iters);
    let mut objective_trace = Vec::with_capacity(params.max_iters);
    // extrapolation point and momentum for the accelerated variant
    let mut y_pt = b.clone();
    let mut y_res = r.clone();
    let mut t_k = 1.0f64;
    let mut iterations = 0;

    for it in 0..params.max_iters {
        iterations += 1;
        let prev = b.clone();
        let mut change_ref = None;
        if params.accelerated {
            let z = problem.prox_step(&y_pt, &y_res, step);
            let rz = problem.residual(&z);
            let fz = problem.objective(&z, &rz);
            change_ref = Some(linalg::frobenius_sq(&(&z - &prev)).sqrt());
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
            if fz <= f {
                b = z.clone();
                r = rz;
                f = fz;
            }
            // y = b + (t_k / t_next)(z - b) + ((t_k - 1) / t_next)(b - prev)
            y_pt = &b + (&z - &b) * C64::new(t_k / t_next, 0.0) + (&b - &prev) * C64::new((t_k - 1.0) / t_next, 0.0);
            y_res = problem.residual(&y_pt);
            t_k = t_next;
        } else {
            b = problem.prox_step(&b, &r, step);
            r = problem.residual(&b);
            f = problem.objective(&b, &r);
        }
        if !f.is_finite() {
            return Err(Error::Diverged { level: 0, step: it });
        }
        residual_trace.push(linalg::frobenius_sq(&r).sqrt());
        objective_trace.push(f);
        if params.tolerance > 0.0 {
            let change = change_ref.unwrap_or_else(|| linalg::frobenius_sq(&(&b - &prev)).sqrt());
            if change <= params.tolerance * linalg::frobenius_sq(&b).sqrt() {
                break;
            }
        }
    }

    let estimate = &problem.wl_h * &b * &wr;
    Ok(EstimatorReport {
        estimate,
        iterations,
        residual_trace,
        objective_trace,
        score_evaluations: 0,
        likelihood_evaluations: iterations,
    })
}

/// l1 recovery in the unitary 2-D DFT (beamspace) domain.
pub fn lasso_beamspace(pilots: &PilotSet, params: &SparseParams) -> Result<EstimatorReport> {
    solve(pilots, 1, params)
}

/// l1 recovery in DFT frames oversampled by `lift` on both sides.
pub fn fsad(pilots: &PilotSet, lift: usize, params: &SparseParams) -> Result<EstimatorReport> {
    solve(pilots, lift, params)
}
