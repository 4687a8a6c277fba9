//! Dense complex matrix helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Dense complex matrix. Column-major in memory; all public shapes are stated
/// in complex entries.
pub type CMat = DMatrix<C64>;

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn check_shape(context: &'static str, m: &CMat, expected: (usize, usize)) -> Result<()> {
    if m.shape() != expected {
        return Err(Error::ShapeMismatch {
            context,
            expected,
            found: m.shape(),
        });
    }
    Ok(())
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_hermitian_eigenvalue(a: &CMat) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `X A = B` for Hermitian positive-definite `A`.
///
/// Uses `A^H = A`, so `X^H = A^{-1} B^H`.
pub fn solve_right_hpd(a: &CMat, b: &CMat) -> Result<CMat> {
    let chol = a.clone().cholesky().ok_or(Error::Singular)?;
    let xh = chol.solve(&b.adjoint());
    if !is_finite(&xh) {
        return Err(Error::Singular);
    }
    Ok(xh.adjoint())
}

/// `(G^H G + reg I)^{-1} G^H Y`, falling back to LU when the normal matrix is
/// only semi-definite.
pub fn regularized_normal_solve(g: &CMat, y: &CMat, reg: f64) -> Result<CMat> {
    let gh = g.adjoint();
    let mut normal = &gh * g;
    for i in 0..normal.nrows() {
        normal[(i, i)] += C64::new(reg, 0.0);
    }
    let rhs = &gh * y;
    let x = match normal.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => normal.lu().solve(&rhs).ok_or(Error::Singular)?,
    };
    if !is_finite(&x) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// `a += s * b` elementwise.
pub(crate) fn axpy(a: &mut CMat, s: f64, b: &CMat) {
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += y * s;
    }
}
