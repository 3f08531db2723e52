//! Separable evaluation of 2D trigonometric polynomials
//! `Q(u, theta) = sum_{k, m} C[k, m] exp(j k u) exp(j k_theta(m) theta)`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{mul, CMat};

/// Rows of `exp(j k x)` for `k = -order..=order`.
pub(crate) fn fourier_rows(xs: &[f64], order: usize) -> CMat {
    let width = 2 * order + 1;
    DMatrix::from_fn(xs.len(), width, |i, k| Complex64::cis((k as f64 - order as f64) * xs[i]))
}

/// Values on the tensor grid `us x thetas`, shape `us.len() x thetas.len()`.
pub(crate) fn eval_grid(coeffs: &CMat, us: &[f64], thetas: &[f64]) -> CMat {
    let k_u = (coeffs.nrows() - 1) / 2;
    let i_off = (coeffs.ncols() - 1) / 2;
    let eu = fourier_rows(us, k_u);
    let et = fourier_rows(thetas, i_off).transpose();
    mul(&mul(&eu, coeffs), &et)
}

pub(crate) fn uniform(count: usize, span: f64) -> Vec<f64> {
    (0..count).map(|i| span * i as f64 / count as f64).collect()
}

/// Value plus first and second partial derivatives at one point.
pub(crate) struct Local {
    pub q: Complex64,
    pub du: Complex64,
    pub dt: Complex64,
    pub duu: Complex64,
    pub dut: Complex64,
    pub dtt: Complex64,
}

pub(crate) fn eval_local(coeffs: &CMat, u: f64, theta: f64) -> Local {
    let k_u = (coeffs.nrows() - 1) as f64 / 2.0;
    let i_off = (coeffs.ncols() - 1) as f64 / 2.0;
    let j = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut l = Local { q: zero, du: zero, dt: zero, duu: zero, dut: zero, dtt: zero };
    for m in 0..coeffs.ncols() {
        let b = m as f64 - i_off;
        let et = Complex64::cis(b * theta);
        for k in 0..coeffs.nrows() {
            let a = k as f64 - k_u;
            let term = coeffs[(k, m)] * Complex64::cis(a * u) * et;
            l.q += term;
            l.du += j * a * term;
            l.dt += j * b * term;
            l.duu -= a * a * term;
            l.dut -= a * b * term;
            l.dtt -= b * b * term;
        }
    }
    l
}
