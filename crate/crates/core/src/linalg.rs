//! Dense complex kernels routed through the real `f64` GEMM.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(crate) type CMat = DMatrix<Complex64>;

fn split(a: &CMat) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> CMat {
    re.zip_map(im, Complex64::new)
}

/// `a * b`.
pub(crate) fn mul(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let mut re = &ar * &br;
    re.gemm(-1.0, &ai, &bi, 1.0);
    let mut im = &ar * &bi;
    im.gemm(1.0, &ai, &br, 1.0);
    join(&re, &im)
}

/// `a * b^H`.
pub(crate) fn mul_adj(a: &CMat, b: &CMat) -> CMat {
    mul(a, &b.adjoint())
}

/// `(a + a^H) / 2`.
pub(crate) fn herm_part(a: &CMat) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Real inner product `Re tr(a^H b)`.
pub(crate) fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub(crate) fn cvec_norm(v: &DVector<Complex64>) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(r: usize, c: usize, s: f64) -> CMat {
        CMat::from_fn(r, c, |i, j| Complex64::new((i as f64 * 0.7 + j as f64 * s).sin(), (i as f64 * s - j as f64).cos()))
    }

    #[test]
    fn products_match_generic() {
        let a = sample(7, 5, 0.3);
        let b = sample(5, 6, 1.1);
        assert!((mul(&a, &b) - &a * &b).norm() < 1e-12);
        let c = sample(6, 6, 0.9);
        let d = sample(4, 5, 0.2);
        assert!((mul_adj(&a, &d) - &a * d.adjoint()).norm() < 1e-12);
        assert!((herm_part(&c) - (&c + c.adjoint()) * Complex64::new(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn inner_product_is_real_trace() {
        let a = sample(4, 4, 0.4);
        let b = sample(4, 4, 1.7);
        assert!((re_inner(&a, &b) - (a.adjoint() * &b).trace().re).abs() < 1e-12);
    }
}
