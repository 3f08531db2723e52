//! Two-level Toeplitz lift and its adjoint.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Lag array `V(a, b)` for `|a| < N_u`, `|b| < N_b`, stored with the zero lag
/// at `(N_u - 1, N_b - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagArray {
    n_u: usize,
    n_b: usize,
    data: DMatrix<Complex64>,
}

impl LagArray {
    pub fn zeros(n_u: usize, n_b: usize) -> Self {
        LagArray { n_u, n_b, data: DMatrix::zeros(2 * n_u - 1, 2 * n_b - 1) }
    }

    pub fn from_data(n_u: usize, n_b: usize, data: DMatrix<Complex64>) -> Result<Self> {
        if n_u == 0 || n_b == 0 {
            return Err(Error::InvalidArgument("lag array needs positive dimensions".into()));
        }
        if data.nrows() != 2 * n_u - 1 {
            return Err(Error::DimensionMismatch { what: "lag rows", expected: 2 * n_u - 1, found: data.nrows() });
        }
        if data.ncols() != 2 * n_b - 1 {
            return Err(Error::DimensionMismatch { what: "lag columns", expected: 2 * n_b - 1, found: data.ncols() });
        }
        Ok(LagArray { n_u, n_b, data })
    }

    /// Builds a conjugate-symmetric array from values on the lags with
    /// `b > 0`, or `b == 0, a >= 0`.
    pub fn hermitian(n_u: usize, n_b: usize, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let mut v = LagArray::zeros(n_u, n_b);
        let (su, sb) = (n_u as i64 - 1, n_b as i64 - 1);
        for b in 0..=sb {
            for a in -su..=su {
                if b == 0 && a < 0 {
                    continue;
                }
                let mut val = f(a, b);
                if a == 0 && b == 0 {
                    val = Complex64::new(val.re, 0.0);
                }
                v.set(a, b, val);
                v.set(-a, -b, val.conj());
            }
        }
        v
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn get(&self, a: i64, b: i64) -> Complex64 {
        self.data[((a + self.n_u as i64 - 1) as usize, (b + self.n_b as i64 - 1) as usize)]
    }

    pub fn set(&mut self, a: i64, b: i64, v: Complex64) {
        self.data[((a + self.n_u as i64 - 1) as usize, (b + self.n_b as i64 - 1) as usize)] = v;
    }

    pub fn center(&self) -> Complex64 {
        self.get(0, 0)
    }

    /// Largest `|V(-a, -b) - conj V(a, b)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let (su, sb) = (self.n_u as i64 - 1, self.n_b as i64 - 1);
        let mut worst = 0.0f64;
        for a in -su..=su {
            for b in -sb..=sb {
                worst = worst.max((self.get(-a, -b) - self.get(a, b).conj()).norm());
            }
        }
        worst
    }

    pub fn scale(&mut self, s: f64) {
        self.data *= Complex64::new(s, 0.0);
    }

    /// `sum conj(V) W` over all lags.
    pub fn inner(&self, other: &LagArray) -> Complex64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

/// `T[r, c] = V(i_u - j_u, i_b - j_b)` with `r = i_b N_u + i_u`.
pub fn t2d(v: &LagArray) -> DMatrix<Complex64> {
    let (n_u, n_b) = (v.n_u, v.n_b);
    let n = n_u * n_b;
    DMatrix::from_fn(n, n, |r, c| {
        let (iu, ib) = ((r % n_u) as i64, (r / n_u) as i64);
        let (ju, jb) = ((c % n_u) as i64, (c / n_u) as i64);
        v.get(iu - ju, ib - jb)
    })
}

/// Each lag bin sums the matching generalized diagonal of `w`.
pub fn t2d_adjoint(w: &DMatrix<Complex64>, n_u: usize, n_b: usize) -> Result<LagArray> {
    let n = n_u * n_b;
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch { what: "Toeplitz operand", expected: n, found: w.nrows().max(w.ncols()) });
    }
    Ok(lag_sums(w, n_u, n_b))
}

/// Lag sums of the leading `N_u N_b` block of `w`.
pub(crate) fn lag_sums(w: &DMatrix<Complex64>, n_u: usize, n_b: usize) -> LagArray {
    let mut out = LagArray::zeros(n_u, n_b);
    let n = n_u * n_b;
    let (ou, ob) = (n_u - 1, n_b - 1);
    for c in 0..n {
        let (ju, jb) = (c % n_u, c / n_u);
        for r in 0..n {
            let (iu, ib) = (r % n_u, r / n_u);
            out.data[(iu + ou - ju, ib + ob - jb)] += w[(r, c)];
        }
    }
    out
}

/// `V(0,0) / 2 + t / 2`, equal to `tr(T(V)) / (2 N_u N_b) + t / 2`.
pub fn objective(v: &LagArray, t: f64) -> f64 {
    0.5 * v.center().re + 0.5 * t
}
