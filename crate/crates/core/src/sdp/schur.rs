//! Real variable layout of the lifted SDP and the PSD part of its Schur
//! complement.
//!
//! Variables are `[V(0,0), (Re V(h), Im V(h)) per half lag, Re z, Im z, t]`,
//! and `S(x) = [[T(V), z], [z^H, t]]`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::fft::Fft;
use super::toeplitz::{lag_sums, t2d, LagArray};
use crate::linalg::CMat;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub n_u: usize,
    pub n_b: usize,
    pub n: usize,
    pub half: Vec<(i64, i64)>,
    pub n_vars: usize,
}

impl Layout {
    pub fn new(n_u: usize, n_b: usize) -> Self {
        let (su, sb) = (n_u as i64 - 1, n_b as i64 - 1);
        let mut half = Vec::new();
        for lb in 1..=sb {
            for lu in -su..=su {
                half.push((lu, lb));
            }
        }
        for lu in 1..=su {
            half.push((lu, 0));
        }
        let n = n_u * n_b;
        let n_vars = 1 + 2 * half.len() + 2 * n + 1;
        Layout { n_u, n_b, n, half, n_vars }
    }

    pub fn n_lag_vars(&self) -> usize {
        1 + 2 * self.half.len()
    }

    pub fn zr(&self, i: usize) -> usize {
        self.n_lag_vars() + i
    }

    pub fn zi(&self, i: usize) -> usize {
        self.n_lag_vars() + self.n + i
    }

    pub fn t(&self) -> usize {
        self.n_vars - 1
    }

    pub fn lags(&self, x: &[f64]) -> LagArray {
        let mut v = LagArray::zeros(self.n_u, self.n_b);
        v.set(0, 0, Complex64::new(x[0], 0.0));
        for (k, &(a, b)) in self.half.iter().enumerate() {
            let val = Complex64::new(x[1 + 2 * k], x[2 + 2 * k]);
            v.set(a, b, val);
            v.set(-a, -b, val.conj());
        }
        v
    }

    pub fn z(&self, x: &[f64]) -> DVector<Complex64> {
        DVector::from_fn(self.n, |i, _| Complex64::new(x[self.zr(i)], x[self.zi(i)]))
    }

    /// `S(x)`, size `N + 1`.
    pub fn psd_map(&self, x: &[f64]) -> CMat {
        let n = self.n;
        let mut s = CMat::zeros(n + 1, n + 1);
        s.view_mut((0, 0), (n, n)).copy_from(&t2d(&self.lags(x)));
        for i in 0..n {
            let zi = Complex64::new(x[self.zr(i)], x[self.zi(i)]);
            s[(i, n)] = zi;
            s[(n, i)] = zi.conj();
        }
        s[(n, n)] = Complex64::new(x[self.t()], 0.0);
        s
    }

    /// Adjoint of `psd_map` under `Re tr(A^H B)`.
    pub fn psd_adjoint(&self, y: &CMat) -> Vec<f64> {
        let n = self.n;
        let l = lag_sums(y, self.n_u, self.n_b);
        let mut out = vec![0.0; self.n_vars];
        out[0] = l.center().re;
        for (k, &(a, b)) in self.half.iter().enumerate() {
            let (p, m) = (l.get(a, b), l.get(-a, -b));
            out[1 + 2 * k] = p.re + m.re;
            out[2 + 2 * k] = p.im - m.im;
        }
        for i in 0..n {
            out[self.zr(i)] = y[(i, n)].re + y[(n, i)].re;
            out[self.zi(i)] = y[(i, n)].im - y[(n, i)].im;
        }
        out[self.t()] = y[(n, n)].re;
        out
    }

    /// `psd_adjoint(a b^H + b a^H)` without forming the outer products.
    fn rank2_adjoint(&self, a: &[Complex64], b: &[Complex64]) -> Vec<f64> {
        let (n_u, n_b, n) = (self.n_u, self.n_b, self.n);
        let (wu, wb) = (2 * n_u - 1, 2 * n_b - 1);
        let mut acc = vec![ZERO; wu * wb];
        for c in 0..n {
            let bc = b[c].conj();
            if bc == ZERO {
                continue;
            }
            let (ju, jb) = (c % n_u, c / n_u);
            for r in 0..n {
                let (iu, ib) = (r % n_u, r / n_u);
                acc[(ib + n_b - 1 - jb) * wu + iu + n_u - 1 - ju] += a[r] * bc;
            }
        }
        let get = |lu: i64, lb: i64| {
            let idx = |u: i64, v: i64| ((v + n_b as i64 - 1) as usize) * wu + (u + n_u as i64 - 1) as usize;
            acc[idx(lu, lb)] + acc[idx(-lu, -lb)].conj()
        };
        let mut out = vec![0.0; self.n_vars];
        out[0] = get(0, 0).re;
        for (k, &(lu, lb)) in self.half.iter().enumerate() {
            let (p, m) = (get(lu, lb), get(-lu, -lb));
            out[1 + 2 * k] = p.re + m.re;
            out[2 + 2 * k] = p.im - m.im;
        }
        let (an, bn) = (a[n].conj(), b[n].conj());
        for i in 0..n {
            let yin = a[i] * bn + b[i] * an;
            out[self.zr(i)] = 2.0 * yin.re;
            out[self.zi(i)] = 2.0 * yin.im;
        }
        out[self.t()] = 2.0 * (a[n] * bn).re;
        out
    }

    /// `H[i, j] = Re tr(F_i P F_j P)` for the basis `F_i = S(e_i)`.
    pub fn schur_psd(&self, p: &CMat) -> DMatrix<f64> {
        let nl = self.n_lag_vars();
        let mut h = DMatrix::zeros(self.n_vars, self.n_vars);
        self.lag_block(p, &mut h);

        let n = self.n;
        let col = |k: usize| -> Vec<Complex64> { p.column(k).iter().copied().collect() };
        let pn = col(n);
        for i in 0..n {
            let pi = col(i);
            let re = self.rank2_adjoint(&pi, &pn);
            let jpi: Vec<Complex64> = pi.iter().map(|v| v * Complex64::i()).collect();
            let im = self.rank2_adjoint(&jpi, &pn);
            for (j, (&r, &m)) in re.iter().zip(im.iter()).enumerate() {
                h[(j, self.zr(i))] = r;
                h[(j, self.zi(i))] = m;
            }
        }
        let tcol = self.rank2_adjoint(&pn, &pn);
        for (j, &v) in tcol.iter().enumerate() {
            h[(j, self.t())] = 0.5 * v;
        }
        for c in nl..self.n_vars {
            for r in 0..nl {
                h[(c, r)] = h[(r, c)];
            }
        }
        for c in nl..self.n_vars {
            for r in c + 1..self.n_vars {
                let v = 0.5 * (h[(r, c)] + h[(c, r)]);
                h[(r, c)] = v;
                h[(c, r)] = v;
            }
        }
        h
    }

    /// Lag-lag block from `K(h, h') = tr(E_h P E_h' P)`, evaluated as 2D
    /// correlations of the `N_b x N_b` slices of `P` on an FFT grid.
    fn lag_block(&self, p: &CMat, h: &mut DMatrix<f64>) {
        let (n_u, n_b) = (self.n_u, self.n_b);
        let l = (2 * n_b - 1).next_power_of_two();
        let fft = Fft::new(l);
        let ll = l * l;

        let mut spec = vec![ZERO; n_u * n_u * ll];
        for al in 0..n_u {
            for be in 0..n_u {
                let blk = &mut spec[(al * n_u + be) * ll..(al * n_u + be + 1) * ll];
                for x in 0..n_b {
                    for y in 0..n_b {
                        blk[x * l + y] = p[(al + x * n_u, be + y * n_u)];
                    }
                }
                fft.run_2d(blk, false);
            }
        }
        let neg = |k: usize| (l - k) % l;

        let wu = 2 * n_u - 1;
        let mut kern = vec![ZERO; wu * wu * ll];
        let mut buf = vec![ZERO; ll];
        for hu in -(n_u as i64 - 1)..n_u as i64 {
            for hpu in -(n_u as i64 - 1)..n_u as i64 {
                buf.iter_mut().for_each(|v| *v = ZERO);
                for cu in 0..n_u as i64 {
                    let a2 = cu + hu;
                    if a2 < 0 || a2 >= n_u as i64 {
                        continue;
                    }
                    for cpu in 0..n_u as i64 {
                        let b2 = cpu + hpu;
                        if b2 < 0 || b2 >= n_u as i64 {
                            continue;
                        }
                        let f = &spec[(cu as usize * n_u + b2 as usize) * ll..][..ll];
                        let g = &spec[(cpu as usize * n_u + a2 as usize) * ll..][..ll];
                        for k1 in 0..l {
                            let (nk1, row) = (neg(k1) * l, k1 * l);
                            for k2 in 0..l {
                                buf[row + k2] += f[nk1 + neg(k2)] * g[k2 * l + k1];
                            }
                        }
                    }
                }
                fft.run_2d(&mut buf, true);
                let slot = ((hu + n_u as i64 - 1) as usize * wu + (hpu + n_u as i64 - 1) as usize) * ll;
                kern[slot..slot + ll].copy_from_slice(&buf);
            }
        }
        let scale = 1.0 / ll as f64;
        let kv = |a: (i64, i64), b: (i64, i64)| -> Complex64 {
            let slot = ((a.0 + n_u as i64 - 1) as usize * wu + (b.0 + n_u as i64 - 1) as usize) * ll;
            let s1 = a.1.rem_euclid(l as i64) as usize;
            let s2 = (-b.1).rem_euclid(l as i64) as usize;
            kern[slot + s1 * l + s2] * scale
        };

        // each lag variable as a short list of (weight, lag)
        let j = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let mut terms: Vec<[(Complex64, (i64, i64)); 2]> = Vec::with_capacity(self.n_lag_vars());
        terms.push([(one, (0, 0)), (ZERO, (0, 0))]);
        for &(a, b) in &self.half {
            terms.push([(one, (a, b)), (one, (-a, -b))]);
            terms.push([(j, (a, b)), (-j, (-a, -b))]);
        }
        let nl = terms.len();
        for r in 0..nl {
            for c in r..nl {
                let mut acc = ZERO;
                for &(wr, hr) in &terms[r] {
                    if wr == ZERO {
                        continue;
                    }
                    for &(wc, hc) in &terms[c] {
                        if wc == ZERO {
                            continue;
                        }
                        acc += wr * wc * kv(hr, hc);
                    }
                }
                h[(r, c)] = acc.re;
                h[(c, r)] = acc.re;
            }
        }
    }

    /// Column-by-column reference for `schur_psd`.
    #[cfg(test)]
    pub fn schur_psd_dense(&self, p: &CMat) -> DMatrix<f64> {
        use crate::linalg::mul;
        let mut h = DMatrix::zeros(self.n_vars, self.n_vars);
        for i in 0..self.n_vars {
            let mut e = vec![0.0; self.n_vars];
            e[i] = 1.0;
            let f = self.psd_map(&e);
            let col = self.psd_adjoint(&mul(&mul(p, &f), p));
            for (r, v) in col.into_iter().enumerate() {
                h[(r, i)] = v;
            }
        }
        h
    }
}
