//! Primal-dual interior-point method with Nesterov-Todd scaling for
//!
//! ```text
//! minimize    c^T x
//! subject to  G x + s = h,   s in SOC(2M + 1) x HPSD(N + 1)
//! ```
//!
//! where the SOC block encodes `|| y - B z || <= eta` and the PSD block is
//! `S(x) >= 0`. Search directions come from a Mehrotra predictor-corrector
//! step on the reduced system `H dx = r`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::schur::Layout;
use crate::linalg::{herm_part, mul, mul_adj, re_inner, CMat};
use crate::{Error, Result};

const STEP_FRACTION: f64 = 0.99;

pub(crate) struct ConeProblem {
    pub layout: Layout,
    /// `[[Re B, -Im B], [Im B, Re B]]`, acting on `(Re z, Im z)`.
    gz: DMatrix<f64>,
    h_soc: DVector<f64>,
    c: DVector<f64>,
}

pub(crate) struct Iterate {
    pub x: DVector<f64>,
    pub z_soc: DVector<f64>,
}

pub(crate) struct Outcome {
    pub iterate: Iterate,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub gap_history: Vec<f64>,
}

impl ConeProblem {
    pub fn new(n_u: usize, n_b: usize, sensing: &DMatrix<Complex64>, y: &DVector<Complex64>, eta: f64) -> Self {
        let layout = Layout::new(n_u, n_b);
        let (m, n) = (sensing.nrows(), sensing.ncols());
        let mut gz = DMatrix::zeros(2 * m, 2 * n);
        for r in 0..m {
            for k in 0..n {
                let b = sensing[(r, k)];
                gz[(r, k)] = b.re;
                gz[(r, n + k)] = -b.im;
                gz[(m + r, k)] = b.im;
                gz[(m + r, n + k)] = b.re;
            }
        }
        let mut h_soc = DVector::zeros(2 * m + 1);
        h_soc[0] = eta;
        for r in 0..m {
            h_soc[1 + r] = y[r].re;
            h_soc[1 + m + r] = y[r].im;
        }
        let mut c = DVector::zeros(layout.n_vars);
        c[0] = 0.5;
        c[layout.t()] = 0.5;
        ConeProblem { layout, gz, h_soc, c }
    }

    fn z_offset(&self) -> usize {
        self.layout.zr(0)
    }

    fn g_apply(&self, x: &DVector<f64>) -> (DVector<f64>, CMat) {
        let nz = self.gz.ncols();
        let xz = x.rows(self.z_offset(), nz);
        let mut soc = DVector::zeros(self.h_soc.len());
        soc.rows_mut(1, self.gz.nrows()).copy_from(&(&self.gz * xz));
        let psd = -self.layout.psd_map(x.as_slice());
        (soc, psd)
    }

    fn g_adjoint(&self, z_soc: &DVector<f64>, z_psd: &CMat) -> DVector<f64> {
        let mut out = DVector::from_vec(self.layout.psd_adjoint(z_psd));
        out.neg_mut();
        let part = self.gz.tr_mul(&z_soc.rows(1, self.gz.nrows()));
        let off = self.z_offset();
        for (i, v) in part.iter().enumerate() {
            out[off + i] += v;
        }
        out
    }

    fn schur(&self, wi2: &DMatrix<f64>, p: &CMat) -> DMatrix<f64> {
        let mut h = self.layout.schur_psd(p);
        let k = self.gz.nrows();
        let w = wi2.view((1, 1), (k, k)).into_owned();
        let block = self.gz.tr_mul(&(&w * &self.gz));
        let off = self.z_offset();
        let nz = self.gz.ncols();
        let mut view = h.view_mut((off, off), (nz, nz));
        view += block;
        h
    }

    pub fn solve(&self, max_iter: usize, eps_abs: f64, eps_rel: f64) -> Result<Outcome> {
        let ms = self.h_soc.len();
        let n1 = self.layout.n + 1;
        let degree = 1.0 + n1 as f64;
        let h_norm = self.h_soc.norm().max(1.0);
        let c_norm = self.c.norm().max(1.0);

        let ident_soc = DMatrix::identity(ms, ms);
        let h0 = self.schur(&ident_soc, &CMat::identity(n1, n1));
        let chol = factor(h0)?;
        let x = chol.solve(&self.g_adjoint(&self.h_soc, &CMat::zeros(n1, n1)));
        let (gs, gp) = self.g_apply(&x);
        let (mut s_soc, mut s_psd) = (&self.h_soc - gs, -gp);
        let w = -chol.solve(&self.c);
        let (mut z_soc, mut z_psd) = self.g_apply(&w);
        shift_interior(&mut s_soc, &mut s_psd);
        shift_interior(&mut z_soc, &mut z_psd);
        let mut x = x;

        let mut history = Vec::new();
        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for it in 0..=max_iter {
            let (gs, gp) = self.g_apply(&x);
            let rx = self.g_adjoint(&z_soc, &z_psd) + &self.c;
            let rz_soc = &s_soc + gs - &self.h_soc;
            let rz_psd = &s_psd + gp;
            let gap = s_soc.dot(&z_soc) + re_inner(&s_psd, &z_psd);
            let mu = gap / degree;
            let pobj = self.c.dot(&x);
            let pres = libm::sqrt(rz_soc.norm_squared() + rz_psd.norm_squared()) / h_norm;
            let dres = rx.norm() / c_norm;
            history.push(gap);
            last = (pres, dres, gap);
            if pres <= eps_abs && dres <= eps_abs && gap <= eps_abs + eps_rel * pobj.abs() {
                return Ok(self.outcome(x, z_soc, true, it, last, history));
            }
            if it == max_iter {
                break;
            }

            let soc = SocScaling::new(&s_soc, &z_soc)?;
            let psd = match PsdScaling::new(&s_psd, &z_psd) {
                Ok(p) => p,
                Err(_) if it > 0 => break,
                Err(e) => return Err(e),
            };
            let wi = soc.winv_matrix();
            let wi2 = &wi * &wi;
            let chol = factor(self.schur(&wi2, &psd.p))?;

            let lam_s = soc.w(&z_soc);
            let lam_sq = DMatrix::from_diagonal(&DVector::from_iterator(n1, psd.lam.iter().map(|l| Complex64::new(l * l, 0.0))));
            let kkt = |bx: &DVector<f64>, bzs: &DVector<f64>, bz: &CMat, bss: &DVector<f64>, bsp: &CMat| {
                let ts = soc_div(&lam_s, bss);
                let tp = CMat::from_fn(n1, n1, |i, j| bsp[(i, j)] * (2.0 / (psd.lam[i] + psd.lam[j])));
                let tp_un = psd.winv(&tp);
                let r = bx + self.g_adjoint(&(&wi2 * bzs - &wi * &ts), &(psd.congruence_p(bz) - &tp_un));
                let dx = chol.solve(&r);
                let (gs, gp) = self.g_apply(&dx);
                let dz_soc = &wi2 * (&gs - bzs) + &wi * &ts;
                let dz_psd = herm_part(&(psd.congruence_p(&(&gp - bz)) + tp_un));
                let ds_soc = bzs - gs;
                let ds_psd = herm_part(&(bz - gp));
                Direction { dx, dz_soc, dz_psd, ds_soc, ds_psd }
            };
            let step = |d: &Direction| {
                let a = soc_step(&lam_s, &soc.winv(&d.ds_soc)).min(soc_step(&lam_s, &soc.w(&d.dz_soc)));
                let b = psd_step(&psd.lam, &psd.winv_t(&d.ds_psd)).min(psd_step(&psd.lam, &psd.w(&d.dz_psd)));
                a.min(b)
            };

            let neg_rx = -&rx;
            let neg_rzs = -&rz_soc;
            let neg_rzp = -&rz_psd;
            let bss = -soc_prod(&lam_s, &lam_s);
            let bsp = -&lam_sq;
            let aff = kkt(&neg_rx, &neg_rzs, &neg_rzp, &bss, &bsp);
            let alpha_aff = step(&aff).min(1.0);
            let sigma = libm::pow(1.0 - alpha_aff, 3.0);

            let dz_a = soc.w(&aff.dz_soc);
            let ds_a = soc.winv(&aff.ds_soc);
            let dzp_a = psd.w(&aff.dz_psd);
            let dsp_a = psd.winv_t(&aff.ds_psd);
            let mut bss = -soc_prod(&lam_s, &lam_s) - soc_prod(&ds_a, &dz_a);
            bss[0] += sigma * mu;
            let mut bsp = -&lam_sq - herm_part(&mul(&dsp_a, &dzp_a));
            for i in 0..n1 {
                bsp[(i, i)] += Complex64::new(sigma * mu, 0.0);
            }
            let d = kkt(&neg_rx, &neg_rzs, &neg_rzp, &bss, &bsp);
            let alpha = (STEP_FRACTION * step(&d)).min(1.0);
            if !(alpha > 0.0) || !alpha.is_finite() {
                break;
            }
            x += &d.dx * alpha;
            z_soc += &d.dz_soc * alpha;
            s_soc += &d.ds_soc * alpha;
            z_psd = herm_part(&(&z_psd + &d.dz_psd * Complex64::new(alpha, 0.0)));
            s_psd = herm_part(&(&s_psd + &d.ds_psd * Complex64::new(alpha, 0.0)));
        }
        Ok(self.outcome(x, z_soc, false, history.len() - 1, last, history))
    }

    fn outcome(
        &self,
        x: DVector<f64>,
        z_soc: DVector<f64>,
        converged: bool,
        iterations: usize,
        last: (f64, f64, f64),
        gap_history: Vec<f64>,
    ) -> Outcome {
        Outcome {
            iterate: Iterate { x, z_soc },
            converged,
            iterations,
            primal_residual: last.0,
            dual_residual: last.1,
            gap: last.2,
            gap_history,
        }
    }
}

struct Direction {
    dx: DVector<f64>,
    dz_soc: DVector<f64>,
    dz_psd: CMat,
    ds_soc: DVector<f64>,
    ds_psd: CMat,
}

fn factor(h: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = h.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut reg = 0.0;
    for _ in 0..6 {
        let mut m = h.clone();
        if reg > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += reg;
            }
        }
        if let Some(c) = m.cholesky() {
            return Ok(c);
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    Err(Error::SolverFailure("reduced KKT matrix is not positive definite".into()))
}

fn jdot(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    u[0] * v[0] - u.rows(1, u.len() - 1).dot(&v.rows(1, v.len() - 1))
}

fn jmul(u: &DVector<f64>) -> DVector<f64> {
    let mut v = -u;
    v[0] = u[0];
    v
}

fn soc_prod(u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = u * v[0] + v * u[0];
    out[0] = u.dot(v);
    out
}

/// Solves `l o x = v` in the Jordan algebra of the cone.
fn soc_div(l: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let det = jdot(l, l);
    let x0 = jdot(l, v) / det;
    let mut out = (v - l * x0) / l[0];
    out[0] = x0;
    out
}

/// Largest `a` with `l + a d` in the cone.
fn soc_step(l: &DVector<f64>, d: &DVector<f64>) -> f64 {
    let nl = libm::sqrt(jdot(l, l));
    let lb = l / nl;
    let a = jdot(&lb, d);
    let k = lb.len() - 1;
    let coef = (a + d[0]) / (lb[0] + 1.0);
    let r1 = d.rows(1, k) - lb.rows(1, k) * coef;
    let t = (r1.norm() - a) / nl;
    if t > 0.0 {
        1.0 / t
    } else {
        f64::INFINITY
    }
}

fn psd_step(lam: &[f64], d: &CMat) -> f64 {
    let n = lam.len();
    let m = CMat::from_fn(n, n, |i, j| d[(i, j)] / libm::sqrt(lam[i] * lam[j]));
    let ev = herm_part(&m).symmetric_eigenvalues();
    let lo = ev.min();
    if lo < 0.0 {
        -1.0 / lo
    } else {
        f64::INFINITY
    }
}

fn shift_interior(v: &mut DVector<f64>, m: &mut CMat) {
    let k = v.len() - 1;
    let soc_gap = v.rows(1, k).norm() - v[0];
    let psd_gap = -herm_part(m).symmetric_eigenvalues().min();
    let a = soc_gap.max(psd_gap);
    if a >= -1e-8 {
        v[0] += 1.0 + a;
        for i in 0..m.nrows() {
            m[(i, i)] += Complex64::new(1.0 + a, 0.0);
        }
    }
}

struct SocScaling {
    beta: f64,
    v: DVector<f64>,
}

impl SocScaling {
    fn new(s: &DVector<f64>, z: &DVector<f64>) -> Result<Self> {
        let (ss, zz) = (jdot(s, s), jdot(z, z));
        if !(ss > 0.0 && zz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
            return Err(Error::SolverFailure("iterate left the second-order cone".into()));
        }
        let sb = s / libm::sqrt(ss);
        let zb = z / libm::sqrt(zz);
        let gamma = libm::sqrt((1.0 + sb.dot(&zb)) / 2.0);
        let wb = (&sb + jmul(&zb)) / (2.0 * gamma);
        let mut v = wb.clone();
        v[0] += 1.0;
        v /= libm::sqrt(2.0 * (wb[0] + 1.0));
        Ok(SocScaling { beta: libm::sqrt(libm::sqrt(ss / zz)), v })
    }

    fn w(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.v * (2.0 * self.v.dot(x)) - jmul(x)) * self.beta
    }

    fn winv(&self, x: &DVector<f64>) -> DVector<f64> {
        let jx = jmul(x);
        (jmul(&self.v) * (2.0 * self.v.dot(&jx)) - jx) / self.beta
    }

    fn winv_matrix(&self) -> DMatrix<f64> {
        let jv = jmul(&self.v);
        let mut m = &jv * jv.transpose() * 2.0;
        m[(0, 0)] -= 1.0;
        for i in 1..m.nrows() {
            m[(i, i)] += 1.0;
        }
        m / self.beta
    }
}

/// `W(Z) = R^H Z R`, `W^{-T}(S) = R^{-1} S R^{-H}`, both equal to `diag(lam)`
/// at the current pair.
struct PsdScaling {
    r: CMat,
    rinv: CMat,
    lam: Vec<f64>,
    p: CMat,
}

impl PsdScaling {
    fn new(s: &CMat, z: &CMat) -> Result<Self> {
        let fail = || Error::SolverFailure("iterate left the semidefinite cone".into());
        let ls = herm_part(s).cholesky().ok_or_else(fail)?.l();
        let lz = herm_part(z).cholesky().ok_or_else(fail)?.l();
        let svd = mul(&lz.adjoint(), &ls).svd(true, true);
        let u = svd.u.ok_or_else(fail)?;
        let v = svd.v_t.ok_or_else(fail)?.adjoint();
        let lam: Vec<f64> = svd.singular_values.iter().copied().collect();
        if lam.iter().any(|&l| !(l > 0.0)) {
            return Err(fail());
        }
        let n = lam.len();
        let isq: Vec<f64> = lam.iter().map(|l| 1.0 / libm::sqrt(*l)).collect();
        let mut r = mul(&ls, &v);
        let mut rinv = mul(&u.adjoint(), &lz.adjoint());
        for j in 0..n {
            for i in 0..n {
                r[(i, j)] *= isq[j];
                rinv[(j, i)] *= isq[j];
            }
        }
        let p = herm_part(&mul(&rinv.adjoint(), &rinv));
        Ok(PsdScaling { r, rinv, lam, p })
    }

    fn w(&self, x: &CMat) -> CMat {
        herm_part(&mul(&mul(&self.r.adjoint(), x), &self.r))
    }

    fn winv_t(&self, x: &CMat) -> CMat {
        herm_part(&mul_adj(&mul(&self.rinv, x), &self.rinv))
    }

    fn winv(&self, x: &CMat) -> CMat {
        mul(&mul(&self.rinv.adjoint(), x), &self.rinv)
    }

    fn congruence_p(&self, x: &CMat) -> CMat {
        mul(&mul(&self.p, x), &self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soc_helpers_consistent() {
        let l = DVector::from_vec(alloc::vec![3.0, 1.0, -0.5, 0.7]);
        let v = DVector::from_vec(alloc::vec![0.3, -0.2, 0.9, 0.1]);
        let x = soc_div(&l, &v);
        assert!((soc_prod(&l, &x) - &v).norm() < 1e-14);
        let d = DVector::from_vec(alloc::vec![-1.0, 0.5, 0.5, 0.0]);
        let a = soc_step(&l, &d);
        let edge = &l + &d * a;
        assert!((edge[0] - edge.rows(1, 3).norm()).abs() < 1e-12);
    }

    #[test]
    fn soc_scaling_maps_pair_to_same_point() {
        let s = DVector::from_vec(alloc::vec![2.0, 0.3, -0.4]);
        let z = DVector::from_vec(alloc::vec![1.5, -0.6, 0.2]);
        let sc = SocScaling::new(&s, &z).unwrap();
        assert!((sc.w(&z) - sc.winv(&s)).norm() < 1e-13);
        let wi = sc.winv_matrix();
        assert!((&wi * &s - sc.winv(&s)).norm() < 1e-13);
        assert!((sc.w(&sc.winv(&s)) - &s).norm() < 1e-13);
    }

    #[test]
    fn psd_scaling_maps_pair_to_diagonal() {
        let a = CMat::from_fn(4, 4, |i, j| Complex64::new((i + 2 * j) as f64 * 0.3, (i as f64 - j as f64) * 0.2));
        let s = mul_adj(&a, &a) + CMat::identity(4, 4);
        let z = CMat::from_fn(4, 4, |i, j| if i == j { Complex64::new(1.0 + i as f64, 0.0) } else { Complex64::new(0.1, 0.05 * (i as f64 - j as f64)) });
        let sc = PsdScaling::new(&s, &z).unwrap();
        let lam = CMat::from_diagonal(&DVector::from_iterator(4, sc.lam.iter().map(|&l| Complex64::new(l, 0.0))));
        assert!((sc.w(&z) - &lam).norm() < 1e-12);
        assert!((sc.winv_t(&s) - &lam).norm() < 1e-12);
    }
}
