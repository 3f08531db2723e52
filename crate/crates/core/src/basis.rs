//! Inverse-range coordinate, panelized Fourier fits of the curvature
//! coefficients, and the per-antenna lifting matrices `Phi_n`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{check_angle, ArrayConfig};
use crate::harmonics::{curvature_coeff, j_pow, HarmonicExpansion};
use crate::{Error, Result};

/// Sample nodes per panel.
pub const PANEL_NODES: usize = 64;
/// Overlap on each side of a panel, as a fraction of the panel width.
pub const PANEL_OVERLAP: f64 = 0.25;
/// Uniform `u` grid used for blending, projection and the fit-error report.
pub const PROJECTION_GRID: usize = 1024;

/// Affine map of inverse range `x = 1/r` onto `u` in `[0, 2 pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseRangeMap {
    pub x_min: f64,
    pub x_max: f64,
    r_min: f64,
    r_max: f64,
}

impl InverseRangeMap {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        Ok(InverseRangeMap { x_min: 1.0 / r_max, x_max: 1.0 / r_min, r_min, r_max })
    }

    pub fn from_config(cfg: &ArrayConfig) -> Result<Self> {
        Self::new(cfg.r_min, cfg.r_max)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn u_of_r(&self, r: f64) -> Result<f64> {
        if !(r >= self.r_min && r <= self.r_max) {
            return Err(Error::RangeOutOfInterval { r, min: self.r_min, max: self.r_max });
        }
        Ok(self.u_of_x(1.0 / r))
    }

    pub fn r_of_u(&self, u: f64) -> Result<f64> {
        if !(0.0..=TAU).contains(&u) {
            return Err(Error::InverseRangeOutOfDomain(u));
        }
        if u == 0.0 {
            return Ok(self.r_max);
        }
        if u == TAU {
            return Ok(self.r_min);
        }
        Ok(1.0 / self.x_of_u(u))
    }

    pub fn u_of_x(&self, x: f64) -> f64 {
        TAU * (x - self.x_min) / (self.x_max - self.x_min)
    }

    pub fn x_of_u(&self, u: f64) -> f64 {
        self.x_min + u / TAU * (self.x_max - self.x_min)
    }
}

/// Extended `[lo, hi]` interval in `x` covered by panel `p`.
pub fn panel_interval(cfg: &ArrayConfig, p: usize) -> (f64, f64) {
    let (x_min, x_max) = (1.0 / cfg.r_max, 1.0 / cfg.r_min);
    let w = (x_max - x_min) / cfg.n_panels as f64;
    let ov = PANEL_OVERLAP * w;
    let lo = x_min + p as f64 * w - ov;
    let hi = x_min + (p + 1) as f64 * w + ov;
    (lo.max(x_min), hi.min(x_max))
}

/// Raised-cosine blend window of panel `p`; the windows sum to one.
pub fn blend_window(cfg: &ArrayConfig, p: usize, x: f64) -> f64 {
    let (x_min, x_max) = (1.0 / cfg.r_max, 1.0 / cfg.r_min);
    let w = (x_max - x_min) / cfg.n_panels as f64;
    let ov = PANEL_OVERLAP * w;
    let (core_lo, core_hi) = (x_min + p as f64 * w, x_min + (p + 1) as f64 * w);
    let ramp = |edge: f64| ((x - (edge - ov)) / (2.0 * ov)).clamp(0.0, 1.0);
    let mut f = 1.0;
    if p > 0 {
        f *= 0.5 - 0.5 * libm::cos(PI * ramp(core_lo));
    }
    if p + 1 < cfg.n_panels {
        f *= 0.5 + 0.5 * libm::cos(PI * ramp(core_hi));
    }
    f
}

/// Weighted ridge fit of `F_{n,q}` on one panel.
#[derive(Debug, Clone)]
pub struct PanelFit {
    pub panel: usize,
    pub nodes_x: Vec<f64>,
    pub nodes_u: Vec<f64>,
    pub weights: Vec<f64>,
    /// `a[k]` for `k = -K_loc..=K_loc`.
    pub coeffs: Vec<Complex64>,
    pub blend: Vec<f64>,
}

impl PanelFit {
    pub fn eval(&self, u: f64) -> Complex64 {
        let k_loc = (self.coeffs.len() / 2) as f64;
        self.coeffs.iter().enumerate().map(|(i, a)| a * Complex64::cis((i as f64 - k_loc) * u)).sum()
    }
}

fn check_nq(cfg: &ArrayConfig, n: usize, q: i64) -> Result<()> {
    if n >= cfg.n_antennas {
        return Err(Error::IndexOutOfRange { what: "antenna", index: n as i64, limit: cfg.n_antennas as i64 });
    }
    if q.unsigned_abs() as usize > cfg.i2 {
        return Err(Error::IndexOutOfRange { what: "curvature order", index: q, limit: cfg.i2 as i64 });
    }
    Ok(())
}

pub fn fit_panel(cfg: &ArrayConfig, n: usize, q: i64, p: usize) -> Result<PanelFit> {
    cfg.validate()?;
    check_nq(cfg, n, q)?;
    if p >= cfg.n_panels {
        return Err(Error::IndexOutOfRange { what: "panel", index: p as i64, limit: cfg.n_panels as i64 });
    }
    let map = InverseRangeMap::from_config(cfg)?;
    let (lo, hi) = panel_interval(cfg, p);
    let (u_lo, u_hi) = (map.u_of_x(lo), map.u_of_x(hi));
    let nodes_u: Vec<f64> = (0..PANEL_NODES)
        .map(|i| u_lo + (u_hi - u_lo) * i as f64 / (PANEL_NODES - 1) as f64)
        .collect();
    let nodes_x: Vec<f64> = nodes_u.iter().map(|&u| map.x_of_u(u)).collect();
    let raw: Vec<f64> = nodes_x.iter().map(|x| 1.0 / (x * x)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

    let alpha = cfg.alpha(n);
    let target: Vec<Complex64> = nodes_x.iter().map(|&x| curvature_coeff(alpha, q, x)).collect();
    let coeffs = ridge_fit(&nodes_u, &weights, &target, cfg.k_loc, cfg.ridge_mu)?;
    let blend = nodes_x.iter().map(|&x| blend_window(cfg, p, x)).collect();
    Ok(PanelFit { panel: p, nodes_x, nodes_u, weights, coeffs, blend })
}

/// Minimizes `sum w_i |f_i - sum_k a_k e^{jk u_i}|^2 + mu |a|^2` by QR.
fn ridge_fit(us: &[f64], w: &[f64], f: &[Complex64], order: usize, mu: f64) -> Result<Vec<Complex64>> {
    let width = 2 * order + 1;
    let rows = us.len() + width;
    let mut a = DMatrix::<Complex64>::zeros(rows, width);
    let mut b = DVector::<Complex64>::zeros(rows);
    for (i, (&u, &wi)) in us.iter().zip(w).enumerate() {
        let s = libm::sqrt(wi);
        for k in 0..width {
            a[(i, k)] = Complex64::cis((k as f64 - order as f64) * u) * s;
        }
        b[i] = f[i] * s;
    }
    let sm = libm::sqrt(mu);
    for k in 0..width {
        a[(us.len() + k, k)] = Complex64::new(sm, 0.0);
    }
    let qr = a.qr();
    let r = qr.r();
    let diag_max = (0..width).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let diag_min = (0..width).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if !(diag_min > 1e-14 * diag_max) {
        return Err(Error::RankDeficient { cond: diag_max / diag_min, support: Vec::new() });
    }
    let qtb = qr.q().adjoint() * b;
    let sol = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::SolverFailure("singular panel system".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Fitted inverse-range coefficients and lifting matrices for every antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedBasis {
    n_antennas: usize,
    k_u: usize,
    i2: usize,
    i_off: usize,
    /// `a_{n,q}[k]`, laid out `(n, q + I2, k + K_u)` row-major.
    coeffs: Vec<Complex64>,
    phi: Vec<DMatrix<Complex64>>,
    /// Max relative fit error per `(n, q)`.
    fit_errors: Vec<f64>,
}

impl LiftedBasis {
    /// Reassembles a basis from stored parts, checking every shape.
    pub fn from_parts(
        cfg: &ArrayConfig,
        coeffs: Vec<Complex64>,
        phi: Vec<DMatrix<Complex64>>,
        fit_errors: Vec<f64>,
    ) -> Result<Self> {
        let nq = 2 * cfg.i2 + 1;
        let want = cfg.n_antennas * nq * cfg.n_u();
        if coeffs.len() != want {
            return Err(Error::DimensionMismatch { what: "coefficient tensor", expected: want, found: coeffs.len() });
        }
        if phi.len() != cfg.n_antennas {
            return Err(Error::DimensionMismatch { what: "lifting matrices", expected: cfg.n_antennas, found: phi.len() });
        }
        for m in &phi {
            if m.nrows() != cfg.n_u() || m.ncols() != cfg.n_b() {
                return Err(Error::DimensionMismatch { what: "lifting matrix", expected: cfg.lifted_len(), found: m.len() });
            }
        }
        if fit_errors.len() != cfg.n_antennas * nq {
            return Err(Error::DimensionMismatch { what: "fit-error table", expected: cfg.n_antennas * nq, found: fit_errors.len() });
        }
        Ok(LiftedBasis { n_antennas: cfg.n_antennas, k_u: cfg.k_u, i2: cfg.i2, i_off: cfg.i_off(), coeffs, phi, fit_errors })
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_u(&self) -> usize {
        2 * self.k_u + 1
    }

    pub fn n_b(&self) -> usize {
        2 * self.i_off + 1
    }

    pub fn k_u(&self) -> usize {
        self.k_u
    }

    pub fn i2(&self) -> usize {
        self.i2
    }

    pub fn i_off(&self) -> usize {
        self.i_off
    }

    /// Angular harmonic of column `m` (zero-based): `m - I_off`.
    pub fn k_theta(&self, m: usize) -> i64 {
        m as i64 - self.i_off as i64
    }

    pub fn coeff(&self, n: usize, q: i64, k: i64) -> Complex64 {
        let nq = 2 * self.i2 + 1;
        let idx = (n * nq + (q + self.i2 as i64) as usize) * self.n_u() + (k + self.k_u as i64) as usize;
        self.coeffs[idx]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn phi(&self, n: usize) -> &DMatrix<Complex64> {
        &self.phi[n]
    }

    pub fn phis(&self) -> &[DMatrix<Complex64>] {
        &self.phi
    }

    pub fn fit_error(&self, n: usize, q: i64) -> f64 {
        self.fit_errors[n * (2 * self.i2 + 1) + (q + self.i2 as i64) as usize]
    }

    pub fn fit_errors(&self) -> &[f64] {
        &self.fit_errors
    }

    pub fn max_fit_error(&self) -> f64 {
        self.fit_errors.iter().copied().fold(0.0, f64::max)
    }

    /// `<Phi_n, atom(u, theta)>`, the lifted model of steering entry `n`.
    pub fn lifted_inner(&self, n: usize, u: f64, theta: f64) -> Result<Complex64> {
        if n >= self.n_antennas {
            return Err(Error::IndexOutOfRange { what: "antenna", index: n as i64, limit: self.n_antennas as i64 });
        }
        if !(0.0..=TAU).contains(&u) {
            return Err(Error::InverseRangeOutOfDomain(u));
        }
        check_angle(theta)?;
        Ok(pairing(&self.phi[n], &atom(self.k_u, self.i_off, u, theta)))
    }

    /// Lifted-model channel `h[n] = <Phi_n, atom(u, theta)>` for all antennas.
    pub fn lifted_channel(&self, u: f64, theta: f64) -> Result<DVector<Complex64>> {
        (0..self.n_antennas).map(|n| self.lifted_inner(n, u, theta)).collect::<Result<Vec<_>>>().map(DVector::from_vec)
    }
}

/// `atom[k, m] = exp(j k u) exp(j k_theta(m) theta)` for `|k| <= K_u`, `|k_theta| <= I_off`.
pub fn atom(k_u: usize, i_off: usize, u: f64, theta: f64) -> DMatrix<Complex64> {
    let eu: Vec<Complex64> = (0..2 * k_u + 1).map(|k| Complex64::cis((k as f64 - k_u as f64) * u)).collect();
    let et: Vec<Complex64> = (0..2 * i_off + 1).map(|m| Complex64::cis((m as f64 - i_off as f64) * theta)).collect();
    DMatrix::from_fn(eu.len(), et.len(), |k, m| eu[k] * et[m])
}

/// Unconjugated pairing `sum A[k, m] X[k, m]`.
pub fn pairing(a: &DMatrix<Complex64>, x: &DMatrix<Complex64>) -> Complex64 {
    a.iter().zip(x.iter()).map(|(p, q)| p * q).sum()
}

/// Global coefficients and fit error for one `(n, q)`.
fn project(cfg: &ArrayConfig, map: &InverseRangeMap, n: usize, q: i64) -> Result<(Vec<Complex64>, f64)> {
    let fits = (0..cfg.n_panels).map(|p| fit_panel(cfg, n, q, p)).collect::<Result<Vec<_>>>()?;
    let grid: Vec<f64> = (0..PROJECTION_GRID).map(|j| TAU * j as f64 / PROJECTION_GRID as f64).collect();
    let blended: Vec<Complex64> = grid
        .iter()
        .map(|&u| {
            let x = map.x_of_u(u);
            fits.iter()
                .map(|f| {
                    let w = blend_window(cfg, f.panel, x);
                    if w == 0.0 { Complex64::new(0.0, 0.0) } else { f.eval(u) * w }
                })
                .sum()
        })
        .collect();
    let k_u = cfg.k_u as i64;
    let coeffs: Vec<Complex64> = (-k_u..=k_u)
        .map(|k| {
            let s: Complex64 = grid.iter().zip(&blended).map(|(&u, f)| f * Complex64::cis(-(k as f64) * u)).sum();
            s / PROJECTION_GRID as f64
        })
        .collect();
    let alpha = cfg.alpha(n);
    let (mut worst, mut peak, mut peak_fit) = (0.0f64, 0.0f64, 0.0f64);
    for &u in &grid {
        let fit: Complex64 = coeffs.iter().enumerate().map(|(i, a)| a * Complex64::cis((i as i64 - k_u) as f64 * u)).sum();
        let truth = curvature_coeff(alpha, q, map.x_of_u(u));
        worst = worst.max((fit - truth).norm());
        peak = peak.max(truth.norm());
        peak_fit = peak_fit.max(fit.norm());
    }
    let err = if peak > 0.0 { worst / peak } else { peak_fit };
    Ok((coeffs, err))
}

/// `Phi_n[k, m] = sum_{l + 2q = k_theta(m)} j^{l+q} J_l(k n d) a_{n,q}[k]`.
pub fn assemble_phi(cfg: &ArrayConfig, he: &HarmonicExpansion, coeffs: &[Complex64], n: usize) -> DMatrix<Complex64> {
    let (n_u, n_b) = (cfg.n_u(), cfg.n_b());
    let (i1, i2, i_off) = (cfg.i1 as i64, cfg.i2 as i64, cfg.i_off() as i64);
    let nq = (2 * i2 + 1) as usize;
    let mut phi = DMatrix::zeros(n_u, n_b);
    for q in -i2..=i2 {
        let base = (n * nq + (q + i2) as usize) * n_u;
        for l in -i1..=i1 {
            let jl = he.bessel(n, l);
            let m = (l + 2 * q + i_off) as usize;
            let w = j_pow(l + q) * jl;
            for k in 0..n_u {
                phi[(k, m)] += w * coeffs[base + k];
            }
        }
    }
    phi
}

/// Fits every `(n, q)` and assembles all lifting matrices.
pub fn build_basis(cfg: &ArrayConfig) -> Result<LiftedBasis> {
    cfg.validate()?;
    let map = InverseRangeMap::from_config(cfg)?;
    let he = HarmonicExpansion::new(cfg)?;
    let i2 = cfg.i2 as i64;
    let mut coeffs = Vec::with_capacity(cfg.n_antennas * (2 * cfg.i2 + 1) * cfg.n_u());
    let mut fit_errors = Vec::with_capacity(cfg.n_antennas * (2 * cfg.i2 + 1));
    for n in 0..cfg.n_antennas {
        for q in -i2..=i2 {
            let (a, e) = project(cfg, &map, n, q)?;
            coeffs.extend(a);
            fit_errors.push(e);
        }
    }
    let phi = (0..cfg.n_antennas).map(|n| assemble_phi(cfg, &he, &coeffs, n)).collect();
    LiftedBasis::from_parts(cfg, coeffs, phi, fit_errors)
}

/// Windows of all panels evaluated at `x`.
pub fn blend_profile(cfg: &ArrayConfig, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; cfg.n_panels];
    for (p, v) in out.iter_mut().enumerate() {
        *v = blend_window(cfg, p, x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ArrayConfig {
        ArrayConfig { n_antennas: 8, i1: 6, ..ArrayConfig::default() }
    }

    #[test]
    fn map_endpoints_exact() {
        let m = InverseRangeMap::new(0.1, 6.0).unwrap();
        assert_eq!(m.u_of_r(6.0).unwrap(), 0.0);
        assert_eq!(m.u_of_r(0.1).unwrap(), TAU);
        assert_eq!(m.r_of_u(0.0).unwrap(), 6.0);
        assert_eq!(m.r_of_u(TAU).unwrap(), 0.1);
        let u = m.u_of_r(0.2).unwrap();
        assert!((u - TAU * (5.0 - 1.0 / 6.0) / (10.0 - 1.0 / 6.0)).abs() < 1e-14);
        assert!((u - 3.0883453204781).abs() < 1e-12);
        assert!((m.r_of_u(u).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn map_rejects_outside() {
        let m = InverseRangeMap::new(0.1, 6.0).unwrap();
        assert!(m.u_of_r(0.09).is_err());
        assert!(m.u_of_r(6.01).is_err());
        assert!(m.r_of_u(-1e-9).is_err());
        assert!(m.r_of_u(7.0).is_err());
        assert!(InverseRangeMap::new(1.0, 1.0).is_err());
    }

    #[test]
    fn windows_partition_unity() {
        let cfg = ArrayConfig::default();
        let map = InverseRangeMap::from_config(&cfg).unwrap();
        for j in 0..PROJECTION_GRID {
            let x = map.x_of_u(TAU * j as f64 / PROJECTION_GRID as f64);
            let s: f64 = blend_profile(&cfg, x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        for p in 0..cfg.n_panels {
            let fit = fit_panel(&cfg, 5, 0, p).unwrap();
            let (lo, hi) = panel_interval(&cfg, p);
            assert!(fit.nodes_x.iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
            // the window vanishes outside the panel's own nodes
            assert!(blend_window(&cfg, p, lo - 1e-9) == 0.0 || p == 0);
        }
    }

    #[test]
    fn constant_target_is_recovered() {
        let cfg = ArrayConfig::default();
        let fit = fit_panel(&ArrayConfig { ridge_mu: 1e-3, ..cfg.clone() }, 0, 0, 1).unwrap();
        let w: f64 = fit.weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-12);
        assert!(fit.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>() < 1.0);
        let tight = fit_panel(&ArrayConfig { ridge_mu: 1e-14, ..ArrayConfig::default() }, 0, 0, 1).unwrap();
        for (k, a) in tight.coeffs.iter().enumerate() {
            let want = if k == cfg.k_loc { 1.0 } else { 0.0 };
            assert!((a - Complex64::new(want, 0.0)).norm() < 1e-6, "k={k} a={a}");
        }
        let zero = fit_panel(&ArrayConfig::default(), 0, 1, 2).unwrap();
        assert!(zero.coeffs.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn unregularized_rank_failure_is_reported() {
        let cfg = ArrayConfig { ridge_mu: 0.0, k_loc: 40, ..ArrayConfig::default() };
        assert!(matches!(fit_panel(&cfg, 3, 0, 0), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn panel_fit_matches_normal_equations() {
        let cfg = ArrayConfig::default();
        let fit = fit_panel(&cfg, 63, 1, 2).unwrap();
        let width = 2 * cfg.k_loc + 1;
        let alpha = cfg.alpha(63);
        let a = DMatrix::from_fn(PANEL_NODES, width, |i, k| Complex64::cis((k as f64 - cfg.k_loc as f64) * fit.nodes_u[i]));
        let wdiag = DMatrix::from_diagonal(&DVector::from_iterator(PANEL_NODES, fit.weights.iter().map(|&w| Complex64::new(w, 0.0))));
        let f = DVector::from_iterator(PANEL_NODES, fit.nodes_x.iter().map(|&x| curvature_coeff(alpha, 1, x)));
        let lhs = a.adjoint() * &wdiag * &a + DMatrix::identity(width, width) * Complex64::new(cfg.ridge_mu, 0.0);
        let rhs = a.adjoint() * &wdiag * &f;
        let oracle = lhs.lu().solve(&rhs).unwrap();
        let got = DVector::from_vec(fit.coeffs.clone());
        let cost = |c: &DVector<Complex64>| {
            let r = &f - &a * c;
            r.iter().zip(&fit.weights).map(|(z, w)| w * z.norm_sqr()).sum::<f64>() + cfg.ridge_mu * c.norm_squared()
        };
        assert!((cost(&got) - cost(&oracle)).abs() < 1e-10);
        assert!((&got - &oracle).norm() < 1e-6 * (1.0 + oracle.norm()));
    }

    #[test]
    fn weight_scaling_is_irrelevant_without_ridge() {
        let us: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        let w: Vec<f64> = us.iter().map(|u| 1.0 + u).collect();
        let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let f: Vec<Complex64> = us.iter().map(|&u| Complex64::new(u.sin(), u * u)).collect();
        let a = ridge_fit(&us, &w, &f, 2, 0.0).unwrap();
        let b = ridge_fit(&us, &w2, &f, 2, 0.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn basis_shapes_and_antenna_zero() {
        let cfg = small();
        let b = build_basis(&cfg).unwrap();
        assert_eq!(b.phis().len(), 8);
        assert_eq!((b.phi(0).nrows(), b.phi(0).ncols()), (5, 2 * (6 + 2) + 1));
        let phi0 = b.phi(0);
        let (k0, m0) = (cfg.k_u, cfg.i_off());
        assert!((phi0[(k0, m0)] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        for k in 0..cfg.n_u() {
            for m in 0..cfg.n_b() {
                if (k, m) != (k0, m0) {
                    assert!(phi0[(k, m)].norm() < 1e-6);
                }
            }
        }
        for &(u, t) in &[(0.3, 0.2), (5.0, 2.5)] {
            assert!((b.lifted_inner(0, u, t).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
        assert_eq!(b.k_theta(0), -(cfg.i_off() as i64));
        assert_eq!(b.k_theta(cfg.n_b() - 1), cfg.i_off() as i64);
    }

    #[test]
    fn assembly_is_reproducible() {
        let cfg = small();
        let b = build_basis(&cfg).unwrap();
        let he = HarmonicExpansion::new(&cfg).unwrap();
        for n in 0..cfg.n_antennas {
            assert_eq!(&assemble_phi(&cfg, &he, b.coeffs(), n), b.phi(n));
        }
    }

    #[test]
    fn from_parts_checks_shapes() {
        let cfg = small();
        let b = build_basis(&cfg).unwrap();
        let mut short = b.coeffs().to_vec();
        short.pop();
        assert!(LiftedBasis::from_parts(&cfg, short, b.phis().to_vec(), b.fit_errors().to_vec()).is_err());
        assert!(LiftedBasis::from_parts(&cfg, b.coeffs().to_vec(), b.phis()[1..].to_vec(), b.fit_errors().to_vec()).is_err());
        let rebuilt = LiftedBasis::from_parts(&cfg, b.coeffs().to_vec(), b.phis().to_vec(), b.fit_errors().to_vec()).unwrap();
        assert_eq!(rebuilt, b);
    }
}
