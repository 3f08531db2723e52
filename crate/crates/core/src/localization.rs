//! Support extraction from the dual certificate, gain refinement and
//! scoring against ground truth.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{synthesize_channel, ArrayConfig, PathParam, SteeringModel};
use crate::basis::{atom, InverseRangeMap};
use crate::linalg::cvec_norm;
use crate::measurement::MeasurementEnsemble;
use crate::sdp::dual_coefficients;
use crate::trig::{eval_grid, eval_local, uniform};
use crate::{Error, Result};

/// Condition number above which the gain system counts as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct PeakOptions {
    pub threshold: f64,
    /// `(H_u, H_theta)` samples over `[0, 2 pi) x [0, pi)`.
    pub grid: (usize, usize),
    pub grad_tol: f64,
    pub max_newton: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions { threshold: 0.99, grid: (512, 512), grad_tol: 1e-8, max_newton: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub u: f64,
    pub theta: f64,
    /// `|Q|` at the refined point.
    pub value: f64,
    /// Norm of the gradient of `|Q|^2` at the refined point.
    pub grad_norm: f64,
}

/// `Q(u, theta) = sum C[k, m] exp(j (k - K_u) u) exp(j (m - I_off) theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolynomial {
    coeffs: DMatrix<Complex64>,
}

impl DualPolynomial {
    pub fn from_coeffs(coeffs: DMatrix<Complex64>) -> Result<Self> {
        if coeffs.nrows() % 2 == 0 || coeffs.ncols() % 2 == 0 {
            return Err(Error::InvalidArgument("certificate degrees must give odd dimensions".into()));
        }
        Ok(DualPolynomial { coeffs })
    }

    pub fn from_dual(ens: &MeasurementEnsemble, q: &DVector<Complex64>) -> Result<Self> {
        DualPolynomial::from_coeffs(dual_coefficients(&ens.sensing, q, ens.n_u(), ens.n_b())?)
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn eval(&self, u: f64, theta: f64) -> Complex64 {
        let (k_u, i_off) = ((self.coeffs.nrows() - 1) / 2, (self.coeffs.ncols() - 1) / 2);
        self.coeffs.iter().zip(atom(k_u, i_off, u, theta).iter()).map(|(c, a)| c * a).sum()
    }

    /// Values on `us x thetas` in one separable pass.
    pub fn eval_grid(&self, us: &[f64], thetas: &[f64]) -> DMatrix<Complex64> {
        eval_grid(&self.coeffs, us, thetas)
    }

    /// Gradient of `|Q|^2` in `(u, theta)`.
    pub fn gradient(&self, u: f64, theta: f64) -> [f64; 2] {
        let l = eval_local(&self.coeffs, u, theta);
        [2.0 * (l.q.conj() * l.du).re, 2.0 * (l.q.conj() * l.dt).re]
    }

    /// Grid maximum of `|Q|` over the full torus.
    pub fn sup_norm(&self, grid: (usize, usize)) -> f64 {
        let v = self.eval_grid(&uniform(grid.0, TAU), &uniform(grid.1, TAU));
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Refined local maxima of `|Q|` with `theta` in `[0, pi)` and
    /// `|Q| >= threshold`, strongest first.
    pub fn find_peaks(&self, opts: &PeakOptions) -> Vec<Peak> {
        let (hu, ht) = (opts.grid.0.max(4), opts.grid.1.max(4));
        let us = uniform(hu, TAU);
        let dt = PI / ht as f64;
        // one extra column on each side so edge maxima see both neighbours
        let thetas: Vec<f64> = (0..ht + 2).map(|j| (j as f64 - 1.0) * dt).collect();
        let mag = self.eval_grid(&us, &thetas).map(|z| z.norm());
        let floor = 0.9 * opts.threshold;

        let mut found: Vec<Peak> = Vec::new();
        for i in 0..hu {
            for j in 1..=ht {
                let v = mag[(i, j)];
                if v < floor {
                    continue;
                }
                let mut is_max = true;
                'nb: for di in [hu - 1, 0, 1] {
                    for dj in [-1i64, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        if mag[((i + di) % hu, (j as i64 + dj) as usize)] > v {
                            is_max = false;
                            break 'nb;
                        }
                    }
                }
                if !is_max {
                    continue;
                }
                let max_step = (TAU / hu as f64).max(dt);
                if let Some(p) = self.refine(us[i], thetas[j], max_step, opts) {
                    if p.value >= opts.threshold && p.theta >= 0.0 && p.theta < PI {
                        found.push(p);
                    }
                }
            }
        }
        found.sort_by(|a, b| b.value.total_cmp(&a.value));
        let (ru, rt) = (TAU / hu as f64, dt);
        let mut kept: Vec<Peak> = Vec::new();
        for p in found {
            if !kept.iter().any(|k| wrap_dist(k.u, p.u) <= ru && (k.theta - p.theta).abs() <= rt) {
                kept.push(p);
            }
        }
        kept
    }

    /// Damped Newton ascent on `|Q|^2`.
    fn refine(&self, u0: f64, t0: f64, max_step: f64, opts: &PeakOptions) -> Option<Peak> {
        let (mut u, mut t) = (u0, t0);
        let value = |u: f64, t: f64| self.eval(u, t).norm_sqr();
        let mut f = value(u, t);
        for _ in 0..opts.max_newton {
            let l = eval_local(&self.coeffs, u, t);
            let g = [2.0 * (l.q.conj() * l.du).re, 2.0 * (l.q.conj() * l.dt).re];
            if libm::hypot(g[0], g[1]) <= opts.grad_tol {
                break;
            }
            let huu = 2.0 * (l.du.norm_sqr() + (l.q.conj() * l.duu).re);
            let htt = 2.0 * (l.dt.norm_sqr() + (l.q.conj() * l.dtt).re);
            let hut = 2.0 * ((l.du.conj() * l.dt).re + (l.q.conj() * l.dut).re);
            let det = huu * htt - hut * hut;
            let mut d = if huu < 0.0 && det > 0.0 {
                [-(htt * g[0] - hut * g[1]) / det, -(huu * g[1] - hut * g[0]) / det]
            } else {
                let s = huu.abs().max(htt.abs()).max(1e-12);
                [g[0] / s, g[1] / s]
            };
            let len = libm::hypot(d[0], d[1]);
            if len > max_step {
                d = [d[0] * max_step / len, d[1] * max_step / len];
            }
            let mut a = 1.0;
            let mut moved = false;
            for _ in 0..40 {
                let (nu, nt) = (u + a * d[0], t + a * d[1]);
                let nf = value(nu, nt);
                if nf >= f {
                    u = nu;
                    t = nt;
                    f = nf;
                    moved = true;
                    break;
                }
                a *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let u = wrap(u);
        let grad = self.gradient(u, t);
        Some(Peak { u, theta: t, value: libm::sqrt(f), grad_norm: libm::hypot(grad[0], grad[1]) })
    }
}

fn wrap(x: f64) -> f64 {
    let w = x - TAU * libm::floor(x / TAU);
    if w >= TAU { 0.0 } else { w }
}

fn wrap_dist(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    d.min(TAU - d)
}

/// Columns `G[m, l] = <Psi_m, atom(u_l, theta_l)>`.
pub fn gain_matrix(ens: &MeasurementEnsemble, support: &[(f64, f64)]) -> DMatrix<Complex64> {
    let (k_u, i_off) = ((ens.n_u() - 1) / 2, (ens.n_b() - 1) / 2);
    let mut g = DMatrix::zeros(ens.n_meas(), support.len());
    for (l, &(u, t)) in support.iter().enumerate() {
        let a = atom(k_u, i_off, u, t);
        g.set_column(l, &(&ens.sensing * DVector::from_column_slice(a.as_slice())));
    }
    g
}

/// Least-squares gains `argmin || y - G c ||` via QR.
pub fn estimate_gains(ens: &MeasurementEnsemble, support: &[(f64, f64)], y: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("gain estimation needs a non-empty support".into()));
    }
    if y.len() != ens.n_meas() {
        return Err(Error::DimensionMismatch { what: "observation length", expected: ens.n_meas(), found: y.len() });
    }
    let g = gain_matrix(ens, support);
    let deficient = |cond: f64| Error::RankDeficient { cond, support: support.to_vec() };
    if support.len() > g.nrows() {
        return Err(deficient(f64::INFINITY));
    }
    let sv = g.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(deficient(cond));
    }
    let qr = g.qr();
    let rhs = qr.q().adjoint() * y;
    qr.r().solve_upper_triangular(&rhs).ok_or_else(|| deficient(cond))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEstimate {
    pub u: f64,
    pub theta: f64,
    pub range: f64,
    pub gain: Complex64,
    /// `|Q|` at the peak.
    pub certificate: f64,
}

impl PathEstimate {
    pub fn to_path(&self) -> PathParam {
        PathParam::new(self.range, self.theta, self.gain)
    }
}

/// Peaks, range back-mapping and least-squares gains.
pub fn localize(
    ens: &MeasurementEnsemble,
    map: &InverseRangeMap,
    y: &DVector<Complex64>,
    q: &DVector<Complex64>,
    opts: &PeakOptions,
) -> Result<(Vec<PathEstimate>, Vec<Peak>)> {
    let dp = DualPolynomial::from_dual(ens, q)?;
    let peaks = dp.find_peaks(opts);
    if peaks.is_empty() {
        return Ok((Vec::new(), peaks));
    }
    let support: Vec<(f64, f64)> = peaks.iter().map(|p| (p.u, p.theta)).collect();
    let gains = estimate_gains(ens, &support, y)?;
    let est = peaks
        .iter()
        .zip(gains.iter())
        .map(|(p, &c)| Ok(PathEstimate { u: p.u, theta: p.theta, range: map.r_of_u(p.u)?, gain: c, certificate: p.value }))
        .collect::<Result<Vec<_>>>()?;
    Ok((est, peaks))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathError {
    pub truth: usize,
    pub estimate: usize,
    pub d_theta: f64,
    pub d_range: f64,
    pub d_u: f64,
    /// `estimate - truth`.
    pub d_gain: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportMetrics {
    pub matches: Vec<PathError>,
    pub misses: usize,
    pub false_alarms: usize,
    pub nmse: f64,
}

/// Estimates considered by the assignment search.
const MAX_MATCH_CANDIDATES: usize = 16;

/// One-to-one assignment minimizing the summed `|d_theta| + |d_u|`, with `u`
/// distances taken on the circle.
pub fn match_support(
    cfg: &ArrayConfig,
    map: &InverseRangeMap,
    est: &[PathEstimate],
    truth: &[PathParam],
    model: SteeringModel,
) -> Result<SupportMetrics> {
    let truth_u: Vec<f64> = truth.iter().map(|p| map.u_of_r(p.range)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..est.len()).collect();
    order.sort_by(|&a, &b| est[b].certificate.total_cmp(&est[a].certificate));
    order.truncate(MAX_MATCH_CANDIDATES);
    let ne = order.len();
    let cost = |t: usize, e: usize| (est[e].theta - truth[t].angle).abs() + wrap_dist(est[e].u, truth_u[t]);

    // dp[mask] after processing truth paths in order; mask = used estimates
    let states = 1usize << ne;
    let worst = (0usize, f64::INFINITY);
    let better = |a: (usize, f64), b: (usize, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    let mut dp = vec![worst; states];
    dp[0] = (0, 0.0);
    let mut choice = vec![vec![usize::MAX; states]; truth.len()];
    for t in 0..truth.len() {
        let mut next = vec![worst; states];
        let mut pick = vec![usize::MAX; states];
        for mask in 0..states {
            let cur = dp[mask];
            if cur.1.is_infinite() {
                continue;
            }
            if better(cur, next[mask]) {
                next[mask] = cur;
                pick[mask] = usize::MAX;
            }
            for k in 0..ne {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let cand = (cur.0 + 1, cur.1 + cost(t, order[k]));
                let nm = mask | (1 << k);
                if better(cand, next[nm]) {
                    next[nm] = cand;
                    pick[nm] = k;
                }
            }
        }
        dp = next;
        choice[t] = pick;
    }
    let mut mask = (0..states).fold(0, |best, m| if better(dp[m], dp[best]) { m } else { best });
    let mut pairs = Vec::new();
    for t in (0..truth.len()).rev() {
        let k = choice[t][mask];
        if k != usize::MAX {
            pairs.push((t, order[k]));
            mask &= !(1 << k);
        }
    }
    pairs.reverse();

    let matches: Vec<PathError> = pairs
        .iter()
        .map(|&(t, e)| PathError {
            truth: t,
            estimate: e,
            d_theta: est[e].theta - truth[t].angle,
            d_range: est[e].range - truth[t].range,
            d_u: {
                let d = wrap(est[e].u - truth_u[t]);
                if d > PI { d - TAU } else { d }
            },
            d_gain: est[e].gain - truth[t].gain,
        })
        .collect();

    let h = synthesize_channel(cfg, truth, model)?;
    let h_hat = if est.is_empty() {
        DVector::zeros(cfg.n_antennas)
    } else {
        let paths: Vec<PathParam> = est.iter().map(PathEstimate::to_path).collect();
        synthesize_channel(cfg, &paths, model)?
    };
    let hn = cvec_norm(&h);
    let nmse = libm::pow(cvec_norm(&(&h_hat - &h)) / hn, 2.0);
    Ok(SupportMetrics {
        misses: truth.len() - matches.len(),
        false_alarms: est.len() - matches.len(),
        matches,
        nmse,
    })
}
