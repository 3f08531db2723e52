//! Atomic-norm denoising over the lifted `N_u x N_b` harmonic model:
//!
//! ```text
//! minimize   tr(T(V)) / (2 N_u N_b) + t / 2
//! subject to [[T(V), z], [z^H, t]] >= 0,   || y - B z || <= eta
//! ```
//!
//! solved with an interior-point method. The dual vector `q` of the norm
//! constraint defines the certificate polynomial used for localization.

mod fft;
mod ipm;
mod schur;
mod toeplitz;

use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::cvec_norm;
use crate::measurement::{MeasurementEnsemble, Observation};
use crate::trig::{eval_grid, uniform};
use crate::{Error, Result};

pub use toeplitz::{objective, t2d, t2d_adjoint, LagArray};

/// Relative floor used when `eta` is zero, since the norm cone then has no
/// interior.
pub const ETA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Bound on scaled primal and dual equality residuals.
    pub eps_abs: f64,
    /// Duality gap bound relative to the objective.
    pub eps_rel: f64,
    /// Allowed negative eigenvalue of the returned block matrix, relative to
    /// its largest.
    pub tol_psd: f64,
    pub max_iter: usize,
    /// Slack allowed on `sup |Q| <= 1` before the dual is rescaled.
    pub tol_cert: f64,
    /// `(u, theta)` grid for the certificate check over the full torus.
    pub cert_grid: (usize, usize),
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { eps_abs: 1e-8, eps_rel: 1e-8, tol_psd: 1e-7, max_iter: 100, tol_cert: 1e-3, cert_grid: (128, 512) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub sensing: DMatrix<Complex64>,
    pub y: DVector<Complex64>,
    pub eta: f64,
    pub n_u: usize,
    pub n_b: usize,
}

impl SdpProblem {
    pub fn new(sensing: DMatrix<Complex64>, y: DVector<Complex64>, eta: f64, n_u: usize, n_b: usize) -> Result<Self> {
        if n_u == 0 || n_b == 0 || n_u % 2 == 0 || n_b % 2 == 0 {
            return Err(Error::InvalidArgument("lifted dimensions must be positive and odd".into()));
        }
        if sensing.ncols() != n_u * n_b {
            return Err(Error::DimensionMismatch { what: "sensing columns", expected: n_u * n_b, found: sensing.ncols() });
        }
        if y.len() != sensing.nrows() {
            return Err(Error::DimensionMismatch { what: "observation length", expected: sensing.nrows(), found: y.len() });
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("eta must be finite and non-negative, got {eta}")));
        }
        Ok(SdpProblem { sensing, y, eta, n_u, n_b })
    }

    pub fn from_observation(ens: &MeasurementEnsemble, obs: &Observation) -> Result<Self> {
        SdpProblem::new(ens.sensing.clone(), obs.y.clone(), obs.eta, ens.n_u(), ens.n_b())
    }

    pub fn n_meas(&self) -> usize {
        self.y.len()
    }

    /// `min_z || y - B z ||`.
    pub fn least_residual(&self) -> f64 {
        let svd = self.sensing.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        let mut proj = DVector::zeros(self.y.len());
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > 1e-12 * smax {
                let col = u.column(k);
                let coef = col.dotc(&self.y);
                proj += col * coef;
            }
        }
        cvec_norm(&(&self.y - proj))
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub z: DVector<Complex64>,
    pub v: LagArray,
    pub t: f64,
    /// Dual vector of the norm constraint, rescaled if the certificate
    /// exceeds `1 + tol_cert` on the check grid.
    pub q: DVector<Complex64>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub objective: f64,
    pub gap_history: Vec<f64>,
    /// Noise bound actually enforced.
    pub eta: f64,
    /// `|| y - B z ||` at the returned point.
    pub residual_norm: f64,
    /// Grid maximum of the certificate before any rescaling.
    pub certificate_peak: f64,
}

impl SdpSolution {
    /// `z` reshaped to `N_u x N_b`.
    pub fn lifted(&self) -> DMatrix<Complex64> {
        DMatrix::from_column_slice(self.v.n_u(), self.v.n_b(), self.z.as_slice())
    }

    pub fn block_matrix(&self) -> DMatrix<Complex64> {
        let n = self.z.len();
        let mut s = DMatrix::zeros(n + 1, n + 1);
        s.view_mut((0, 0), (n, n)).copy_from(&t2d(&self.v));
        for i in 0..n {
            s[(i, n)] = self.z[i];
            s[(n, i)] = self.z[i].conj();
        }
        s[(n, n)] = Complex64::new(self.t, 0.0);
        s
    }

    /// Smallest eigenvalue of the block matrix over its largest.
    pub fn psd_defect(&self) -> f64 {
        let ev = self.block_matrix().symmetric_eigenvalues();
        let hi = ev.amax().max(f64::MIN_POSITIVE);
        (-ev.min() / hi).max(0.0)
    }
}

/// Coefficients `C = sum_m conj(q_m) Psi_m` of the certificate, as `N_u x N_b`.
pub fn dual_coefficients(sensing: &DMatrix<Complex64>, q: &DVector<Complex64>, n_u: usize, n_b: usize) -> Result<DMatrix<Complex64>> {
    if sensing.nrows() != q.len() {
        return Err(Error::DimensionMismatch { what: "dual length", expected: sensing.nrows(), found: q.len() });
    }
    if sensing.ncols() != n_u * n_b {
        return Err(Error::DimensionMismatch { what: "sensing columns", expected: n_u * n_b, found: sensing.ncols() });
    }
    let g = sensing.tr_mul(&q.map(|v| v.conj()));
    Ok(DMatrix::from_column_slice(n_u, n_b, g.as_slice()))
}

/// Grid maximum of `|Q|` over `[0, 2 pi)^2`.
pub fn certificate_peak(coeffs: &DMatrix<Complex64>, grid: (usize, usize)) -> f64 {
    let vals = eval_grid(coeffs, &uniform(grid.0.max(1), TAU), &uniform(grid.1.max(1), TAU));
    vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let (n_u, n_b) = (problem.n_u, problem.n_b);
    let n = n_u * n_b;
    let m = problem.n_meas();
    let ynorm = cvec_norm(&problem.y);
    if ynorm == 0.0 {
        return Ok(SdpSolution {
            z: DVector::zeros(n),
            v: LagArray::zeros(n_u, n_b),
            t: 0.0,
            q: DVector::zeros(m),
            status: SolverStatus::Optimal,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            gap: 0.0,
            objective: 0.0,
            gap_history: Vec::new(),
            eta: problem.eta,
            residual_norm: 0.0,
            certificate_peak: 0.0,
        });
    }
    let eta = problem.eta.max(ETA_FLOOR * ynorm);
    let floor = problem.least_residual();
    if floor > eta {
        return Err(Error::Infeasible { residual: floor, eta });
    }

    let y = &problem.y / Complex64::new(ynorm, 0.0);
    let cone = ipm::ConeProblem::new(n_u, n_b, &problem.sensing, &y, eta / ynorm);
    let out = cone.solve(opts.max_iter, opts.eps_abs, opts.eps_rel)?;
    let x = out.iterate.x.as_slice();
    let lay = &cone.layout;

    let mut v = lay.lags(x);
    v.scale(ynorm);
    let z = lay.z(x) * Complex64::new(ynorm, 0.0);
    let t = x[lay.t()] * ynorm;
    let zs = &out.iterate.z_soc;
    let mut q = DVector::from_fn(m, |i, _| -Complex64::new(zs[1 + i], zs[1 + m + i]));

    let coeffs = dual_coefficients(&problem.sensing, &q, n_u, n_b)?;
    let peak = certificate_peak(&coeffs, opts.cert_grid);
    if peak > 1.0 + opts.tol_cert {
        q /= Complex64::new(peak, 0.0);
    }
    let residual_norm = cvec_norm(&(&problem.y - &problem.sensing * &z));
    let status = if out.converged { SolverStatus::Optimal } else { SolverStatus::MaxIter };
    Ok(SdpSolution {
        objective: objective(&v, t),
        z,
        v,
        t,
        q,
        status,
        iterations: out.iterations,
        primal_residual: out.primal_residual,
        dual_residual: out.dual_residual,
        gap: out.gap * ynorm,
        gap_history: out.gap_history.iter().map(|g| g * ynorm).collect(),
        eta,
        residual_norm,
        certificate_peak: peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::atom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn gaussian(m: usize, n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let s = 1.0 / (2.0 * n as f64).sqrt();
        DMatrix::from_fn(m, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (2.0 * s * 3f64.sqrt()))
    }

    fn vec_atom(n_u: usize, n_b: usize, u: f64, th: f64) -> DVector<Complex64> {
        let a = atom((n_u - 1) / 2, (n_b - 1) / 2, u, th);
        DVector::from_column_slice(a.as_slice())
    }

    fn q_at(sol: &SdpSolution, b: &DMatrix<Complex64>, u: f64, th: f64) -> f64 {
        let c = dual_coefficients(b, &sol.q, sol.v.n_u(), sol.v.n_b()).unwrap();
        let a = atom((sol.v.n_u() - 1) / 2, (sol.v.n_b() - 1) / 2, u, th);
        c.iter().zip(a.iter()).map(|(x, y)| x * y).sum::<Complex64>().norm()
    }

    #[test]
    fn zero_observation_gives_zero_solution() {
        let b = gaussian(6, 15, 1);
        let p = SdpProblem::new(b, DVector::zeros(6), 0.1, 3, 5).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolverStatus::Optimal);
        assert_eq!(s.objective, 0.0);
        assert!(s.z.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn single_atom_is_recovered() {
        let (n_u, n_b) = (3, 5);
        let b = gaussian(12, 15, 2);
        let c = Complex64::new(0.8, -0.6);
        let z0 = vec_atom(n_u, n_b, 1.3, 2.2) * c;
        let y = &b * &z0;
        let p = SdpProblem::new(b.clone(), y.clone(), 1e-8 * cvec_norm(&y), n_u, n_b).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolverStatus::Optimal);
        assert!(cvec_norm(&(&s.z - &z0)) < 1e-5, "z err {}", cvec_norm(&(&s.z - &z0)));
        assert!((s.objective - 1.0).abs() < 1e-6, "objective {}", s.objective);
        assert!((q_at(&s, &b, 1.3, 2.2) - 1.0).abs() < 1e-4);
        assert!(s.residual_norm <= s.eta * (1.0 + 1e-6));
        assert!(s.psd_defect() <= SolverOptions::default().tol_psd);
        assert_eq!(s.v.hermitian_defect(), 0.0);
    }

    #[test]
    fn two_atoms_with_certificate() {
        let (n_u, n_b) = (3, 7);
        let b = gaussian(16, 21, 3);
        let atoms = [(0.9, 0.6, Complex64::new(1.0, 0.2)), (4.1, 2.7, Complex64::new(-0.4, 0.5))];
        let z0 = atoms.iter().fold(DVector::zeros(21), |acc, &(u, t, c)| acc + vec_atom(n_u, n_b, u, t) * c);
        let y = &b * &z0;
        let p = SdpProblem::new(b.clone(), y.clone(), 1e-8 * cvec_norm(&y), n_u, n_b).unwrap();
        let opts = SolverOptions::default();
        let s = solve(&p, &opts).unwrap();
        assert!(cvec_norm(&(&s.z - &z0)) < 1e-5 * cvec_norm(&z0));
        let coeffs = dual_coefficients(&b, &s.q, n_u, n_b).unwrap();
        assert!(certificate_peak(&coeffs, (256, 256)) <= 1.0 + opts.tol_cert);
        for &(u, t, _) in &atoms {
            assert!(q_at(&s, &b, u, t) > 1.0 - 1e-4);
        }
    }

    #[test]
    fn gap_history_is_non_increasing() {
        let b = gaussian(10, 15, 4);
        let z0 = vec_atom(3, 5, 2.0, 0.4) + vec_atom(3, 5, 5.0, 1.9) * Complex64::new(0.0, 0.7);
        let y = &b * &z0;
        let p = SdpProblem::new(b, y, 0.05, 3, 5).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert!(s.gap_history.len() > 3);
        for w in s.gap_history.windows(2) {
            assert!(w[1] <= w[0], "gap rose from {} to {}", w[0], w[1]);
        }
        assert!(s.gap <= 1e-6);
    }

    #[test]
    fn scaling_the_data_scales_the_primal() {
        let b = gaussian(10, 15, 5);
        let y = &b * (vec_atom(3, 5, 0.3, 1.1) * Complex64::new(2.0, 1.0));
        let eta = 0.02 * cvec_norm(&y);
        let opts = SolverOptions::default();
        let s1 = solve(&SdpProblem::new(b.clone(), y.clone(), eta, 3, 5).unwrap(), &opts).unwrap();
        let k = 37.5;
        let s2 = solve(&SdpProblem::new(b, &y * Complex64::new(k, 0.0), k * eta, 3, 5).unwrap(), &opts).unwrap();
        assert!(cvec_norm(&(&s2.z - &s1.z * Complex64::new(k, 0.0))) < 1e-6 * k * cvec_norm(&s1.z));
        assert!((s2.objective - k * s1.objective).abs() < 1e-6 * k * s1.objective);
        assert!(cvec_norm(&(&s2.q - &s1.q)) < 1e-5);
    }

    #[test]
    fn loose_eta_shrinks_toward_zero() {
        let b = gaussian(8, 15, 6);
        let y = &b * vec_atom(3, 5, 1.0, 1.0);
        let p = SdpProblem::new(b, y.clone(), 1.01 * cvec_norm(&y), 3, 5).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert!(s.objective.abs() < 1e-6);
    }

    #[test]
    fn unreachable_observation_is_infeasible() {
        let b = gaussian(6, 3, 7);
        let y = DVector::from_fn(6, |i, _| Complex64::new(1.0, i as f64));
        let p = SdpProblem::new(b, y, 1e-6, 1, 3).unwrap();
        match solve(&p, &SolverOptions::default()) {
            Err(Error::Infeasible { residual, eta }) => assert!(residual > eta),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SdpProblem::new(gaussian(4, 15, 0), DVector::zeros(4), 0.1, 3, 4).is_err());
        assert!(SdpProblem::new(gaussian(4, 15, 0), DVector::zeros(5), 0.1, 3, 5).is_err());
        assert!(SdpProblem::new(gaussian(4, 15, 0), DVector::zeros(4), -1.0, 3, 5).is_err());
    }
}
