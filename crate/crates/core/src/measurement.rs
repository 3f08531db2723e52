//! Hybrid combiner, lifted sensing operator and observation synthesis.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::array::{check_angle, synthesize_channel, ArrayConfig, PathParam, SteeringModel};
use crate::basis::{atom, pairing, InverseRangeMap, LiftedBasis};
use crate::linalg::cvec_norm;
use crate::{Error, Result};

/// ChaCha stream used for combiner phases.
pub const COMBINER_STREAM: u64 = 0;
/// ChaCha stream used for measurement noise.
pub const NOISE_STREAM: u64 = 1;
/// Default multiplier applied to the model-mismatch norm when choosing `eta`.
pub const ETA_SAFETY: f64 = 1.5;

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Constant-modulus combiner with entries `exp(j phi) / sqrt(N_r)`, `phi ~ U[0, 2 pi)`.
pub fn draw_combiner(n_meas: usize, n_antennas: usize, seed: u64) -> DMatrix<Complex64> {
    let mut r = rng(seed, COMBINER_STREAM);
    let scale = 1.0 / libm::sqrt(n_antennas as f64);
    // row-major draw order so the matrix does not depend on storage layout
    let phases: Vec<f64> = (0..n_meas * n_antennas).map(|_| r.random::<f64>() * TAU).collect();
    DMatrix::from_fn(n_meas, n_antennas, |m, n| Complex64::from_polar(scale, phases[m * n_antennas + n]))
}

/// Where an observation vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    SyntheticExact,
    SyntheticFresnel,
    SyntheticLifted,
    External,
}

/// Channel model used to generate or explain observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalModel {
    Exact,
    Fresnel,
    Lifted,
}

impl SignalModel {
    pub fn provenance(self) -> Provenance {
        match self {
            SignalModel::Exact => Provenance::SyntheticExact,
            SignalModel::Fresnel => Provenance::SyntheticFresnel,
            SignalModel::Lifted => Provenance::SyntheticLifted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: DVector<Complex64>,
    pub provenance: Provenance,
    pub eta: f64,
}

/// A lifted atom `(u, theta)` with gain `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedAtom {
    pub u: f64,
    pub theta: f64,
    pub gain: Complex64,
}

/// Combiner, per-measurement lifted maps `Psi_m` and the flattened sensing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    pub combiner: DMatrix<Complex64>,
    pub psi: Vec<DMatrix<Complex64>>,
    /// Row `m` is `vec(Psi_m)` in u-fast order, so `B' vec(X) = [<Psi_m, X>]_m`.
    pub sensing: DMatrix<Complex64>,
    pub seed: Option<u64>,
    pub noise_std: f64,
    n_u: usize,
    n_b: usize,
}

pub fn build_sensing(basis: &LiftedBasis, combiner: DMatrix<Complex64>) -> Result<MeasurementEnsemble> {
    if combiner.ncols() != basis.n_antennas() {
        return Err(Error::DimensionMismatch {
            what: "combiner columns",
            expected: basis.n_antennas(),
            found: combiner.ncols(),
        });
    }
    let (n_u, n_b) = (basis.n_u(), basis.n_b());
    let m_count = combiner.nrows();
    let mut psi = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let mut acc = DMatrix::<Complex64>::zeros(n_u, n_b);
        for (n, phi) in basis.phis().iter().enumerate() {
            acc.zip_apply(phi, |a, p| *a += combiner[(m, n)] * p);
        }
        psi.push(acc);
    }
    let sensing = DMatrix::from_fn(m_count, n_u * n_b, |m, idx| psi[m].as_slice()[idx]);
    Ok(MeasurementEnsemble { combiner, psi, sensing, seed: None, noise_std: 0.0, n_u, n_b })
}

impl MeasurementEnsemble {
    /// Draws a seeded combiner and builds the ensemble.
    pub fn generate(basis: &LiftedBasis, n_meas: usize, seed: u64, noise_std: f64) -> Result<Self> {
        if n_meas == 0 {
            return Err(Error::InvalidArgument("need at least one measurement".into()));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidArgument("noise standard deviation must be non-negative".into()));
        }
        let mut ens = build_sensing(basis, draw_combiner(n_meas, basis.n_antennas(), seed))?;
        ens.seed = Some(seed);
        ens.noise_std = noise_std;
        Ok(ens)
    }

    pub fn n_meas(&self) -> usize {
        self.combiner.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    /// `[<Psi_m, X>]_m`.
    pub fn apply(&self, x: &DMatrix<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(self.n_meas(), self.psi.iter().map(|p| pairing(p, x)))
    }

    /// `B'^H q` as a vector of length `N_u N_b`.
    pub fn adjoint(&self, q: &DVector<Complex64>) -> DVector<Complex64> {
        self.sensing.adjoint() * q
    }

    /// Replaces `B`, `Psi_m` and `B'` by `W B`, `sum W[m, m'] Psi_m'` and `W B'`.
    pub fn whitened(&self, w: &DMatrix<Complex64>) -> Result<Self> {
        if w.ncols() != self.n_meas() {
            return Err(Error::DimensionMismatch { what: "whitening matrix columns", expected: self.n_meas(), found: w.ncols() });
        }
        let combiner = w * &self.combiner;
        let sensing = w * &self.sensing;
        let psi = (0..w.nrows())
            .map(|m| DMatrix::from_row_slice(self.n_b, self.n_u, sensing.row(m).clone_owned().as_slice()).transpose())
            .collect();
        Ok(MeasurementEnsemble { combiner, psi, sensing, seed: self.seed, noise_std: self.noise_std, n_u: self.n_u, n_b: self.n_b })
    }
}

impl Observation {
    pub fn whitened(&self, w: &DMatrix<Complex64>) -> Self {
        Observation { y: w * &self.y, provenance: self.provenance, eta: self.eta }
    }
}

/// `y = B h + w` with circular Gaussian noise of per-component variance `sigma^2`.
pub fn observe(ens: &MeasurementEnsemble, h: &DVector<Complex64>, noise_std: f64, seed: u64, provenance: Provenance) -> Result<Observation> {
    if h.len() != ens.combiner.ncols() {
        return Err(Error::DimensionMismatch { what: "channel length", expected: ens.combiner.ncols(), found: h.len() });
    }
    let mut y = &ens.combiner * h;
    if noise_std > 0.0 {
        let mut r = rng(seed, NOISE_STREAM);
        for v in y.iter_mut() {
            let re: f64 = r.sample(StandardNormal);
            let im: f64 = r.sample(StandardNormal);
            *v += Complex64::new(re, im) * noise_std;
        }
    }
    Ok(Observation { y, provenance, eta: 0.0 })
}

fn check_atom(a: &LiftedAtom) -> Result<()> {
    if !(0.0..=TAU).contains(&a.u) {
        return Err(Error::InverseRangeOutOfDomain(a.u));
    }
    check_angle(a.theta)
}

/// Lifted matrix `X = sum_l c_l atom(u_l, theta_l)`.
pub fn lifted_matrix(n_u: usize, n_b: usize, atoms: &[LiftedAtom]) -> Result<DMatrix<Complex64>> {
    let mut x = DMatrix::zeros(n_u, n_b);
    for a in atoms {
        check_atom(a)?;
        x += atom((n_u - 1) / 2, (n_b - 1) / 2, a.u, a.theta) * a.gain;
    }
    Ok(x)
}

/// `y[m] = <Psi_m, sum_l c_l atom(u_l, theta_l)>` with no model mismatch.
pub fn observe_lifted(ens: &MeasurementEnsemble, atoms: &[LiftedAtom]) -> Result<Observation> {
    let x = lifted_matrix(ens.n_u, ens.n_b, atoms)?;
    Ok(Observation { y: ens.apply(&x), provenance: Provenance::SyntheticLifted, eta: 0.0 })
}

/// Converts physical paths to lifted atoms through the inverse-range map.
pub fn paths_to_atoms(map: &InverseRangeMap, paths: &[PathParam]) -> Result<Vec<LiftedAtom>> {
    paths
        .iter()
        .map(|p| {
            check_angle(p.angle)?;
            Ok(LiftedAtom { u: map.u_of_r(p.range)?, theta: p.angle, gain: p.gain })
        })
        .collect()
}

/// Model-mismatch norm `|B h_model - y_lifted|` for known paths.
pub fn model_mismatch(ens: &MeasurementEnsemble, cfg: &ArrayConfig, paths: &[PathParam], model: SignalModel) -> Result<f64> {
    let map = InverseRangeMap::from_config(cfg)?;
    let ideal = observe_lifted(ens, &paths_to_atoms(&map, paths)?)?.y;
    let actual = match model {
        SignalModel::Lifted => return Ok(0.0),
        SignalModel::Exact => &ens.combiner * synthesize_channel(cfg, paths, SteeringModel::Exact)?,
        SignalModel::Fresnel => &ens.combiner * synthesize_channel(cfg, paths, SteeringModel::Fresnel)?,
    };
    Ok(cvec_norm(&(actual - ideal)))
}

/// Feasibility radius `safety (|B h_model - y_lifted| + sigma sqrt(2M))`.
pub fn estimate_eta(
    ens: &MeasurementEnsemble,
    cfg: &ArrayConfig,
    paths: &[PathParam],
    model: SignalModel,
    noise_std: f64,
    safety: f64,
) -> Result<f64> {
    if paths.is_empty() {
        return Err(Error::EmptyPaths);
    }
    let mismatch = model_mismatch(ens, cfg, paths, model)?;
    let noise = noise_std * libm::sqrt(2.0 * ens.n_meas() as f64);
    Ok(safety * (mismatch + noise))
}
