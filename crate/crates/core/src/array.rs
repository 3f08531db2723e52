//! Uniform linear array geometry and spherical-wave steering.

use core::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::{Error, Result, SPEED_OF_LIGHT};

/// Complex array response, one entry per antenna.
pub type ChannelVector = DVector<Complex64>;

/// Array geometry plus every truncation order used by the lifting.
///
/// Derived quantities (wavelength, `alpha_n`, `N_u`, `N_b`, ...) are methods so
/// they are always recomputed from the same fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub n_antennas: usize,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Element spacing in meters.
    pub spacing: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Angular Jacobi-Anger order.
    pub i1: usize,
    /// Curvature order.
    pub i2: usize,
    /// Global inverse-range Fourier order.
    pub k_u: usize,
    /// Per-panel Fourier order.
    pub k_loc: usize,
    pub n_panels: usize,
    pub ridge_mu: f64,
}

impl Default for ArrayConfig {
    /// 64 antennas at 100 GHz with half-wavelength spacing over [0.1, 6] m.
    fn default() -> Self {
        let carrier_freq = 100e9;
        ArrayConfig {
            n_antennas: 64,
            carrier_freq,
            spacing: SPEED_OF_LIGHT / carrier_freq / 2.0,
            r_min: 0.1,
            r_max: 6.0,
            i1: 20,
            i2: 1,
            k_u: 2,
            k_loc: 2,
            n_panels: 4,
            ridge_mu: 1e-8,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_antennas < 2 {
            return bad("n_antennas must be at least 2");
        }
        if !(self.carrier_freq.is_finite() && self.carrier_freq > 0.0) {
            return bad("carrier frequency must be positive");
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return bad("spacing must be positive");
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return bad("need 0 < r_min < r_max");
        }
        if self.n_panels == 0 {
            return bad("n_panels must be positive");
        }
        if !(self.ridge_mu.is_finite() && self.ridge_mu >= 0.0) {
            return bad("ridge_mu must be non-negative");
        }
        if self.i1 > crate::bessel::TABLE_MAX_ORDER || self.i2 > crate::bessel::MAX_ORDER as usize {
            return bad("truncation order too large");
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Curvature coefficient `k (n d)^2 / 4`.
    pub fn alpha(&self, n: usize) -> f64 {
        let nd = n as f64 * self.spacing;
        self.wavenumber() * nd * nd / 4.0
    }

    pub fn i_off(&self) -> usize {
        self.i1 + 2 * self.i2
    }

    pub fn n_u(&self) -> usize {
        2 * self.k_u + 1
    }

    pub fn n_b(&self) -> usize {
        2 * self.i_off() + 1
    }

    /// Length of the vectorized lifted matrix, `N_u * N_b`.
    pub fn lifted_len(&self) -> usize {
        self.n_u() * self.n_b()
    }

    pub fn aperture(&self) -> f64 {
        (self.n_antennas - 1) as f64 * self.spacing
    }

    pub fn check_range(&self, r: f64) -> Result<()> {
        if r >= self.r_min && r <= self.r_max {
            Ok(())
        } else {
            Err(Error::RangeOutOfInterval { r, min: self.r_min, max: self.r_max })
        }
    }

    pub fn check_path(&self, p: &PathParam) -> Result<()> {
        self.check_range(p.range)?;
        check_angle(p.angle)
    }
}

pub(crate) fn check_angle(theta: f64) -> Result<()> {
    if (0.0..PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::AngleOutOfDomain(theta))
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParam {
    /// Meters.
    pub range: f64,
    /// Radians in [0, pi).
    pub angle: f64,
    pub gain: Complex64,
}

impl PathParam {
    pub fn new(range: f64, angle: f64, gain: Complex64) -> Self {
        PathParam { range, angle, gain }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SteeringModel {
    Exact,
    Fresnel,
}

fn check_steering_args(r: f64, theta: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRange(r));
    }
    check_angle(theta)
}

/// Exact spherical-wave response `exp(-j k (r_n - r))`.
pub fn exact_steering(cfg: &ArrayConfig, r: f64, theta: f64) -> Result<ChannelVector> {
    check_steering_args(r, theta)?;
    let k = cfg.wavenumber();
    let ct = libm::cos(theta);
    Ok(DVector::from_fn(cfg.n_antennas, |n, _| {
        let nd = n as f64 * cfg.spacing;
        let rn = libm::sqrt(r * r + nd * nd - 2.0 * r * nd * ct);
        Complex64::cis(-k * (rn - r))
    }))
}

/// Second-order Fresnel response.
pub fn fresnel_steering(cfg: &ArrayConfig, r: f64, theta: f64) -> Result<ChannelVector> {
    check_steering_args(r, theta)?;
    let k = cfg.wavenumber();
    let (st, ct) = (libm::sin(theta), libm::cos(theta));
    Ok(DVector::from_fn(cfg.n_antennas, |n, _| {
        let nd = n as f64 * cfg.spacing;
        Complex64::cis(k * nd * ct - k * nd * nd * st * st / (2.0 * r))
    }))
}

pub fn steering(cfg: &ArrayConfig, r: f64, theta: f64, model: SteeringModel) -> Result<ChannelVector> {
    match model {
        SteeringModel::Exact => exact_steering(cfg, r, theta),
        SteeringModel::Fresnel => fresnel_steering(cfg, r, theta),
    }
}

/// `h = sum_l c_l a(r_l, theta_l)`.
pub fn synthesize_channel(cfg: &ArrayConfig, paths: &[PathParam], model: SteeringModel) -> Result<ChannelVector> {
    if paths.is_empty() {
        return Err(Error::EmptyPaths);
    }
    let mut h = DVector::zeros(cfg.n_antennas);
    for p in paths {
        cfg.check_path(p)?;
        h += steering(cfg, p.range, p.angle, model)? * p.gain;
    }
    Ok(h)
}

/// Largest per-entry phase gap between the Fresnel and exact responses.
pub fn fresnel_phase_error(cfg: &ArrayConfig, r: f64, theta: f64) -> Result<f64> {
    let a = exact_steering(cfg, r, theta)?;
    let b = fresnel_steering(cfg, r, theta)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).arg().abs()).fold(0.0, f64::max))
}
