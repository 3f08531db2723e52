//! Truncated Jacobi-Anger expansion of the Fresnel response.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::array::{check_angle, fresnel_steering, ArrayConfig};
use crate::bessel::{bessel_j, bessel_table};
use crate::{Error, Result};

/// `j^m`, by table lookup.
pub fn j_pow(m: i64) -> Complex64 {
    match m.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `F_{n,q}(x) = exp(-j alpha_n x) J_q(alpha_n x)`, without domain checks.
pub(crate) fn curvature_coeff(alpha: f64, q: i64, x: f64) -> Complex64 {
    let ax = alpha * x;
    let j = bessel_j(q, ax).expect("curvature argument within bessel bounds");
    Complex64::cis(-ax) * j
}

/// `F_{n,q}(x)` for `|q| <= I_2`, `x` in `[1/r_max, 1/r_min]`.
pub fn fresnel_coeff(cfg: &ArrayConfig, n: usize, q: i64, x: f64) -> Result<Complex64> {
    if n >= cfg.n_antennas {
        return Err(Error::IndexOutOfRange { what: "antenna", index: n as i64, limit: cfg.n_antennas as i64 });
    }
    if q.unsigned_abs() as usize > cfg.i2 {
        return Err(Error::IndexOutOfRange { what: "curvature order", index: q, limit: cfg.i2 as i64 });
    }
    let (lo, hi) = (1.0 / cfg.r_max, 1.0 / cfg.r_min);
    if !(x >= lo && x <= hi) {
        return Err(Error::InvalidArgument(alloc::format!("inverse range {x} outside [{lo}, {hi}]")));
    }
    Ok(curvature_coeff(cfg.alpha(n), q, x))
}

/// `J_l(k n d)` for every antenna and `|l| <= I_1`.
#[derive(Debug, Clone)]
pub struct HarmonicExpansion {
    cfg: ArrayConfig,
    table: Vec<f64>,
}

impl HarmonicExpansion {
    pub fn new(cfg: &ArrayConfig) -> Result<Self> {
        cfg.validate()?;
        let i1 = cfg.i1;
        let width = 2 * i1 + 1;
        let mut table = Vec::with_capacity(cfg.n_antennas * width);
        let kd = cfg.wavenumber() * cfg.spacing;
        for n in 0..cfg.n_antennas {
            let pos = bessel_table(i1, kd * n as f64)?;
            for l in -(i1 as i64)..=(i1 as i64) {
                let v = pos[l.unsigned_abs() as usize];
                table.push(if l < 0 && l % 2 != 0 { -v } else { v });
            }
        }
        Ok(HarmonicExpansion { cfg: cfg.clone(), table })
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.cfg
    }

    /// `J_l(k n d)`; `l` must satisfy `|l| <= I_1`.
    pub fn bessel(&self, n: usize, l: i64) -> f64 {
        let i1 = self.cfg.i1 as i64;
        debug_assert!(l.abs() <= i1);
        self.table[n * (2 * self.cfg.i1 + 1) + (l + i1) as usize]
    }

    /// Truncated double sum for antenna `n` at `(r, theta)`.
    pub fn eval(&self, r: f64, theta: f64, n: usize) -> Result<Complex64> {
        self.cfg.check_range(r)?;
        check_angle(theta)?;
        if n >= self.cfg.n_antennas {
            return Err(Error::IndexOutOfRange { what: "antenna", index: n as i64, limit: self.cfg.n_antennas as i64 });
        }
        let alpha = self.cfg.alpha(n);
        let (i1, i2) = (self.cfg.i1 as i64, self.cfg.i2 as i64);
        let mut acc = Complex64::new(0.0, 0.0);
        for q in -i2..=i2 {
            let f = curvature_coeff(alpha, q, 1.0 / r);
            for l in -i1..=i1 {
                let jl = self.bessel(n, l);
                if jl == 0.0 {
                    continue;
                }
                acc += j_pow(l + q) * jl * f * Complex64::cis((l + 2 * q) as f64 * theta);
            }
        }
        Ok(acc)
    }

    /// Per-antenna truncation error `|expansion - fresnel|` at one point.
    pub fn truncation_profile(&self, r: f64, theta: f64) -> Result<Vec<f64>> {
        let f = fresnel_steering(&self.cfg, r, theta)?;
        (0..self.cfg.n_antennas).map(|n| Ok((self.eval(r, theta, n)? - f[n]).norm())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::fresnel_steering;

    #[test]
    fn unit_roots_cycle() {
        assert_eq!(j_pow(0), Complex64::new(1.0, 0.0));
        assert_eq!(j_pow(5), Complex64::new(0.0, 1.0));
        assert_eq!(j_pow(-1), Complex64::new(0.0, -1.0));
        assert_eq!(j_pow(-6), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn table_symmetry_is_exact() {
        let he = HarmonicExpansion::new(&ArrayConfig::default()).unwrap();
        for n in 0..64 {
            for l in 1..=20i64 {
                let s = if l % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(he.bessel(n, -l), s * he.bessel(n, l));
            }
        }
    }

    #[test]
    fn antenna_zero_is_identity() {
        let cfg = ArrayConfig::default();
        let he = HarmonicExpansion::new(&cfg).unwrap();
        assert_eq!(fresnel_coeff(&cfg, 0, 0, 2.0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(fresnel_coeff(&cfg, 0, 1, 2.0).unwrap().norm(), 0.0);
        for &(r, t) in &[(0.2, 0.3), (4.0, 2.9)] {
            assert!((he.eval(r, t, 0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn coefficient_domain_checks() {
        let cfg = ArrayConfig::default();
        assert!(fresnel_coeff(&cfg, 64, 0, 1.0).is_err());
        assert!(fresnel_coeff(&cfg, 3, 2, 1.0).is_err());
        assert!(fresnel_coeff(&cfg, 3, 0, 0.1).is_err());
        assert!(fresnel_coeff(&cfg, 3, 0, 10.5).is_err());
    }

    #[test]
    fn converges_with_generous_orders() {
        let base = ArrayConfig::default();
        for &(r, t) in &[(0.5, 0.9), (3.4172, 0.8749), (0.8560, 1.9866)] {
            let f = fresnel_steering(&base, r, t).unwrap();
            for n in [1usize, 17, 40, 63] {
                let kx = base.wavenumber() * base.spacing * n as f64;
                let cfg = ArrayConfig { i1: libm::ceil(kx) as usize + 60, i2: 25, ..base.clone() };
                let he = HarmonicExpansion::new(&cfg).unwrap();
                let e = he.eval(r, t, n).unwrap();
                assert!((e - f[n]).norm() < 1e-8, "n={n} r={r} err={}", (e - f[n]).norm());
            }
        }
    }

    #[test]
    fn truncation_error_shrinks_with_order() {
        let base = ArrayConfig::default();
        let wide = ArrayConfig { i1: base.i1 + 10, i2: base.i2 + 2, ..base.clone() };
        let (a, b) = (HarmonicExpansion::new(&base).unwrap(), HarmonicExpansion::new(&wide).unwrap());
        for &(r, t) in &[(0.3, 0.4), (2.0, 1.5), (5.5, 2.8)] {
            let (pa, pb) = (a.truncation_profile(r, t).unwrap(), b.truncation_profile(r, t).unwrap());
            // antennas whose Bessel support k n d lies inside the angular order
            let kd = base.wavenumber() * base.spacing;
            for n in (0..base.n_antennas).filter(|&n| kd * n as f64 <= base.i1 as f64) {
                assert!(pb[n] <= pa[n] + 1e-12, "n={n}");
            }
        }
    }
}
