//! Experiment configuration. Every physical field carries its unit in the
//! name; nothing is inferred.

use std::path::Path;

use nearfield_core::localization::PeakOptions;
use nearfield_core::measurement::SignalModel;
use nearfield_core::{ArrayConfig, SolverOptions, SPEED_OF_LIGHT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArraySection,
    pub scenario: ScenarioSection,
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub localization: LocalizationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub n_antennas: usize,
    pub carrier_freq_hz: f64,
    /// Defaults to half a wavelength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub i1: usize,
    pub i2: usize,
    pub k_u: usize,
    pub k_loc: usize,
    pub n_panels: usize,
    #[serde(default = "default_ridge")]
    pub ridge_mu: f64,
}

fn default_ridge() -> f64 {
    ArrayConfig::default().ridge_mu
}

impl ArraySection {
    pub fn to_core(&self) -> ArrayConfig {
        ArrayConfig {
            n_antennas: self.n_antennas,
            carrier_freq: self.carrier_freq_hz,
            spacing: self.spacing_m.unwrap_or(SPEED_OF_LIGHT / self.carrier_freq_hz / 2.0),
            r_min: self.r_min_m,
            r_max: self.r_max_m,
            i1: self.i1,
            i2: self.i2,
            k_u: self.k_u,
            k_loc: self.k_loc,
            n_panels: self.n_panels,
            ridge_mu: self.ridge_mu,
        }
    }
}

impl Default for ArraySection {
    fn default() -> Self {
        let c = ArrayConfig::default();
        ArraySection {
            n_antennas: c.n_antennas,
            carrier_freq_hz: c.carrier_freq,
            spacing_m: None,
            r_min_m: c.r_min,
            r_max_m: c.r_max,
            i1: c.i1,
            i2: c.i2,
            k_u: c.k_u,
            k_loc: c.k_loc,
            n_panels: c.n_panels,
            ridge_mu: c.ridge_mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub range_m: f64,
    pub angle_rad: f64,
    pub gain_re: f64,
    pub gain_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSection {
    Paths {
        paths: Vec<PathSpec>,
    },
    /// Ranges uniform over the configured interval, angles uniform over
    /// `[0, pi)`, redrawn until every pair is separated in `(u, theta)`.
    Random {
        count: usize,
        min_sep_u_rad: f64,
        min_sep_theta_rad: f64,
        gain_mag_min: f64,
        gain_mag_max: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Exact,
    Fresnel,
    Lifted,
}

impl ModelKind {
    pub fn to_core(self) -> SignalModel {
        match self {
            ModelKind::Exact => SignalModel::Exact,
            ModelKind::Fresnel => SignalModel::Fresnel,
            ModelKind::Lifted => SignalModel::Lifted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSpec {
    /// `safety * (model mismatch + sigma sqrt(2M))` from the known scenario.
    Auto { safety: f64 },
    Fixed { value: f64 },
    /// Fraction of `||y||`.
    Relative { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub n_meas: usize,
    pub combiner_seed: u64,
    pub noise_std: f64,
    pub noise_seed: u64,
    pub model: ModelKind,
    pub eta: EtaSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub tol_psd: f64,
    pub max_iter: usize,
    pub tol_cert: f64,
    pub cert_grid_u: usize,
    pub cert_grid_theta: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverSection {
            eps_abs: o.eps_abs,
            eps_rel: o.eps_rel,
            tol_psd: o.tol_psd,
            max_iter: o.max_iter,
            tol_cert: o.tol_cert,
            cert_grid_u: o.cert_grid.0,
            cert_grid_theta: o.cert_grid.1,
        }
    }
}

impl SolverSection {
    pub fn to_core(&self) -> SolverOptions {
        SolverOptions {
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            tol_psd: self.tol_psd,
            max_iter: self.max_iter,
            tol_cert: self.tol_cert,
            cert_grid: (self.cert_grid_u, self.cert_grid_theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationSection {
    pub threshold: f64,
    pub grid_u: usize,
    pub grid_theta: usize,
}

impl Default for LocalizationSection {
    fn default() -> Self {
        let p = PeakOptions::default();
        LocalizationSection { threshold: p.threshold, grid_u: p.grid.0, grid_theta: p.grid.1 }
    }
}

impl LocalizationSection {
    pub fn to_core(&self) -> PeakOptions {
        PeakOptions { threshold: self.threshold, grid: (self.grid_u, self.grid_theta), ..PeakOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

fn sha_hex(tag: &str, bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

impl ExperimentConfig {
    /// The experiment from the reference two-path scene.
    pub fn reference() -> Self {
        ExperimentConfig {
            array: ArraySection::default(),
            scenario: ScenarioSection::Paths {
                paths: vec![
                    PathSpec { range_m: 3.4172, angle_rad: 0.8749, gain_re: 1.2968, gain_im: 0.6096 },
                    PathSpec { range_m: 0.8560, angle_rad: 1.9866, gain_re: 0.3802, gain_im: -1.5972 },
                ],
            },
            measurement: MeasurementSection {
                n_meas: 20,
                combiner_seed: 1,
                noise_std: 0.0,
                noise_seed: 2,
                model: ModelKind::Exact,
                eta: EtaSpec::Auto { safety: nearfield_core::measurement::ETA_SAFETY },
            },
            solver: SolverSection::default(),
            localization: LocalizationSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| AppError::Io { path: path.into(), source })?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 over the canonical serialization.
    pub fn hash(&self) -> String {
        sha_hex("experiment/1\n", &serde_json::to_vec(self).expect("config serializes"))
    }

    /// Hash of the fields that determine the observation data. Solver and
    /// localization settings may change between simulate and recover.
    pub fn data_hash(&self) -> String {
        let v = serde_json::json!([self.array, self.scenario, self.measurement]);
        sha_hex("data/1\n", &serde_json::to_vec(&v).expect("config serializes"))
    }

    /// Hash of the fields that determine the lifted basis.
    pub fn basis_hash(&self) -> String {
        sha_hex("basis/1\n", &serde_json::to_vec(&self.array).expect("config serializes"))
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: String| Err(AppError::Config(m));
        self.array.to_core().validate().map_err(|e| AppError::Config(e.to_string()))?;
        match &self.scenario {
            ScenarioSection::Paths { paths } => {
                if paths.is_empty() {
                    return bad("scenario has no paths".into());
                }
                let cfg = self.array.to_core();
                for p in paths {
                    cfg.check_range(p.range_m).map_err(|e| AppError::Config(e.to_string()))?;
                    if !(0.0..std::f64::consts::PI).contains(&p.angle_rad) {
                        return bad(format!("path angle {} rad outside [0, pi)", p.angle_rad));
                    }
                }
            }
            ScenarioSection::Random { count, min_sep_u_rad, min_sep_theta_rad, gain_mag_min, gain_mag_max, .. } => {
                if *count == 0 {
                    return bad("random scenario needs at least one path".into());
                }
                if !(*min_sep_u_rad >= 0.0 && *min_sep_theta_rad >= 0.0) {
                    return bad("separations must be non-negative".into());
                }
                if !(*gain_mag_min > 0.0 && gain_mag_max >= gain_mag_min) {
                    return bad("gain magnitude interval must be positive and ordered".into());
                }
            }
        }
        let m = &self.measurement;
        if m.n_meas == 0 {
            return bad("n_meas must be positive".into());
        }
        if !(m.noise_std >= 0.0) {
            return bad("noise_std must be non-negative".into());
        }
        match m.eta {
            EtaSpec::Auto { safety } if !(safety > 0.0) => return bad("eta safety must be positive".into()),
            EtaSpec::Fixed { value } if !(value >= 0.0) => return bad("fixed eta must be non-negative".into()),
            EtaSpec::Relative { factor } if !(factor >= 0.0) => return bad("relative eta must be non-negative".into()),
            _ => {}
        }
        let s = &self.solver;
        if !(s.eps_abs > 0.0 && s.eps_rel > 0.0 && s.tol_psd >= 0.0 && s.tol_cert >= 0.0) || s.max_iter == 0 {
            return bad("solver tolerances must be positive".into());
        }
        let l = &self.localization;
        if !(l.threshold > 0.0 && l.threshold < 1.0) {
            return bad(format!("threshold {} outside (0, 1)", l.threshold));
        }
        let cfg = self.array.to_core();
        if l.grid_u < 4 * cfg.k_u.max(1) || l.grid_theta < 4 * cfg.i_off().max(1) {
            return bad("localization grid must oversample the certificate degrees at least 4x".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_through_json() {
        let cfg = ExperimentConfig::reference();
        cfg.validate().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.array.to_core(), ArrayConfig::default());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::reference();
        let mut b = a.clone();
        b.measurement.combiner_seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.basis_hash(), b.basis_hash());
        assert_ne!(a.data_hash(), b.data_hash());
        let mut c = a.clone();
        c.localization.threshold = 0.95;
        assert_eq!(a.data_hash(), c.data_hash());
        assert_ne!(a.hash(), c.hash());
        b.array.i1 = 21;
        assert_ne!(a.basis_hash(), b.basis_hash());
    }

    #[test]
    fn rejects_empty_scene_and_unknown_fields() {
        let mut cfg = ExperimentConfig::reference();
        cfg.scenario = ScenarioSection::Paths { paths: vec![] };
        assert!(matches!(cfg.validate(), Err(AppError::Config(_))));
        let text = ExperimentConfig::reference().to_json().replace("\"r_min_m\"", "\"r_min\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&text).is_err());
    }

    #[test]
    fn shipped_reference_config_matches() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/reference.json");
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg, ExperimentConfig::reference());
    }

    #[test]
    fn rejects_coarse_grid() {
        let mut cfg = ExperimentConfig::reference();
        cfg.localization.grid_theta = 40;
        assert!(cfg.validate().is_err());
    }
}
