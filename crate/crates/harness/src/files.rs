//! On-disk artifacts. Complex numbers are stored as `[re, im]` pairs and
//! every file carries the hash of the config that produced it.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use nearfield_core::localization::{Peak, SupportMetrics};
use nearfield_core::{Complex64, PathEstimate, PathParam, Provenance, SdpSolution};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{AppError, AppResult};

pub type Pair = [f64; 2];

pub fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub fn unpair(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::SyntheticExact => "synthetic_exact",
        Provenance::SyntheticFresnel => "synthetic_fresnel",
        Provenance::SyntheticLifted => "synthetic_lifted",
        Provenance::External => "external",
    }
}

pub fn parse_provenance(s: &str) -> AppResult<Provenance> {
    Ok(match s {
        "synthetic_exact" => Provenance::SyntheticExact,
        "synthetic_fresnel" => Provenance::SyntheticFresnel,
        "synthetic_lifted" => Provenance::SyntheticLifted,
        "external" => Provenance::External,
        other => return Err(AppError::Config(format!("unknown provenance {other:?}"))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub range_m: f64,
    pub angle_rad: f64,
    pub u_rad: f64,
    pub gain: Pair,
}

impl PathRecord {
    pub fn to_path(&self) -> PathParam {
        PathParam::new(self.range_m, self.angle_rad, unpair(self.gain))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub config_hash: String,
    pub paths: Vec<PathRecord>,
}

impl ScenarioFile {
    pub fn paths(&self) -> Vec<PathParam> {
        self.paths.iter().map(PathRecord::to_path).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFile {
    pub config_hash: String,
    pub provenance: String,
    pub n_meas: usize,
    pub n_antennas: usize,
    pub combiner_seed: u64,
    pub noise_std: f64,
    pub noise_seed: u64,
    pub eta: f64,
    pub y: Vec<Pair>,
    /// Row-major `n_meas x n_antennas`.
    pub combiner: Vec<Pair>,
}

impl ObservationFile {
    pub fn y(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.y.len(), self.y.iter().map(|&p| unpair(p)))
    }

    pub fn combiner(&self) -> AppResult<DMatrix<Complex64>> {
        if self.combiner.len() != self.n_meas * self.n_antennas || self.y.len() != self.n_meas {
            return Err(AppError::Mismatch("observation dimensions are inconsistent".into()));
        }
        Ok(DMatrix::from_row_iterator(self.n_meas, self.n_antennas, self.combiner.iter().map(|&p| unpair(p))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub u_rad: f64,
    pub angle_rad: f64,
    pub range_m: f64,
    pub gain: Pair,
    pub certificate: f64,
}

impl From<&PathEstimate> for EstimateRecord {
    fn from(e: &PathEstimate) -> Self {
        EstimateRecord { u_rad: e.u, angle_rad: e.theta, range_m: e.range, gain: pair(e.gain), certificate: e.certificate }
    }
}

impl EstimateRecord {
    pub fn to_estimate(&self) -> PathEstimate {
        PathEstimate {
            u: self.u_rad,
            theta: self.angle_rad,
            range: self.range_m,
            gain: unpair(self.gain),
            certificate: self.certificate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub status: String,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub objective: f64,
    pub residual_norm: f64,
    pub certificate_peak: f64,
    pub gap_history: Vec<f64>,
}

impl From<&SdpSolution> for SolverRecord {
    fn from(s: &SdpSolution) -> Self {
        SolverRecord {
            status: format!("{:?}", s.status).to_lowercase(),
            iterations: s.iterations,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            gap: s.gap,
            objective: s.objective,
            residual_norm: s.residual_norm,
            certificate_peak: s.certificate_peak,
            gap_history: s.gap_history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathErrorRecord {
    pub truth: usize,
    pub estimate: usize,
    pub d_angle_rad: f64,
    pub d_range_m: f64,
    pub d_u_rad: f64,
    pub d_gain: Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub matches: Vec<PathErrorRecord>,
    pub misses: usize,
    pub false_alarms: usize,
    pub nmse: f64,
}

impl From<&SupportMetrics> for MetricsRecord {
    fn from(m: &SupportMetrics) -> Self {
        MetricsRecord {
            matches: m
                .matches
                .iter()
                .map(|e| PathErrorRecord {
                    truth: e.truth,
                    estimate: e.estimate,
                    d_angle_rad: e.d_theta,
                    d_range_m: e.d_range,
                    d_u_rad: e.d_u,
                    d_gain: pair(e.d_gain),
                })
                .collect(),
            misses: m.misses,
            false_alarms: m.false_alarms,
            nmse: m.nmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub basis_hash: String,
    pub timings: Vec<StageTiming>,
    pub eta: f64,
    pub solver: SolverRecord,
    pub estimates: Vec<EstimateRecord>,
    pub metrics: Option<MetricsRecord>,
    pub files: Vec<String>,
}

impl RunReport {
    /// The report with timings cleared, for run-to-run comparison.
    pub fn without_timings(&self) -> RunReport {
        let mut r = self.clone();
        for t in &mut r.timings {
            t.seconds = 0.0;
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub u_rad: f64,
    pub angle_rad: f64,
    pub range_m: f64,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeaksFile {
    pub config_hash: String,
    pub sup_norm: f64,
    pub peaks: Vec<PeakRecord>,
}

impl PeakRecord {
    pub fn new(p: &Peak, range_m: f64) -> Self {
        PeakRecord { u_rad: p.u, angle_rad: p.theta, range_m, value: p.value, grad_norm: p.grad_norm }
    }
}

/// Dual vector saved next to the report so the certificate can be redrawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFile {
    pub config_hash: String,
    pub q: Vec<Pair>,
}

impl DualFile {
    pub fn q(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.q.len(), self.q.iter().map(|&p| unpair(p)))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| AppError::Io { path: dir.into(), source })?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|source| AppError::Json { path: path.into(), source })?;
    fs::write(path, text + "\n").map_err(|source| AppError::Io { path: path.into(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|source| AppError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| AppError::Json { path: path.into(), source })
}

pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> AppResult<()> {
    let io = |source| AppError::Io { path: path.into(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| AppError::Io { path: dir.into(), source })?;
    }
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    writeln!(f, "{header}").map_err(io)?;
    for r in rows {
        writeln!(f, "{r}").map_err(io)?;
    }
    f.flush().map_err(io)
}

pub fn metrics_rows(m: &MetricsRecord) -> Vec<String> {
    m.matches
        .iter()
        .map(|e| {
            format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                e.truth, e.estimate, e.d_angle_rad, e.d_range_m, e.d_u_rad, e.d_gain[0], e.d_gain[1]
            )
        })
        .collect()
}

pub const METRICS_HEADER: &str = "truth,estimate,d_angle_rad,d_range_m,d_u_rad,d_gain_re,d_gain_im";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_round_trip() {
        let obs = ObservationFile {
            config_hash: "ab".into(),
            provenance: "synthetic_exact".into(),
            n_meas: 2,
            n_antennas: 3,
            combiner_seed: 1,
            noise_std: 0.0,
            noise_seed: 2,
            eta: 0.5,
            y: vec![[1.0, 2.0], [3.0, -4.0]],
            combiner: (0..6).map(|i| [i as f64, -(i as f64)]).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.json");
        write_json(&p, &obs).unwrap();
        let back: ObservationFile = read_json(&p).unwrap();
        assert_eq!(back, obs);
        let b = back.combiner().unwrap();
        assert_eq!(b[(1, 0)], Complex64::new(3.0, -3.0));
        assert_eq!(back.y()[1], Complex64::new(3.0, -4.0));
        for p in [Provenance::SyntheticExact, Provenance::SyntheticFresnel, Provenance::SyntheticLifted, Provenance::External] {
            assert_eq!(parse_provenance(provenance_name(p)).unwrap(), p);
        }
    }

    #[test]
    fn inconsistent_dimensions_rejected() {
        let obs = ObservationFile {
            config_hash: String::new(),
            provenance: "external".into(),
            n_meas: 2,
            n_antennas: 3,
            combiner_seed: 0,
            noise_std: 0.0,
            noise_seed: 0,
            eta: 0.0,
            y: vec![[0.0, 0.0]; 2],
            combiner: vec![[0.0, 0.0]; 5],
        };
        assert!(obs.combiner().is_err());
    }
}
