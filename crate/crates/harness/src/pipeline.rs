//! Stage orchestration behind the subcommands.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use nearfield_core::array::synthesize_channel;
use nearfield_core::basis::build_basis;
use nearfield_core::localization::{localize, match_support, DualPolynomial, Peak};
use nearfield_core::measurement::{build_sensing, estimate_eta, observe, observe_lifted, paths_to_atoms};
use nearfield_core::sdp::{self, SdpProblem};
use nearfield_core::{
    ArrayConfig, Complex64, InverseRangeMap, LiftedBasis, MeasurementEnsemble, PathEstimate, PathParam, SdpSolution,
    SignalModel, SteeringModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::cache;
use crate::config::{EtaSpec, ExperimentConfig, ModelKind, ScenarioSection};
use crate::error::{AppError, AppResult};
use crate::files::{
    pair, parse_provenance, provenance_name, DualFile, EstimateRecord, MetricsRecord, ObservationFile, PathRecord,
    PeakRecord, PeaksFile, RunReport, ScenarioFile, SolverRecord, StageTiming,
};

/// Attempts per path before a random scenario is declared unsatisfiable.
const MAX_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisSource {
    Cache,
    Fitted,
    /// The cache file existed but was rejected for the given reason.
    Refitted(String),
}

pub fn inverse_range_map(cfg: &ArrayConfig) -> AppResult<InverseRangeMap> {
    InverseRangeMap::from_config(cfg).map_err(AppError::stage("config"))
}

/// Loads the basis from `cache_dir` or fits and stores it.
pub fn load_or_fit_basis(cfg: &ExperimentConfig, cache_dir: &Path) -> AppResult<(LiftedBasis, BasisSource)> {
    let array = cfg.array.to_core();
    let hash = cfg.basis_hash();
    let path = cache::cache_path(cache_dir, &hash);
    let mut source = BasisSource::Fitted;
    if path.exists() {
        match cache::load(&array, &hash, &path) {
            Ok(b) => return Ok((b, BasisSource::Cache)),
            Err(AppError::Cache { reason, .. }) => source = BasisSource::Refitted(reason),
            Err(e) => return Err(e),
        }
    }
    let basis = build_basis(&array).map_err(AppError::stage("fit-basis"))?;
    cache::store(&array, &hash, &basis, &path)?;
    Ok((basis, source))
}

pub const FIT_HEADER: &str = "antenna,q,max_rel_error";

pub fn fit_quality_rows(basis: &LiftedBasis) -> Vec<String> {
    let i2 = basis.i2() as i64;
    (0..basis.n_antennas())
        .flat_map(|n| (-i2..=i2).map(move |q| (n, q)))
        .map(|(n, q)| format!("{n},{q},{:.6e}", basis.fit_error(n, q)))
        .collect()
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % TAU;
    d.min(TAU - d)
}

/// Physical paths of the configured scene.
pub fn scenario_paths(cfg: &ExperimentConfig) -> AppResult<Vec<PathParam>> {
    let array = cfg.array.to_core();
    match &cfg.scenario {
        ScenarioSection::Paths { paths } => {
            Ok(paths.iter().map(|p| PathParam::new(p.range_m, p.angle_rad, Complex64::new(p.gain_re, p.gain_im))).collect())
        }
        ScenarioSection::Random { count, min_sep_u_rad, min_sep_theta_rad, gain_mag_min, gain_mag_max, seed } => {
            let map = inverse_range_map(&array)?;
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let mut out: Vec<(PathParam, f64)> = Vec::with_capacity(*count);
            while out.len() < *count {
                let mut placed = false;
                for _ in 0..MAX_DRAWS {
                    let r = array.r_min + (array.r_max - array.r_min) * rng.random::<f64>();
                    let theta = PI * rng.random::<f64>();
                    let mag = gain_mag_min + (gain_mag_max - gain_mag_min) * rng.random::<f64>();
                    let phase = TAU * rng.random::<f64>();
                    let u = map.u_of_r(r).map_err(AppError::stage("simulate"))?;
                    let clear = out.iter().all(|(p, pu)| {
                        circ_dist(u, *pu) >= *min_sep_u_rad && (theta - p.angle).abs() >= *min_sep_theta_rad
                    });
                    if clear {
                        out.push((PathParam::new(r, theta, Complex64::from_polar(mag, phase)), u));
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    return Err(AppError::Config(format!("could not place {count} paths with the requested separation")));
                }
            }
            Ok(out.into_iter().map(|(p, _)| p).collect())
        }
    }
}

fn steering_model(m: ModelKind) -> SteeringModel {
    match m {
        ModelKind::Fresnel => SteeringModel::Fresnel,
        ModelKind::Exact | ModelKind::Lifted => SteeringModel::Exact,
    }
}

/// Draws the combiner, synthesizes `y` and picks `eta`.
pub fn simulate(cfg: &ExperimentConfig, basis: &LiftedBasis) -> AppResult<(ScenarioFile, ObservationFile)> {
    cfg.validate()?;
    let array = cfg.array.to_core();
    let map = inverse_range_map(&array)?;
    let paths = scenario_paths(cfg)?;
    let m = &cfg.measurement;
    let st = AppError::stage("simulate");
    let ens = MeasurementEnsemble::generate(basis, m.n_meas, m.combiner_seed, m.noise_std).map_err(st)?;
    let model = m.model.to_core();
    let obs = match model {
        SignalModel::Lifted => {
            let mut obs = observe_lifted(&ens, &paths_to_atoms(&map, &paths).map_err(st)?).map_err(st)?;
            if m.noise_std > 0.0 {
                let zero = DVector::zeros(array.n_antennas);
                obs.y += observe(&ens, &zero, m.noise_std, m.noise_seed, obs.provenance).map_err(st)?.y;
            }
            obs
        }
        _ => {
            let h = synthesize_channel(&array, &paths, steering_model(m.model)).map_err(st)?;
            observe(&ens, &h, m.noise_std, m.noise_seed, model.provenance()).map_err(st)?
        }
    };
    let eta = match m.eta {
        EtaSpec::Auto { safety } => estimate_eta(&ens, &array, &paths, model, m.noise_std, safety).map_err(st)?,
        EtaSpec::Fixed { value } => value,
        EtaSpec::Relative { factor } => factor * obs.y.norm(),
    };
    let hash = cfg.data_hash();
    let scenario = ScenarioFile {
        config_hash: hash.clone(),
        paths: paths
            .iter()
            .map(|p| {
                Ok(PathRecord { range_m: p.range, angle_rad: p.angle, u_rad: map.u_of_r(p.range)?, gain: pair(p.gain) })
            })
            .collect::<nearfield_core::Result<_>>()
            .map_err(st)?,
    };
    let observation = ObservationFile {
        config_hash: hash,
        provenance: provenance_name(obs.provenance).into(),
        n_meas: m.n_meas,
        n_antennas: array.n_antennas,
        combiner_seed: m.combiner_seed,
        noise_std: m.noise_std,
        noise_seed: m.noise_seed,
        eta,
        y: obs.y.iter().map(|&z| pair(z)).collect(),
        combiner: (0..m.n_meas)
            .flat_map(|i| (0..array.n_antennas).map(move |n| (i, n)))
            .map(|(i, n)| pair(ens.combiner[(i, n)]))
            .collect(),
    };
    Ok((scenario, observation))
}

fn check_hash(what: &str, found: &str, cfg: &ExperimentConfig) -> AppResult<()> {
    if found != cfg.data_hash() {
        return Err(AppError::Mismatch(format!("{what} was produced by a different configuration")));
    }
    Ok(())
}

/// Rebuilds the sensing operator from the stored combiner.
pub fn ensemble_from(cfg: &ExperimentConfig, basis: &LiftedBasis, obs: &ObservationFile) -> AppResult<MeasurementEnsemble> {
    check_hash("observation", &obs.config_hash, cfg)?;
    parse_provenance(&obs.provenance)?;
    let mut ens = build_sensing(basis, obs.combiner()?).map_err(AppError::stage("measurement"))?;
    ens.seed = Some(obs.combiner_seed);
    ens.noise_std = obs.noise_std;
    Ok(ens)
}

pub struct Recovery {
    pub report: RunReport,
    pub solution: SdpSolution,
    pub estimates: Vec<PathEstimate>,
    pub peaks: Vec<Peak>,
}

pub fn evaluate(
    cfg: &ExperimentConfig,
    estimates: &[PathEstimate],
    scenario: &ScenarioFile,
) -> AppResult<MetricsRecord> {
    check_hash("scenario", &scenario.config_hash, cfg)?;
    let array = cfg.array.to_core();
    let map = inverse_range_map(&array)?;
    let m = match_support(&array, &map, estimates, &scenario.paths(), steering_model(cfg.measurement.model))
        .map_err(AppError::stage("eval"))?;
    Ok(MetricsRecord::from(&m))
}

/// Solve, localize and report. `truth` adds support metrics.
pub fn recover(
    cfg: &ExperimentConfig,
    basis: &LiftedBasis,
    obs: &ObservationFile,
    truth: Option<&ScenarioFile>,
) -> AppResult<Recovery> {
    cfg.validate()?;
    let array = cfg.array.to_core();
    let map = inverse_range_map(&array)?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |stage: &str, timings: &mut Vec<StageTiming>| {
        timings.push(StageTiming { stage: stage.into(), seconds: clock.elapsed().as_secs_f64() });
        clock = Instant::now();
    };

    let ens = ensemble_from(cfg, basis, obs)?;
    let y = obs.y();
    let problem = SdpProblem::new(ens.sensing.clone(), y.clone(), obs.eta, ens.n_u(), ens.n_b())
        .map_err(AppError::stage("solve"))?;
    lap("measurement", &mut timings);

    let solution = sdp::solve(&problem, &cfg.solver.to_core()).map_err(AppError::stage("solve"))?;
    lap("solve", &mut timings);

    let (estimates, peaks) =
        localize(&ens, &map, &y, &solution.q, &cfg.localization.to_core()).map_err(AppError::stage("localize"))?;
    lap("localize", &mut timings);

    let metrics = match truth {
        Some(s) => Some(evaluate(cfg, &estimates, s)?),
        None => None,
    };
    lap("eval", &mut timings);

    let report = RunReport {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        basis_hash: cfg.basis_hash(),
        timings,
        eta: solution.eta,
        solver: SolverRecord::from(&solution),
        estimates: estimates.iter().map(EstimateRecord::from).collect(),
        metrics,
        files: Vec::new(),
    };
    Ok(Recovery { report, solution, estimates, peaks })
}

pub fn dual_file(cfg: &ExperimentConfig, q: &DVector<Complex64>) -> DualFile {
    DualFile { config_hash: cfg.data_hash(), q: q.iter().map(|&z| pair(z)).collect() }
}

pub const DUALPOLY_HEADER: &str = "u_rad,angle_rad,range_m,q_re,q_im,q_abs";

/// `|Q|` sampled on `[0, 2pi) x [0, pi)` with the matching ranges.
pub fn dualpoly_rows(
    cfg: &ExperimentConfig,
    ens: &MeasurementEnsemble,
    dual: &DualFile,
    grid: (usize, usize),
) -> AppResult<(Vec<String>, PeaksFile)> {
    check_hash("dual vector", &dual.config_hash, cfg)?;
    let map = inverse_range_map(&cfg.array.to_core())?;
    let dp = DualPolynomial::from_dual(ens, &dual.q()).map_err(AppError::stage("dualpoly"))?;
    let us: Vec<f64> = (0..grid.0).map(|i| TAU * i as f64 / grid.0 as f64).collect();
    let ts: Vec<f64> = (0..grid.1).map(|j| PI * j as f64 / grid.1 as f64).collect();
    let vals = dp.eval_grid(&us, &ts);
    let mut rows = Vec::with_capacity(grid.0 * grid.1);
    for (i, &u) in us.iter().enumerate() {
        let r = map.r_of_u(u).map_err(AppError::stage("dualpoly"))?;
        for (j, &t) in ts.iter().enumerate() {
            let v = vals[(i, j)];
            rows.push(format!("{u:.9},{t:.9},{r:.9},{:.12e},{:.12e},{:.12e}", v.re, v.im, v.norm()));
        }
    }
    let peaks = dp
        .find_peaks(&cfg.localization.to_core())
        .iter()
        .map(|p| Ok(PeakRecord::new(p, map.r_of_u(p.u)?)))
        .collect::<nearfield_core::Result<_>>()
        .map_err(AppError::stage("dualpoly"))?;
    let sup = dp.sup_norm(cfg.localization.to_core().grid);
    Ok((rows, PeaksFile { config_hash: cfg.data_hash(), sup_norm: sup, peaks }))
}
