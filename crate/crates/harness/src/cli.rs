use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cache::CACHE_ENV;
use crate::config::{EtaSpec, ExperimentConfig, ModelKind};
use crate::error::{AppError, AppResult};
use crate::files::{self, DualFile, ObservationFile, RunReport, ScenarioFile};
use crate::pipeline::{self, BasisSource};

#[derive(Debug, Parser)]
#[command(name = "nearfield", version, about = "Gridless near-field range-angle recovery")]
pub struct Cli {
    /// Directory holding fitted bases.
    #[arg(long, env = CACHE_ENV, default_value = ".nearfield-cache", global = true)]
    pub cache_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit (or reuse) the lifting basis and write the fit-quality table.
    FitBasis(Common),
    /// Draw the scene and the measurements.
    Simulate(Common),
    /// Solve, localize and write the run report.
    Recover {
        #[command(flatten)]
        common: Common,
        /// Defaults to `<out>/observation.json`.
        #[arg(long)]
        observation: Option<PathBuf>,
        /// Scenario file used for metrics. Defaults to `<out>/scenario.json` when present.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Sample the dual polynomial on a grid.
    Dualpoly {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        observation: Option<PathBuf>,
        #[arg(long)]
        dual: Option<PathBuf>,
        #[arg(long, default_value_t = 128)]
        grid_u: usize,
        #[arg(long, default_value_t = 128)]
        grid_theta: usize,
    },
    /// Compare a run report against the true scene.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment file (JSON). Defaults to the built-in reference scene.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_meas: Option<usize>,
    #[arg(long)]
    pub combiner_seed: Option<u64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Fixed feasibility radius, replacing the configured rule.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s {
        "exact" => Ok(ModelKind::Exact),
        "fresnel" => Ok(ModelKind::Fresnel),
        "lifted" => Ok(ModelKind::Lifted),
        _ => Err(format!("unknown model {s:?} (exact, fresnel, lifted)")),
    }
}

impl Common {
    pub fn resolve(&self) -> AppResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::reference(),
        };
        let m = &mut cfg.measurement;
        if let Some(v) = self.n_meas {
            m.n_meas = v;
        }
        if let Some(v) = self.combiner_seed {
            m.combiner_seed = v;
        }
        if let Some(v) = self.noise_std {
            m.noise_std = v;
        }
        if let Some(v) = self.noise_seed {
            m.noise_seed = v;
        }
        if let Some(v) = self.model {
            m.model = v;
        }
        if let Some(v) = self.eta {
            m.eta = EtaSpec::Fixed { value: v };
        }
        if let Some(v) = self.threshold {
            cfg.localization.threshold = v;
        }
        if let Some(v) = self.max_iter {
            cfg.solver.max_iter = v;
        }
        if let Some(v) = &self.out {
            cfg.output.dir = v.display().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from(&cfg.output.dir)
}

fn basis_for(cfg: &ExperimentConfig, cache_dir: &Path, log: &mut dyn Write) -> AppResult<nearfield_core::LiftedBasis> {
    let t = Instant::now();
    let (basis, source) = pipeline::load_or_fit_basis(cfg, cache_dir)?;
    let how = match source {
        BasisSource::Cache => "loaded from cache".to_string(),
        BasisSource::Fitted => "fitted".to_string(),
        BasisSource::Refitted(reason) => format!("refitted (cache rejected: {reason})"),
    };
    say(log, format!("basis {how} in {:.2} s", t.elapsed().as_secs_f64()))?;
    Ok(basis)
}

fn say(log: &mut dyn Write, line: impl AsRef<str>) -> AppResult<()> {
    writeln!(log, "{}", line.as_ref()).map_err(|source| AppError::Io { path: "<output>".into(), source })
}

/// Runs one subcommand, writing human-readable output to `log`.
pub fn run(cli: &Cli, log: &mut dyn Write) -> AppResult<()> {
    match &cli.command {
        Command::FitBasis(common) => {
            let cfg = common.resolve()?;
            let basis = basis_for(&cfg, &cli.cache_dir, log)?;
            let rows = pipeline::fit_quality_rows(&basis);
            let path = out_dir(&cfg).join("fit_quality.csv");
            files::write_csv(&path, pipeline::FIT_HEADER, rows.iter().cloned())?;
            say(log, pipeline::FIT_HEADER)?;
            for r in &rows {
                say(log, r)?;
            }
            say(log, format!("max relative fit error {:.3e}", basis.max_fit_error()))?;
        }
        Command::Simulate(common) => {
            let cfg = common.resolve()?;
            let basis = basis_for(&cfg, &cli.cache_dir, log)?;
            let (scenario, obs) = pipeline::simulate(&cfg, &basis)?;
            let dir = out_dir(&cfg);
            files::write_json(&dir.join("scenario.json"), &scenario)?;
            files::write_json(&dir.join("observation.json"), &obs)?;
            say(log, format!("{} paths, {} measurements, eta {:.6e}", scenario.paths.len(), obs.n_meas, obs.eta))?;
        }
        Command::Recover { common, observation, truth } => {
            let cfg = common.resolve()?;
            let dir = out_dir(&cfg);
            let obs: ObservationFile = files::read_json(&observation.clone().unwrap_or_else(|| dir.join("observation.json")))?;
            let truth_path = truth.clone().or_else(|| Some(dir.join("scenario.json")).filter(|p| p.exists()));
            let scenario: Option<ScenarioFile> = truth_path.as_deref().map(files::read_json).transpose()?;
            let basis = basis_for(&cfg, &cli.cache_dir, log)?;
            let mut rec = pipeline::recover(&cfg, &basis, &obs, scenario.as_ref())?;
            let mut manifest = vec!["report.json".to_string(), "dual.json".to_string()];
            files::write_json(&dir.join("dual.json"), &pipeline::dual_file(&cfg, &rec.solution.q))?;
            if let Some(m) = &rec.report.metrics {
                files::write_json(&dir.join("metrics.json"), m)?;
                files::write_csv(&dir.join("metrics.csv"), files::METRICS_HEADER, files::metrics_rows(m))?;
                manifest.extend(["metrics.json".to_string(), "metrics.csv".to_string()]);
            }
            rec.report.files = manifest;
            files::write_json(&dir.join("report.json"), &rec.report)?;
            print_report(&rec.report, log)?;
        }
        Command::Dualpoly { common, observation, dual, grid_u, grid_theta } => {
            let cfg = common.resolve()?;
            let dir = out_dir(&cfg);
            let obs: ObservationFile = files::read_json(&observation.clone().unwrap_or_else(|| dir.join("observation.json")))?;
            let dual: DualFile = files::read_json(&dual.clone().unwrap_or_else(|| dir.join("dual.json")))?;
            let basis = basis_for(&cfg, &cli.cache_dir, log)?;
            let ens = pipeline::ensemble_from(&cfg, &basis, &obs)?;
            let (rows, peaks) = pipeline::dualpoly_rows(&cfg, &ens, &dual, (*grid_u, *grid_theta))?;
            files::write_csv(&dir.join("dualpoly.csv"), pipeline::DUALPOLY_HEADER, rows)?;
            files::write_json(&dir.join("peaks.json"), &peaks)?;
            say(log, format!("sup |Q| {:.6}, {} peaks", peaks.sup_norm, peaks.peaks.len()))?;
        }
        Command::Eval { common, report, truth } => {
            let cfg = common.resolve()?;
            let dir = out_dir(&cfg);
            let report: RunReport = files::read_json(&report.clone().unwrap_or_else(|| dir.join("report.json")))?;
            let scenario: ScenarioFile = files::read_json(&truth.clone().unwrap_or_else(|| dir.join("scenario.json")))?;
            let est: Vec<_> = report.estimates.iter().map(|e| e.to_estimate()).collect();
            let m = pipeline::evaluate(&cfg, &est, &scenario)?;
            files::write_json(&dir.join("metrics.json"), &m)?;
            files::write_csv(&dir.join("metrics.csv"), files::METRICS_HEADER, files::metrics_rows(&m))?;
            say(log, files::METRICS_HEADER)?;
            for r in files::metrics_rows(&m) {
                say(log, r)?;
            }
            say(log, format!("misses {}, false alarms {}, nmse {:.3e}", m.misses, m.false_alarms, m.nmse))?;
        }
    }
    Ok(())
}

fn print_report(r: &RunReport, log: &mut dyn Write) -> AppResult<()> {
    let s = &r.solver;
    say(log, format!(
        "solver {} in {} iterations: objective {:.6}, gap {:.2e}, max |Q| {:.6}",
        s.status, s.iterations, s.objective, s.gap, s.certificate_peak
    ))?;
    say(log, "angle_rad,range_m,u_rad,gain_re,gain_im,certificate")?;
    for e in &r.estimates {
        say(log, format!("{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}", e.angle_rad, e.range_m, e.u_rad, e.gain[0], e.gain[1], e.certificate))?;
    }
    if let Some(m) = &r.metrics {
        say(log, format!("misses {}, false alarms {}, nmse {:.3e}", m.misses, m.false_alarms, m.nmse))?;
    }
    Ok(())
}
