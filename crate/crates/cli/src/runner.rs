//! Experiment execution and output files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use pathopt::control::{hinf_gamma_star, hinf_synthesize, pathlength_gamma_star, pathlength_synthesize, ControlPlant, Mode};
use pathopt::filter::{
    kalman_synthesize, pathlength_filter_gamma_star, pathlength_filter_synthesize, CausalEstimator, FilterPlant,
    FilterSynthesis,
};
use pathopt::sim::{
    generate, simulate_filter, simulate_pendulum_mpc, ControllerFamily, MpcOptions, PendulumDynamics, PendulumParams,
};
use pathopt::{Mat, Signal};
use serde::Serialize;

use crate::config::{ConfigFile, GammaChoice, SignalConfig};
use crate::error::{CliError, Result};
use crate::registry::{find, Experiment, ExperimentKind};

/// "auto" levels sit this factor above the bisected optimum.
pub const AUTO_MARGIN: f64 = 1.05;

/// Offset between the root seed and the seed of the measurement
/// disturbance, so that w and v draw from unrelated streams.
pub const MEASUREMENT_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Command-line values that take precedence over a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub gamma: Option<GammaChoice>,
    pub hinf_gamma: Option<GammaChoice>,
    pub output: Option<PathBuf>,
    pub decimate: Option<usize>,
    pub period: Option<f64>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub horizon: usize,
    pub dt: f64,
    pub seed: u64,
    pub gamma: GammaChoice,
    pub hinf_gamma: GammaChoice,
    pub algorithms: Vec<String>,
    pub decimate: usize,
    pub output: PathBuf,
    pub relinearize: bool,
    pub disturbance: SignalConfig,
    pub measurement: Option<SignalConfig>,
}

pub fn resolve(file: Option<ConfigFile>, o: &Overrides) -> Result<RunConfig> {
    let file = file.unwrap_or_default();
    let name = o
        .experiment
        .clone()
        .or_else(|| Some(file.experiment.clone()).filter(|n| !n.is_empty()))
        .ok_or_else(|| CliError::Config("experiment: no experiment named; use --experiment or --config".into()))?;
    let experiment = find(&name)
        .ok_or_else(|| CliError::Config(format!("experiment: unknown experiment {name:?}; see `pathopt list`")))?;
    let kind = experiment.kind;

    let algorithms = file
        .algorithms
        .clone()
        .unwrap_or_else(|| kind.algorithms().iter().map(|s| s.to_string()).collect());
    if algorithms.is_empty() {
        return Err(CliError::Config("algorithms: list is empty".into()));
    }
    for a in &algorithms {
        if !kind.algorithms().contains(&a.as_str()) {
            return Err(CliError::Config(format!(
                "algorithms: unknown algorithm {a:?} for {} experiments (expected one of {})",
                kind.name(),
                kind.algorithms().join(", ")
            )));
        }
    }
    if kind == ExperimentKind::Filter && file.hinf_gamma.is_some() {
        return Err(CliError::Config("hinf_gamma: only applies to control experiments".into()));
    }
    if kind == ExperimentKind::Filter && file.relinearize.is_some() {
        return Err(CliError::Config("relinearize: only applies to control experiments".into()));
    }
    if kind == ExperimentKind::Control && file.measurement.is_some() {
        return Err(CliError::Config("measurement: only applies to filter experiments".into()));
    }

    let mut disturbance = file.disturbance.clone().unwrap_or_else(|| experiment.disturbance.clone());
    let mut measurement = match kind {
        ExperimentKind::Filter => Some(file.measurement.clone().unwrap_or_else(|| experiment.measurement.clone().unwrap())),
        ExperimentKind::Control => None,
    };
    if let Some(period) = o.period {
        if !(period > 0.0 && period.is_finite()) {
            return Err(CliError::Config(format!("period: must be positive, got {period}")));
        }
        let target = measurement.as_mut().unwrap_or(&mut disturbance);
        *target = target
            .with_period(period)
            .ok_or_else(|| CliError::Config(format!("period: experiment {name} has no sinusoidal disturbance")))?;
    }
    let horizon = o.horizon.or(file.horizon).unwrap_or(kind.default_horizon());
    let decimate = o.decimate.or(file.decimate).unwrap_or(100);
    if horizon == 0 {
        return Err(CliError::Config("horizon: must be at least 1".into()));
    }
    if decimate == 0 {
        return Err(CliError::Config("decimate: must be at least 1".into()));
    }
    Ok(RunConfig {
        horizon,
        dt: file.dt.unwrap_or(kind.default_dt()),
        seed: o.seed.or(file.seed).unwrap_or(1),
        gamma: o.gamma.or(file.gamma).unwrap_or(GammaChoice::Auto),
        hinf_gamma: o.hinf_gamma.or(file.hinf_gamma).unwrap_or(GammaChoice::Auto),
        algorithms,
        decimate,
        output: o.output.clone().or(file.output.clone()).unwrap_or_else(|| PathBuf::from(format!("{name}.csv"))),
        relinearize: file.relinearize.unwrap_or(true),
        disturbance,
        measurement,
        experiment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub gamma: f64,
    pub gamma_star: Option<f64>,
    pub auto: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub kind: String,
    pub scenario: String,
    pub horizon: usize,
    pub dt: f64,
    pub seed: u64,
    pub decimate: usize,
    pub algorithms: Vec<String>,
    pub levels: BTreeMap<String, Level>,
    pub residuals: BTreeMap<String, f64>,
    pub final_values: BTreeMap<String, f64>,
    /// Re-linearizations at which a synthesis failed (control only).
    pub fallbacks: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// (column name, cumulative metric per step).
    pub columns: Vec<(String, Vec<f64>)>,
    pub meta: Metadata,
}

impl RunResult {
    pub fn final_value(&self, algorithm: &str) -> Option<f64> {
        self.meta.final_values.get(algorithm).copied()
    }
}

fn lqr_residual(plant: &ControlPlant, p: &Mat) -> f64 {
    let s = &plant.r + plant.b_u.transpose() * p * &plant.b_u;
    let gain = s.try_inverse().map(|si| si * plant.b_u.transpose() * p * &plant.a);
    match gain {
        Some(k) => (&plant.q + plant.a.transpose() * p * &plant.a - plant.a.transpose() * p * &plant.b_u * k - p).norm(),
        None => f64::INFINITY,
    }
}

fn kalman_residual(plant: &FilterPlant, p: &Mat) -> f64 {
    let (a, b, c) = (&plant.a, &plant.b, &plant.c);
    let s = Mat::identity(c.nrows(), c.nrows()) + c * p * c.transpose();
    match s.try_inverse() {
        Some(si) => (a * p * a.transpose() + b * b.transpose() - a * p * c.transpose() * si * c * p * a.transpose() - p).norm(),
        None => f64::INFINITY,
    }
}

fn choose_level(
    choice: GammaChoice,
    star: impl FnOnce() -> Result<f64>,
) -> Result<Level> {
    Ok(match choice {
        GammaChoice::Auto => {
            let s = star()?;
            Level { gamma: AUTO_MARGIN * s, gamma_star: Some(s), auto: true }
        }
        GammaChoice::Value(g) => Level { gamma: g, gamma_star: None, auto: false },
    })
}

fn signal(cfg: &SignalConfig, seed: u64, dim: usize, horizon: usize, sample_interval: f64) -> Signal {
    generate(&cfg.to_spec(seed, sample_interval), dim, horizon)
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunResult> {
    match cfg.experiment.kind {
        ExperimentKind::Control => run_control(cfg),
        ExperimentKind::Filter => run_filter(cfg),
    }
}

fn metadata(cfg: &RunConfig) -> Metadata {
    Metadata {
        experiment: cfg.experiment.name.to_string(),
        kind: cfg.experiment.kind.name().to_string(),
        scenario: cfg.experiment.scenario.to_string(),
        horizon: cfg.horizon,
        dt: cfg.dt,
        seed: cfg.seed,
        decimate: cfg.decimate,
        algorithms: cfg.algorithms.clone(),
        levels: BTreeMap::new(),
        residuals: BTreeMap::new(),
        final_values: BTreeMap::new(),
        fallbacks: BTreeMap::new(),
    }
}

fn run_control(cfg: &RunConfig) -> Result<RunResult> {
    let params = PendulumParams { dt: cfg.dt, ..PendulumParams::default() };
    let origin = params.linearize(0.0)?;
    let w = signal(&cfg.disturbance, cfg.seed, 1, cfg.horizon, cfg.dt);
    let options = MpcOptions { dynamics: PendulumDynamics::Nonlinear, relinearize: cfg.relinearize, grid: 1e-3 };
    let mut meta = metadata(cfg);
    let lqr = pathopt::numerics::solve_dare(&origin.a, &origin.b_u, &origin.q, &origin.r)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    meta.residuals.insert("lqr_dare".into(), lqr_residual(&origin, &lqr.p));

    let mut columns = Vec::new();
    for alg in &cfg.algorithms {
        let family = match alg.as_str() {
            "h2" => ControllerFamily::H2,
            "offline" => ControllerFamily::Offline,
            "hinf" => {
                let level = choose_level(cfg.hinf_gamma, || Ok(hinf_gamma_star(&origin, Mode::Causal)?.gamma))?;
                let synth = hinf_synthesize(&origin, level.gamma, Mode::Causal)?;
                if !synth.is_feasible() {
                    return Err(CliError::Infeasible(format!(
                        "hinf_gamma: H∞ synthesis infeasible at γ = {} (failed: {:?})",
                        level.gamma,
                        synth.report().failed
                    )));
                }
                if let Some(r) = synth.report().diagnostics.residual_norm {
                    meta.residuals.insert("hinf_riccati".into(), r);
                }
                meta.levels.insert("hinf".into(), level);
                ControllerFamily::Hinf { gamma: level.gamma }
            }
            "pathlength" => {
                let level = choose_level(cfg.gamma, || Ok(pathlength_gamma_star(&origin, Mode::Causal)?.gamma))?;
                let synth = pathlength_synthesize(&origin, level.gamma, Mode::Causal)?;
                if !synth.is_feasible() {
                    return Err(CliError::Infeasible(format!(
                        "gamma: pathlength synthesis infeasible at γ = {} (failed: {:?})",
                        level.gamma,
                        synth.report().failed
                    )));
                }
                let d = &synth.report().diagnostics;
                if let Some(r) = d.residual_norm {
                    meta.residuals.insert("pathlength_riccati".into(), r);
                }
                if let Some(r) = d.factor_inverse_radius {
                    meta.residuals.insert("pathlength_factor_inverse_radius".into(), r);
                }
                meta.levels.insert("pathlength".into(), level);
                ControllerFamily::Pathlength { gamma: level.gamma }
            }
            other => unreachable!("unvalidated algorithm {other}"),
        };
        let run = simulate_pendulum_mpc(&params, &family, &w, &options)?;
        meta.final_values.insert(alg.clone(), run.cost);
        meta.fallbacks.insert(alg.clone(), run.fallbacks);
        columns.push((format!("{alg}_cumcost"), run.cumulative));
    }
    Ok(RunResult { columns, meta })
}

fn run_filter(cfg: &RunConfig) -> Result<RunResult> {
    let plant = FilterPlant::tracking(cfg.dt)?;
    let w = signal(&cfg.disturbance, cfg.seed, plant.b.ncols(), cfg.horizon, 1.0);
    let v_cfg = cfg.measurement.as_ref().expect("filter experiments carry a measurement disturbance");
    let v = signal(v_cfg, cfg.seed.wrapping_add(MEASUREMENT_SEED_OFFSET), plant.c.nrows(), cfg.horizon, 1.0);
    let mut meta = metadata(cfg);
    let mut columns = Vec::new();
    for alg in &cfg.algorithms {
        let mut estimator: Box<dyn CausalEstimator> = match alg.as_str() {
            "kalman" => {
                let kf = kalman_synthesize(&plant)?;
                meta.residuals.insert("kalman_dare".into(), kalman_residual(&plant, &kf.p2));
                Box::new(kf)
            }
            "pathlength" => {
                let level = choose_level(cfg.gamma, || Ok(pathlength_filter_gamma_star(&plant)?.gamma))?;
                match pathlength_filter_synthesize(&plant, level.gamma)? {
                    FilterSynthesis::Feasible(f) => {
                        meta.residuals.insert("pathlength_sigma_bar".into(), f.sigma_bar);
                        meta.residuals.insert("pathlength_hankel_norm".into(), f.hankel_norm);
                        meta.levels.insert("pathlength".into(), level);
                        f
                    }
                    FilterSynthesis::Infeasible(r) => {
                        return Err(CliError::Infeasible(format!(
                            "gamma: pathlength filter infeasible at γ = {} (σ̄(ZΠ) = {} > 1)",
                            r.gamma, r.sigma_bar
                        )))
                    }
                }
            }
            other => unreachable!("unvalidated algorithm {other}"),
        };
        let run = simulate_filter(&plant, estimator.as_mut(), &w, &v)?;
        meta.final_values.insert(alg.clone(), run.error);
        columns.push((format!("{alg}_cumerror"), run.cumulative));
    }
    Ok(RunResult { columns, meta })
}

/// Step indices kept after decimation; the final step is always kept.
pub fn decimated_steps(horizon: usize, decimate: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..horizon).step_by(decimate.max(1)).collect();
    if horizon > 0 && steps.last() != Some(&(horizon - 1)) {
        steps.push(horizon - 1);
    }
    steps
}

pub fn write_csv(result: &RunResult, decimate: usize, out: impl Write) -> Result<()> {
    let io = |e: csv::Error| CliError::Config(format!("output: {e}"));
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(result.columns.iter().map(|(name, _)| name.clone()));
    writer.write_record(&header).map_err(io)?;
    let horizon = result.columns.first().map(|c| c.1.len()).unwrap_or(0);
    for t in decimated_steps(horizon, decimate) {
        let mut row = vec![t.to_string()];
        row.extend(result.columns.iter().map(|(_, values)| format!("{}", values[t])));
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush().map_err(|e| CliError::Config(format!("output: {e}")))?;
    Ok(())
}

/// Path of the metadata file written next to `output`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_outputs(result: &RunResult, cfg: &RunConfig) -> Result<()> {
    let open = |p: &Path| {
        std::fs::File::create(p).map_err(|e| CliError::Config(format!("output: cannot create {}: {e}", p.display())))
    };
    let file = open(&cfg.output)?;
    write_csv(result, cfg.decimate, std::io::BufWriter::new(file))?;
    let meta = serde_json::to_string_pretty(&result.meta).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut side = open(&sidecar_path(&cfg.output))?;
    writeln!(side, "{meta}").map_err(|e| CliError::Config(format!("output: {e}")))?;
    Ok(())
}
