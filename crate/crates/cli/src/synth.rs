//! Synthesis inspector: optimal levels, gains and feasibility diagnostics.

use std::collections::BTreeMap;
use std::fmt;

use pathopt::control::{
    h2_synthesize, hinf_gamma_star, hinf_synthesize, pathlength_gamma_star, pathlength_synthesize, ControlPlant, Mode,
};
use pathopt::filter::{kalman_synthesize, pathlength_filter_gamma_star, pathlength_filter_synthesize, FilterPlant, FilterSynthesis};
use pathopt::sim::PendulumParams;
use pathopt::Mat;
use serde::Serialize;

use crate::config::GammaChoice;
use crate::error::{CliError, Result};
use crate::runner::AUTO_MARGIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantChoice {
    /// Position tracking (double integrator), filter problem by default.
    Tracking,
    /// x_{t+1} = 0.5x_t + u_t + w_t, control problem by default.
    Scalar,
    /// Inverted pendulum linearized at the origin.
    Pendulum,
    DoubleIntegrator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Control,
    Filter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthRequest {
    pub plant: PlantChoice,
    pub problem: Option<Problem>,
    pub gamma: GammaChoice,
    pub dt: Option<f64>,
    pub strictly_causal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthReport {
    pub plant: PlantChoice,
    pub problem: Problem,
    pub dt: Option<f64>,
    /// Smallest feasible pathlength level.
    pub gamma_star: f64,
    pub bisection_evaluations: usize,
    pub gamma: f64,
    pub feasible: bool,
    pub details: BTreeMap<String, serde_json::Value>,
}

fn matrix(m: &Mat) -> serde_json::Value {
    serde_json::Value::from((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn level(choice: GammaChoice, star: f64) -> f64 {
    match choice {
        GammaChoice::Auto => AUTO_MARGIN * star,
        GammaChoice::Value(g) => g,
    }
}

fn filter_plant(req: &SynthRequest) -> Result<FilterPlant> {
    Ok(match req.plant {
        PlantChoice::Tracking => FilterPlant::tracking(req.dt.unwrap_or(0.01))?,
        PlantChoice::Scalar => {
            let s = |x: f64| Mat::from_element(1, 1, x);
            FilterPlant::new(s(0.5), s(1.0), s(1.0), s(1.0))?
        }
        other => {
            return Err(CliError::Config(format!(
                "plant: the filter problem is defined for tracking and scalar, not {other:?}"
            )))
        }
    })
}

fn control_plant(req: &SynthRequest) -> Result<ControlPlant> {
    let s = |x: f64| Mat::from_element(1, 1, x);
    Ok(match req.plant {
        PlantChoice::Scalar => ControlPlant::new(s(0.5), s(1.0), s(1.0), s(1.0), s(1.0))?,
        PlantChoice::Pendulum => {
            PendulumParams { dt: req.dt.unwrap_or(0.001), ..PendulumParams::default() }.linearize(0.0)?
        }
        PlantChoice::Tracking | PlantChoice::DoubleIntegrator => ControlPlant::double_integrator(req.dt.unwrap_or(0.1))?,
    })
}

pub fn synthesize(req: &SynthRequest) -> Result<SynthReport> {
    if let Some(dt) = req.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!("dt: must be positive, got {dt}")));
        }
    }
    let problem = req.problem.unwrap_or(match req.plant {
        PlantChoice::Tracking => Problem::Filter,
        _ => Problem::Control,
    });
    match problem {
        Problem::Filter => synth_filter(req),
        Problem::Control => synth_control(req),
    }
}

fn synth_filter(req: &SynthRequest) -> Result<SynthReport> {
    let plant = filter_plant(req)?;
    let bisection = pathlength_filter_gamma_star(&plant)?;
    let gamma = level(req.gamma, bisection.gamma);
    let mut details = BTreeMap::new();
    let kf = kalman_synthesize(&plant)?;
    details.insert("kalman_gain".into(), matrix(&kf.k2));
    details.insert("kalman_update".into(), matrix(&kf.update));
    let feasible = match pathlength_filter_synthesize(&plant, gamma)? {
        FilterSynthesis::Feasible(f) => {
            details.insert("sigma_bar".into(), f.sigma_bar.into());
            details.insert("hankel_norm".into(), f.hankel_norm.into());
            if let Some(d) = &f.delta3q_at_1 {
                details.insert("delta3q_at_1".into(), matrix(d));
            }
            true
        }
        FilterSynthesis::Infeasible(r) => {
            details.insert("sigma_bar".into(), r.sigma_bar.into());
            details.insert("hankel_norm".into(), r.hankel_norm.into());
            false
        }
    };
    details.insert("bisection_non_monotone".into(), bisection.non_monotone.into());
    Ok(SynthReport {
        plant: req.plant,
        problem: Problem::Filter,
        dt: req.dt,
        gamma_star: bisection.gamma,
        bisection_evaluations: bisection.evaluations,
        gamma,
        feasible,
        details,
    })
}

fn synth_control(req: &SynthRequest) -> Result<SynthReport> {
    let plant = control_plant(req)?;
    let mode = if req.strictly_causal { Mode::StrictlyCausal } else { Mode::Causal };
    let bisection = pathlength_gamma_star(&plant, mode)?;
    let gamma = level(req.gamma, bisection.gamma);
    let mut details = BTreeMap::new();
    details.insert("mode".into(), format!("{mode:?}").into());
    let hinf = hinf_gamma_star(&plant, mode)?;
    details.insert("hinf_gamma_star".into(), hinf.gamma.into());
    if let Ok(s) = hinf_synthesize(&plant, AUTO_MARGIN * hinf.gamma, mode) {
        if let Some(p) = s.policy() {
            details.insert("hinf_kx".into(), matrix(&p.kx));
        }
    }
    details.insert("h2_kx".into(), matrix(&h2_synthesize(&plant, mode)?.kx));
    let synth = pathlength_synthesize(&plant, gamma, mode)?;
    let report = synth.report().clone();
    details.insert("failed_conditions".into(), format!("{:?}", report.failed).into());
    let d = &report.diagnostics;
    for (key, value) in [
        ("riccati_residual", d.residual_norm),
        ("game_radius", d.game_radius),
        ("controller_radius", d.controller_radius),
        ("min_eigenvalue_p", d.min_eigenvalue_p),
        ("factor_inverse_radius", d.factor_inverse_radius),
    ] {
        if let Some(v) = value {
            details.insert(key.into(), v.into());
        }
    }
    let feasible = synth.is_feasible();
    if let Some(p) = synth.policy() {
        details.insert("kx".into(), matrix(&p.kx));
        details.insert("knu".into(), matrix(&p.knu));
        details.insert("kw".into(), matrix(&p.kw));
    }
    Ok(SynthReport {
        plant: req.plant,
        problem: Problem::Control,
        dt: req.dt,
        gamma_star: bisection.gamma,
        bisection_evaluations: bisection.evaluations,
        gamma,
        feasible,
        details,
    })
}

impl fmt::Display for SynthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self.plant).map_err(|_| fmt::Error)?;
        let problem = serde_json::to_value(self.problem).map_err(|_| fmt::Error)?;
        writeln!(f, "plant: {} ({} problem)", name.as_str().unwrap_or("?"), problem.as_str().unwrap_or("?"))?;
        writeln!(f, "gamma*: {}", self.gamma_star)?;
        writeln!(f, "bisection evaluations: {}", self.bisection_evaluations)?;
        writeln!(f, "gamma: {}", self.gamma)?;
        writeln!(f, "feasible: {}", self.feasible)?;
        for (k, v) in &self.details {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}
