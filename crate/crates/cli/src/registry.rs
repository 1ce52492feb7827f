//! Named experiment scenarios.

use std::f64::consts::PI;

use crate::config::SignalConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Inverted pendulum, controllers compared by cumulative LQ cost.
    Control,
    /// Tracking plant, filters compared by cumulative squared error.
    Filter,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Control => "control",
            ExperimentKind::Filter => "filter",
        }
    }

    pub fn algorithms(&self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Control => &["pathlength", "h2", "hinf", "offline"],
            ExperimentKind::Filter => &["pathlength", "kalman"],
        }
    }

    /// Column suffix of the CSV output.
    pub fn metric(&self) -> &'static str {
        match self {
            ExperimentKind::Control => "cumcost",
            ExperimentKind::Filter => "cumerror",
        }
    }

    pub fn default_dt(&self) -> f64 {
        match self {
            ExperimentKind::Control => 0.001,
            ExperimentKind::Filter => 0.01,
        }
    }

    pub fn default_horizon(&self) -> usize {
        match self {
            ExperimentKind::Control => 100_000,
            ExperimentKind::Filter => 10_000,
        }
    }

    /// Pendulum sinusoid periods are in time units, so each step advances
    /// the phase by dt; filter periods are counted in samples.
    pub fn period_in_time_units(&self) -> bool {
        matches!(self, ExperimentKind::Control)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: &'static str,
    pub kind: ExperimentKind,
    pub scenario: &'static str,
    pub disturbance: SignalConfig,
    /// Measurement disturbance of filter experiments.
    pub measurement: Option<SignalConfig>,
}

fn sine(period: f64) -> SignalConfig {
    SignalConfig::Sinusoid { amplitude: 1.0, period }
}

fn control(name: &'static str, scenario: &'static str, w: SignalConfig) -> Experiment {
    Experiment { name, kind: ExperimentKind::Control, scenario, disturbance: w, measurement: None }
}

fn filter(name: &'static str, scenario: &'static str, v: SignalConfig) -> Experiment {
    Experiment {
        name,
        kind: ExperimentKind::Filter,
        scenario,
        disturbance: SignalConfig::Gaussian { std: 1.0 },
        measurement: Some(v),
    }
}

pub fn registry() -> Vec<Experiment> {
    vec![
        control("pendulum-gaussian", "pendulum, i.i.d. standard Gaussian w", SignalConfig::Gaussian { std: 1.0 }),
        control(
            "pendulum-step",
            "pendulum, w = +1 for 500 steps then -1 for 500 steps, repeating",
            SignalConfig::Step { amplitude: 1.0, half_period: 500 },
        ),
        control("pendulum-constant", "pendulum, constant w = 1", SignalConfig::Constant { amplitude: 1.0 }),
        control("pendulum-sine-200pi", "pendulum, sinusoidal w with period 200π", sine(200.0 * PI)),
        control("pendulum-sine", "pendulum, sinusoidal w with period 20π", sine(20.0 * PI)),
        control("pendulum-sine-2pi", "pendulum, sinusoidal w with period 2π", sine(2.0 * PI)),
        control("pendulum-sine-2000pi", "pendulum, sinusoidal w with period 2000π", sine(2000.0 * PI)),
        filter(
            "tracking-constant-v",
            "tracking plant, Gaussian w, constant v = 1",
            SignalConfig::Constant { amplitude: 1.0 },
        ),
        filter("tracking-sine-200pi", "tracking plant, Gaussian w, sinusoidal v with period 200π", sine(200.0 * PI)),
        filter("tracking-sine-20pi", "tracking plant, Gaussian w, sinusoidal v with period 20π", sine(20.0 * PI)),
        filter("tracking-sine-2pi", "tracking plant, Gaussian w, sinusoidal v with period 2π", sine(2.0 * PI)),
    ]
}

pub fn find(name: &str) -> Option<Experiment> {
    registry().into_iter().find(|e| e.name == name)
}
