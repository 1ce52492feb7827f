//! Experiment configuration files.
//!
//! A config is a TOML document with flat top-level keys and up to two
//! signal tables. Every key except `experiment` is optional and overrides
//! the registry default of the named experiment:
//!
//! ```toml
//! experiment = "pendulum-sine"   # registry name (required)
//! horizon = 20000                # number of steps
//! dt = 0.001                     # plant sampling interval
//! seed = 1                       # root seed of all random streams
//! gamma = "auto"                 # pathlength level: number or "auto"
//! hinf_gamma = "auto"            # H∞ level (control experiments)
//! algorithms = ["pathlength", "h2", "hinf", "offline"]
//! decimate = 100                 # keep every 100th step in the CSV
//! output = "pendulum-sine.csv"
//! relinearize = true             # pendulum: re-synthesize along the path
//!
//! [disturbance]                  # driving disturbance w
//! kind = "sinusoid"
//! amplitude = 1.0
//! period = 62.832
//!
//! [measurement]                  # measurement disturbance v (filters)
//! kind = "constant"
//! amplitude = 1.0
//! ```
//!
//! Signal kinds: `constant {amplitude}`, `step {amplitude, half_period}`,
//! `sinusoid {amplitude, period}`, `gaussian {std}`,
//! `random-walk {step_std}`. `amplitude` and `std` default to 1.
//! Unknown keys are rejected.

use std::path::PathBuf;

use pathopt::DisturbanceSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// A γ level: fixed, or found by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGamma", into = "RawGamma")]
pub enum GammaChoice {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawGamma {
    Number(f64),
    Text(String),
}

impl TryFrom<RawGamma> for GammaChoice {
    type Error = String;

    fn try_from(raw: RawGamma) -> std::result::Result<Self, String> {
        match raw {
            RawGamma::Number(g) if g > 0.0 && g.is_finite() => Ok(GammaChoice::Value(g)),
            RawGamma::Number(g) => Err(format!("gamma must be positive, got {g}")),
            RawGamma::Text(t) => t.parse(),
        }
    }
}

impl From<GammaChoice> for RawGamma {
    fn from(g: GammaChoice) -> Self {
        match g {
            GammaChoice::Auto => RawGamma::Text("auto".into()),
            GammaChoice::Value(v) => RawGamma::Number(v),
        }
    }
}

impl std::str::FromStr for GammaChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(g) if g > 0.0 && g.is_finite() => Ok(GammaChoice::Value(g)),
            _ => Err(format!("expected a positive number or \"auto\", got {s:?}")),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalConfig {
    Constant {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Step {
        #[serde(default = "one")]
        amplitude: f64,
        half_period: usize,
    },
    Sinusoid {
        #[serde(default = "one")]
        amplitude: f64,
        period: f64,
    },
    Gaussian {
        #[serde(default = "one")]
        std: f64,
    },
    RandomWalk {
        step_std: f64,
    },
}

impl SignalConfig {
    /// The generator spec. `sample_interval` converts step indices into the
    /// unit in which a sinusoid period is measured.
    pub fn to_spec(&self, seed: u64, sample_interval: f64) -> DisturbanceSpec {
        match *self {
            SignalConfig::Constant { amplitude } => DisturbanceSpec::Constant { amplitude },
            SignalConfig::Step { amplitude, half_period } => DisturbanceSpec::Step { amplitude, half_period },
            SignalConfig::Sinusoid { amplitude, period } => {
                DisturbanceSpec::Sinusoid { amplitude, period, dt: sample_interval }
            }
            SignalConfig::Gaussian { std } => DisturbanceSpec::GaussianIid { std, seed },
            SignalConfig::RandomWalk { step_std } => DisturbanceSpec::RandomWalk { step_std, seed },
        }
    }

    pub fn with_period(&self, period: f64) -> Option<SignalConfig> {
        match *self {
            SignalConfig::Sinusoid { amplitude, .. } => Some(SignalConfig::Sinusoid { amplitude, period }),
            _ => None,
        }
    }

    fn check(&self, key: &str) -> Result<()> {
        let bad = |field: &str, v: f64| {
            Err(CliError::Config(format!("{key}.{field}: expected a finite value, got {v}")))
        };
        match *self {
            SignalConfig::Constant { amplitude } | SignalConfig::Step { amplitude, .. } if !amplitude.is_finite() => {
                bad("amplitude", amplitude)
            }
            SignalConfig::Step { half_period: 0, .. } => {
                Err(CliError::Config(format!("{key}.half_period: must be at least 1")))
            }
            SignalConfig::Sinusoid { period, .. } if !(period > 0.0 && period.is_finite()) => bad("period", period),
            SignalConfig::Sinusoid { amplitude, .. } if !amplitude.is_finite() => bad("amplitude", amplitude),
            SignalConfig::Gaussian { std } if !(std >= 0.0 && std.is_finite()) => bad("std", std),
            SignalConfig::RandomWalk { step_std } if !(step_std >= 0.0 && step_std.is_finite()) => {
                bad("step_std", step_std)
            }
            _ => Ok(()),
        }
    }
}

/// Raw contents of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: String,
    pub horizon: Option<usize>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub gamma: Option<GammaChoice>,
    pub hinf_gamma: Option<GammaChoice>,
    pub algorithms: Option<Vec<String>>,
    pub decimate: Option<usize>,
    pub output: Option<PathBuf>,
    pub relinearize: Option<bool>,
    pub disturbance: Option<SignalConfig>,
    pub measurement: Option<SignalConfig>,
}

/// 1-based line of the first occurrence of `key` at the start of a line.
fn locate(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.starts_with(key) && l[key.len()..].trim_start().starts_with(['=', '.', ']'])
                || l.starts_with(&format!("[{key}]"))
        })
        .map(|i| i + 1)
}

/// Prefixes a `key: message` config error with the line of `key` in
/// `text`, when the key appears there.
pub fn anchor(text: &str, err: CliError) -> CliError {
    match err {
        CliError::Config(msg) => {
            let key = msg.split([':', '.']).next().unwrap_or("");
            match locate(text, key) {
                Some(line) => CliError::Config(format!("line {line}: {msg}")),
                None => CliError::Config(msg),
            }
        }
        other => other,
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        cfg.check().map_err(|e| anchor(text, e))?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        ConfigFile::parse(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Checks that do not depend on the registry.
    fn check(&self) -> Result<()> {
        if let Some(h) = self.horizon {
            if h == 0 {
                return Err(CliError::Config("horizon: must be at least 1".into()));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Config(format!("dt: must be positive, got {dt}")));
            }
        }
        if self.decimate == Some(0) {
            return Err(CliError::Config("decimate: must be at least 1".into()));
        }
        if let Some(s) = &self.disturbance {
            s.check("disturbance")?;
        }
        if let Some(s) = &self.measurement {
            s.check("measurement")?;
        }
        Ok(())
    }
}
