//! Command-line front end of `pathopt`: experiment registry, config files,
//! seeded runs with CSV output, and a synthesis inspector.

pub mod config;
pub mod error;
pub mod registry;
pub mod runner;
pub mod synth;

pub use config::{ConfigFile, GammaChoice, SignalConfig};
pub use error::{CliError, Result};
pub use registry::{find, registry, Experiment, ExperimentKind};
pub use runner::{resolve, run_experiment, write_outputs, Overrides, RunConfig, RunResult};

/// Parses and resolves a config file, anchoring errors to source lines.
pub fn validate_text(text: &str) -> Result<RunConfig> {
    let file = ConfigFile::parse(text)?;
    resolve(Some(file), &Overrides::default()).map_err(|e| config::anchor(text, e))
}

pub fn validate_path(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    validate_text(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
