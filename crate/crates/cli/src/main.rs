use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pathopt_cli::config::ConfigFile;
use pathopt_cli::synth::{synthesize, PlantChoice, Problem, SynthRequest};
use pathopt_cli::{registry, resolve, run_experiment, validate_path, write_outputs, CliError, GammaChoice, Overrides};

#[derive(Parser)]
#[command(name = "pathopt", version, about = "Pathlength-optimal control and filtering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write a CSV plus a metadata sidecar.
    Run {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Pathlength level: a positive number or "auto".
        #[arg(long)]
        gamma: Option<GammaChoice>,
        /// H∞ baseline level for control experiments.
        #[arg(long)]
        hinf_gamma: Option<GammaChoice>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        decimate: Option<usize>,
        /// Replace the period of the sinusoidal disturbance.
        #[arg(long)]
        period: Option<f64>,
    },
    /// Print γ*, gains and feasibility diagnostics for a plant.
    Synth {
        #[arg(long, value_enum)]
        plant: PlantChoice,
        #[arg(long, value_enum)]
        problem: Option<Problem>,
        #[arg(long, default_value = "auto")]
        gamma: GammaChoice,
        #[arg(long)]
        dt: Option<f64>,
        /// Synthesize a controller that does not see the current disturbance.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// List registered experiments whose name contains FILTER.
    List { filter: Option<String> },
    /// Check a config file without running it.
    Validate {
        path: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn execute(command: Command, out: &mut String) -> Result<(), CliError> {
    match command {
        Command::Run { experiment, config, horizon, seed, gamma, hinf_gamma, output, decimate, period } => {
            let file = config.as_deref().map(ConfigFile::load).transpose()?;
            let overrides = Overrides { experiment, horizon, seed, gamma, hinf_gamma, output, decimate, period };
            let cfg = resolve(file, &overrides)?;
            let result = run_experiment(&cfg)?;
            write_outputs(&result, &cfg)?;
            for (alg, value) in &result.meta.final_values {
                let _ = writeln!(out, "{alg}: {value}");
            }
            let _ = writeln!(out, "wrote {}", cfg.output.display());
        }
        Command::Synth { plant, problem, gamma, dt, strict, json } => {
            let report = synthesize(&SynthRequest { plant, problem, gamma, dt, strictly_causal: strict })?;
            if json {
                let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
                let _ = writeln!(out, "{text}");
            } else {
                let _ = write!(out, "{report}");
            }
            if !report.feasible {
                return Err(CliError::Infeasible(format!("gamma: synthesis infeasible at γ = {}", report.gamma)));
            }
        }
        Command::List { filter } => {
            let pattern = filter.unwrap_or_default();
            for e in registry().iter().filter(|e| e.name.contains(&pattern)) {
                let _ = writeln!(out, "{:<24} {:<8} {}", e.name, e.kind.name(), e.scenario);
            }
        }
        Command::Validate { path, config } => {
            let path = path
                .or(config)
                .ok_or_else(|| CliError::Config("config: no path given".into()))?;
            let cfg = validate_path(&path)?;
            let _ = writeln!(out, "ok: {} ({} experiment, horizon {})", path.display(), cfg.experiment.name, cfg.horizon);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let status = execute(cli.command, &mut out);
    // A closed pipe downstream is not an error of this tool.
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
    match status {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
