//! Command-line front end: `simulate`, `smooth`, `metrics` and `unit-circle`.
//!
//! Settings come from an optional `--config` file, then `--set key=value`
//! overrides, then the dedicated flags. Exit codes: 0 ok, 2 configuration or
//! input error, 3 non-convergence, 4 underconstrained graph, 1 anything else.

mod commands;
mod config;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::fgraph::GraphError;
use crate::simkit::SimError;
use crate::tracking::TrackingError;

pub use commands::{
    cmd_metrics, cmd_simulate, cmd_smooth, cmd_unitcircle, MetricsOutput, SimulateOutput,
    SmoothOutput, UnitCircleOutput, UnitCircleRow,
};
pub use config::{parse_mode, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_UNDERCONSTRAINED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", match line { Some(l) => format!("config line {l}: {message}"), None => format!("config: {message}") })]
    Config {
        line: Option<usize>,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("{path}, line {row}: {message}")]
    Data {
        path: String,
        row: usize,
        message: String,
    },
    #[error("solver did not converge after {iterations} iterations (cost {final_cost:.6e})")]
    NotConverged { iterations: usize, final_cost: f64 },
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let graph = |g: &GraphError| match g {
            GraphError::Underconstrained { .. } => EXIT_UNDERCONSTRAINED,
            _ => EXIT_FAILURE,
        };
        match self {
            Self::Config { .. } | Self::Io(_) | Self::Data { .. } => EXIT_CONFIG,
            Self::NotConverged { .. } => EXIT_NOT_CONVERGED,
            Self::Graph(g) | Self::Sim(SimError::Graph(g)) => graph(g),
            Self::Sim(SimError::InvalidConfig(_)) => EXIT_CONFIG,
            Self::Sim(_) => EXIT_FAILURE,
            Self::Tracking(t) => match t {
                TrackingError::Graph(g) => graph(g),
                TrackingError::NeedsPrior(_) | TrackingError::OdometryCoverage { .. } => {
                    EXIT_UNDERCONSTRAINED
                }
                TrackingError::InvalidRecord { .. }
                | TrackingError::Ordering { .. }
                | TrackingError::InvalidGate(_)
                | TrackingError::InvalidConfig(_)
                | TrackingError::TruthAlignment { .. } => EXIT_CONFIG,
                TrackingError::Manifold(_) => EXIT_FAILURE,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ctwist",
    version,
    about = "Constant-twist factor-graph smoothing of chaser/target trajectories"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Target model: A (SE(3) throughout) or B (R³ outside optical windows).
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Keyframe time gate in seconds.
    #[arg(long, global = true)]
    pub gate: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate ground truth and a measurement stream.
    Simulate,
    /// Smooth a measurement stream into a keyframe trajectory.
    Smooth {
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Also compute marginal target covariances.
        #[arg(long)]
        covariances: bool,
    },
    /// Compare an estimate with ground truth.
    Metrics {
        #[arg(long)]
        estimate: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Raw measurements for the baseline rows.
        #[arg(long)]
        measurements: Option<PathBuf>,
    },
    /// Run a unit-circle constant-twist fixture.
    UnitCircle {
        /// EXTRAPOLATE, INTERPOLATE or CHAIN.
        #[arg(long)]
        variant: Option<String>,
        /// Standard deviation of the initial tangent-space perturbation.
        #[arg(long)]
        sigma: Option<f64>,
    },
}

fn set(config: &mut RunConfig, key: &str, value: &str) -> Result<(), CliError> {
    config.set(key, value).map_err(|message| CliError::Config {
        line: None,
        message,
    })
}

/// Loads the config file and applies overrides, later sources winning.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let c = &cli.common;
    let mut config = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
                line: None,
                message: format!("{}: {e}", path.display()),
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for o in &c.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| CliError::Config {
            line: None,
            message: format!("--set expects key=value, got '{o}'"),
        })?;
        set(&mut config, k.trim(), v.trim())?;
    }
    if let Some(m) = &c.mode {
        set(&mut config, "mode", m)?;
    }
    if let Some(s) = c.seed {
        set(&mut config, "seed", &s.to_string())?;
    }
    if let Some(g) = c.gate {
        set(&mut config, "gate", &g.to_string())?;
    }
    if let Some(o) = &c.out {
        config.out = o.clone();
    }
    match &cli.command {
        Command::Simulate => {}
        Command::Smooth {
            measurements,
            covariances,
        } => {
            if let Some(m) = measurements {
                config.measurements = Some(m.clone());
            }
            config.covariances |= covariances;
        }
        Command::Metrics {
            estimate,
            truth,
            measurements,
        } => {
            if let Some(e) = estimate {
                config.estimate = Some(e.clone());
            }
            if let Some(t) = truth {
                config.truth = Some(t.clone());
            }
            if let Some(m) = measurements {
                config.measurements = Some(m.clone());
            }
        }
        Command::UnitCircle { variant, sigma } => {
            if let Some(v) = variant {
                set(&mut config, "variant", v)?;
            }
            if let Some(s) = sigma {
                set(&mut config, "unit_sigma", &s.to_string())?;
            }
        }
    }
    Ok(config)
}

/// Runs one parsed command, printing its summary to standard output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = resolve_config(cli)?;
    match cli.command {
        Command::Simulate => print!("{}", cmd_simulate(&config)?.summary()),
        Command::Smooth { .. } => {
            let out = cmd_smooth(&config)?;
            print!("{}", out.report);
            out.check_converged()?;
        }
        Command::Metrics { .. } => print!("{}", cmd_metrics(&config)?.table),
        Command::UnitCircle { .. } => {
            let out = cmd_unitcircle(&config)?;
            print!("{}", out.summary());
            out.check_converged()?;
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_and_set() {
        let cli = Cli::try_parse_from([
            "ctwist", "smooth", "--set", "mode=B", "--set", "gate=3", "--gate", "0.5",
        ])
        .unwrap();
        let c = resolve_config(&cli).unwrap();
        assert_eq!(c.mode, crate::tracking::Mode::B);
        assert_eq!(c.gate, 0.5);
    }

    #[test]
    fn exit_code_mapping() {
        let under = CliError::Tracking(TrackingError::Graph(GraphError::Underconstrained {
            variables: vec!["t1".into()],
        }));
        assert_eq!(under.exit_code(), EXIT_UNDERCONSTRAINED);
        assert_eq!(
            CliError::NotConverged {
                iterations: 3,
                final_cost: 1.0
            }
            .exit_code(),
            EXIT_NOT_CONVERGED
        );
        assert_eq!(
            CliError::Config {
                line: Some(3),
                message: "x".into()
            }
            .exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(run(["ctwist", "simulate", "--mode", "C"]), EXIT_CONFIG);
        assert_eq!(run(["ctwist", "bogus"]), EXIT_CONFIG);
    }
}
