//! `eif`: accuracy and robustness sweeps against the simulator, trial
//! replay, and the teleop bridge.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use eif_core::calibration::CalibrationError;
use eif_core::config::{Config, ConfigError};
use eif_core::experiment::{
    read_robustness_spec, read_trial_log, replay_trial, run_accuracy_sweep, run_robustness_sweep,
    write_accuracy, write_robustness, ExperimentError, SweepSpec,
};
use eif_core::servo::Policy;
use eif_core::sim::{NoiseModel, Scenario, ScenarioError};
use eif_teleop::{BridgeState, TeleopError, TeleopSettings};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "eif",
    version,
    about = "Eye-in-finger perception and servo experiments"
)]
struct Cli {
    /// TOML configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for tables and logs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Axis {
    Xy,
    Yaw,
    Tilt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Open,
    Closed,
    Both,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Jog or tilt over a grid and report the SD of measurement errors.
    Accuracy {
        #[arg(long, value_enum)]
        axis: Axis,
        /// TOML noise model replacing the configured one.
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Pick-and-place success rate against injected calibration error.
    Robustness {
        #[arg(long, default_value_t = 0.4)]
        delta_min: f64,
        #[arg(long, default_value_t = 2.0)]
        delta_max: f64,
        #[arg(long, default_value_t = 0.4)]
        delta_step: f64,
        #[arg(long, default_value_t = 12)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::Both)]
        policy: PolicyArg,
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Re-run every trial in a robustness log and check it reproduces.
    Replay {
        /// Trial log; defaults to `<out>/trials.jsonl`. Overrides recorded in
        /// a `robustness_summary.json` next to it are applied.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Serve the teleoperation bridge.
    TeleopServe {
        /// Scenario TOML; seed, noise, tolerance and calibration error are used.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid noise file {path}: {message}")]
    Noise { path: PathBuf, message: String },
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Teleop(#[from] TeleopError),
    #[error("{failed} of {total} trials did not reproduce")]
    ReplayMismatch { failed: usize, total: usize },
}

impl CliError {
    /// 2 for bad input, 1 for failures while running.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_)
            | CliError::Noise { .. }
            | CliError::Usage(_)
            | CliError::Scenario(_)
            | CliError::Experiment(ExperimentError::Spec(_)) => 2,
            _ => 1,
        }
    }
}

fn load_noise(path: &Path) -> Result<NoiseModel, CliError> {
    let err = |message: String| CliError::Noise {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let noise: NoiseModel = toml::from_str(&text).map_err(|e| err(e.to_string()))?;
    noise.validate().map_err(|e| err(e.to_string()))?;
    Ok(noise)
}

/// `min, min + step, ...` up to `max` inclusive, rounded to 1e-9 mm so the
/// values print cleanly.
fn delta_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) {
        return Err(CliError::Usage("delta bounds must be finite".into()));
    }
    if step <= 0.0 || min < 0.0 || max < min {
        return Err(CliError::Usage(format!(
            "need 0 <= delta-min <= delta-max and delta-step > 0, got {min}, {max}, {step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| ((min + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    match cli.command {
        Cmd::Accuracy { axis, noise } => {
            let mut spec = match axis {
                Axis::Xy => SweepSpec::accuracy_position(config.seed),
                Axis::Yaw => SweepSpec::accuracy_yaw(config.seed),
                Axis::Tilt => SweepSpec::accuracy_tilt(config.seed),
            };
            spec.noise = noise.as_deref().map(load_noise).transpose()?;
            let result = run_accuracy_sweep(&config, &spec)?;
            let files = write_accuracy(&cli.out, &result)?;
            println!(
                "{}: {} points, {} failed",
                spec.kind.name(),
                result.rows.len(),
                result.summary.failures
            );
            for a in &result.summary.axes {
                println!("  {:<12} mean {:+.4}  sd {:.4}", a.axis, a.mean, a.sd);
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Cmd::Robustness {
            delta_min,
            delta_max,
            delta_step,
            trials,
            policy,
            noise,
        } => {
            let mut spec = SweepSpec::robustness(
                delta_grid(delta_min, delta_max, delta_step)?,
                trials,
                config.seed,
            );
            spec.policies = match policy {
                PolicyArg::Open => vec![Policy::OpenLoop],
                PolicyArg::Closed => vec![Policy::ClosedLoop],
                PolicyArg::Both => vec![Policy::OpenLoop, Policy::ClosedLoop],
            };
            spec.noise = noise.as_deref().map(load_noise).transpose()?;
            let result = run_robustness_sweep(&config, &spec)?;
            let files = write_robustness(&cli.out, &result)?;
            println!("{:>8}  {:<12} {:>9}", "delta_mm", "policy", "success");
            for r in &result.rates {
                println!(
                    "{:>8.3}  {:<12} {:>3}/{:<3} {:>5.1}%",
                    r.delta_mm,
                    format!("{:?}", r.policy),
                    r.successes,
                    r.trials,
                    100.0 * r.rate
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Cmd::Replay { log } => {
            let log = log.unwrap_or_else(|| cli.out.join("trials.jsonl"));
            let summary = log.with_file_name("robustness_summary.json");
            if summary.exists() {
                config = read_robustness_spec(&summary)?.effective(&config);
            }
            let trials = read_trial_log(&log)?;
            let calibration = config.reference_calibration()?;
            let mut failed = 0;
            for t in &trials {
                if !replay_trial(&config, calibration, t)? {
                    failed += 1;
                    println!(
                        "mismatch: delta {} trial {} {:?}",
                        t.delta_mm, t.trial, t.record.policy
                    );
                }
            }
            println!(
                "replayed {} trials, {} reproduced",
                trials.len(),
                trials.len() - failed
            );
            if failed > 0 {
                return Err(CliError::ReplayMismatch {
                    failed,
                    total: trials.len(),
                });
            }
        }
        Cmd::TeleopServe {
            scenario,
            port,
            host,
        } => {
            let mut scenario = match scenario {
                Some(p) => Scenario::load(&p)?,
                None => Scenario::default(),
            };
            if let Some(s) = cli.seed {
                scenario.seed = s;
            }
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| CliError::Usage(format!("bad address {host}:{port}: {e}")))?;
            let state = Arc::new(BridgeState::new(
                config,
                scenario,
                TeleopSettings::default(),
            ));
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::Teleop(TeleopError::Serve(e)))?;
            rt.block_on(async {
                let listener = eif_teleop::bind(addr).await?;
                println!(
                    "teleop bridge on ws://{}/ws",
                    listener.local_addr().map_err(TeleopError::Serve)?
                );
                eif_teleop::serve(listener, state).await
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_grid_is_inclusive() {
        assert_eq!(
            delta_grid(0.4, 2.0, 0.4).unwrap(),
            vec![0.4, 0.8, 1.2, 1.6, 2.0]
        );
        assert_eq!(delta_grid(0.0, 0.0, 0.1).unwrap(), vec![0.0]);
        assert_eq!(delta_grid(0.0, 1.0, 0.3).unwrap(), vec![0.0, 0.3, 0.6, 0.9]);
    }

    #[test]
    fn delta_grid_rejects_bad_bounds() {
        assert!(delta_grid(0.4, 2.0, 0.0).is_err());
        assert!(delta_grid(2.0, 0.4, 0.4).is_err());
        assert!(delta_grid(-1.0, 0.4, 0.4).is_err());
        assert!(delta_grid(0.0, f64::INFINITY, 0.4).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
