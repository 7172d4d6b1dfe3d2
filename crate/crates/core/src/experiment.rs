//! Accuracy and robustness sweeps against the simulator.
//!
//! Accuracy sweeps jog the tool (or tilt the brick) over a grid with the
//! calibration error at zero and compare each measurement with ground
//! truth. Robustness sweeps run full manipulation trials under injected
//! calibration errors, open and closed loop. Outputs are CSV tables, a JSON
//! summary, and for robustness a JSON-lines trial log; nothing in them
//! depends on timing, so equal specs produce equal bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{Calibration, CalibrationError};
use crate::config::Config;
use crate::geometry::{Pose2, TiltAngles, ToolPose};
use crate::knob::KnobEstimator;
use crate::servo::{run_manipulation, ManipulationTask, Policy, Step, TrialRecord};
use crate::sim::{
    AttemptOutcome, NoiseModel, Scenario, ScenarioError, SimError, Target, ToleranceModel, World,
};
use crate::tilt::{tilt_from_reflection, ReflectionMeasurement};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    AccuracyPosition,
    AccuracyYaw,
    AccuracyTilt,
    Robustness,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::AccuracyPosition => "accuracy_xy",
            SweepKind::AccuracyYaw => "accuracy_yaw",
            SweepKind::AccuracyTilt => "accuracy_tilt",
            SweepKind::Robustness => "robustness",
        }
    }
}

/// What to sweep.
///
/// For position and tilt the grid is one axis and the sweep covers its
/// Cartesian square; for yaw it is the list of yaw jogs; for robustness the
/// list of calibration-error magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub noise: Option<NoiseModel>,
    pub tolerance: Option<ToleranceModel>,
    pub policies: Vec<Policy>,
}

fn symmetric_grid(step: f64, steps_each_side: i32) -> Vec<f64> {
    (-steps_each_side..=steps_each_side)
        .map(|i| i as f64 * step)
        .collect()
}

impl SweepSpec {
    fn accuracy(kind: SweepKind, grid: Vec<f64>, seed: u64) -> Self {
        SweepSpec {
            kind,
            grid,
            trials: 1,
            seed,
            noise: None,
            tolerance: None,
            policies: Vec::new(),
        }
    }

    /// 7×7 tool jogs in 0.5 mm steps, three each way.
    pub fn accuracy_position(seed: u64) -> Self {
        Self::accuracy(SweepKind::AccuracyPosition, symmetric_grid(0.5, 3), seed)
    }

    /// Nine yaw jogs in 2° steps.
    pub fn accuracy_yaw(seed: u64) -> Self {
        Self::accuracy(SweepKind::AccuracyYaw, symmetric_grid(2.0, 4), seed)
    }

    /// 7×7 brick tilts in 2° steps.
    pub fn accuracy_tilt(seed: u64) -> Self {
        Self::accuracy(SweepKind::AccuracyTilt, symmetric_grid(2.0, 3), seed)
    }

    pub fn robustness(deltas: Vec<f64>, trials: usize, seed: u64) -> Self {
        SweepSpec {
            kind: SweepKind::Robustness,
            grid: deltas,
            trials,
            seed,
            noise: None,
            tolerance: None,
            policies: vec![Policy::OpenLoop, Policy::ClosedLoop],
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.grid.is_empty() {
            return Err(ExperimentError::Spec("empty grid".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(ExperimentError::Spec("non-finite grid value".into()));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Spec("trials must be at least 1".into()));
        }
        if self.kind == SweepKind::Robustness {
            if self.policies.is_empty() {
                return Err(ExperimentError::Spec("no policies".into()));
            }
            if self.grid.iter().any(|d| *d < 0.0) {
                return Err(ExperimentError::Spec("negative calibration error".into()));
            }
        }
        Ok(())
    }

    /// Number of output rows the sweep produces.
    pub fn row_count(&self) -> usize {
        match self.kind {
            SweepKind::AccuracyPosition | SweepKind::AccuracyTilt => {
                self.grid.len() * self.grid.len()
            }
            SweepKind::AccuracyYaw => self.grid.len(),
            SweepKind::Robustness => self.grid.len() * self.trials * self.policies.len(),
        }
    }

    /// `config` with this spec's noise and tolerance overrides applied.
    pub fn effective(&self, config: &Config) -> Config {
        let mut c = config.clone();
        if let Some(n) = self.noise {
            c.noise = n;
        }
        if let Some(t) = self.tolerance {
            c.tolerance = t;
        }
        c
    }
}

/// One accuracy measurement. Position and yaw rows use `(x mm, y mm, yaw°)`;
/// tilt rows use `(θx°, θy°)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub index: usize,
    pub truth: Vec<f64>,
    pub measured: Option<Vec<f64>>,
    pub error: Option<Vec<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisStats {
    pub axis: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub kind: SweepKind,
    pub seed: u64,
    pub rows: usize,
    pub failures: usize,
    pub axes: Vec<AxisStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyResult {
    pub spec: SweepSpec,
    pub axis_names: Vec<String>,
    pub rows: Vec<AccuracyRow>,
    pub summary: AccuracySummary,
}

impl AccuracyResult {
    pub fn sd(&self, axis: &str) -> Option<f64> {
        self.summary
            .axes
            .iter()
            .find(|a| a.axis == axis)
            .map(|a| a.sd)
    }
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn accuracy_world(config: &Config, seed: u64) -> Result<World, ExperimentError> {
    let mut w = World::new(
        config.camera,
        config.noise,
        config.tolerance,
        config.sim,
        seed,
    )?;
    w.add_brick(config.brick, Pose2::default(), 0)?;
    Ok(w)
}

pub fn run_accuracy_sweep(
    config: &Config,
    spec: &SweepSpec,
) -> Result<AccuracyResult, ExperimentError> {
    spec.validate()?;
    let config = spec.effective(config);
    let calibration = config.reference_calibration()?;
    let estimator = config.estimator(calibration);
    let mut world = accuracy_world(&config, spec.seed)?;
    let z = world.target_top_mm(&Target::Brick(0))? + config.estimator.view_distance_mm;

    let (axis_names, rows): (Vec<&str>, Vec<AccuracyRow>) = match spec.kind {
        SweepKind::AccuracyPosition | SweepKind::AccuracyYaw => {
            let jogs: Vec<(f64, f64, f64)> = if spec.kind == SweepKind::AccuracyPosition {
                spec.grid
                    .iter()
                    .flat_map(|y| spec.grid.iter().map(move |x| (*x, *y, 0.0)))
                    .collect()
            } else {
                spec.grid.iter().map(|yaw| (0.0, 0.0, *yaw)).collect()
            };
            let rows = jogs
                .iter()
                .enumerate()
                .map(|(i, &(x, y, yaw))| {
                    measure_offset(&mut world, &estimator, i, ToolPose::planar(x, y, z, yaw))
                })
                .collect::<Result<_, _>>()?;
            (vec!["x_mm", "y_mm", "yaw_deg"], rows)
        }
        SweepKind::AccuracyTilt => {
            world.command_move(ToolPose::planar(0.0, 0.0, z, 0.0))?;
            let tilts: Vec<TiltAngles> = spec
                .grid
                .iter()
                .flat_map(|ty| spec.grid.iter().map(move |tx| TiltAngles::new(*tx, *ty)))
                .collect();
            let rows = tilts
                .iter()
                .enumerate()
                .map(|(i, t)| measure_tilt(&mut world, &estimator, i, *t))
                .collect::<Result<_, _>>()?;
            (vec!["theta_x_deg", "theta_y_deg"], rows)
        }
        SweepKind::Robustness => {
            return Err(ExperimentError::Spec(
                "robustness is not an accuracy sweep".into(),
            ))
        }
    };

    let axes = axis_names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let errs: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| e[k]))
                .collect();
            let (mean, sd) = mean_sd(&errs);
            AxisStats {
                axis: name.to_string(),
                mean,
                sd,
            }
        })
        .collect();
    let summary = AccuracySummary {
        kind: spec.kind,
        seed: spec.seed,
        rows: rows.len(),
        failures: rows.iter().filter(|r| r.failure.is_some()).count(),
        axes,
    };
    Ok(AccuracyResult {
        spec: spec.clone(),
        axis_names: axis_names.iter().map(|s| s.to_string()).collect(),
        rows,
        summary,
    })
}

fn measure_offset(
    world: &mut World,
    estimator: &KnobEstimator,
    index: usize,
    pose: ToolPose,
) -> Result<AccuracyRow, ExperimentError> {
    world.command_move(pose)?;
    let t = world.truth_offset(&Target::Brick(0))?;
    let truth = vec![t.dx_mm, t.dy_mm, t.dyaw_deg];
    let obs = world.render()?;
    Ok(match estimator.estimate(&obs) {
        Ok(est) => {
            let m = est.offset;
            let measured = vec![m.dx_mm, m.dy_mm, m.dyaw_deg];
            let error = measured.iter().zip(&truth).map(|(a, b)| a - b).collect();
            AccuracyRow {
                index,
                truth,
                measured: Some(measured),
                error: Some(error),
                failure: None,
            }
        }
        Err(e) => AccuracyRow {
            index,
            truth,
            measured: None,
            error: None,
            failure: Some(e.to_string()),
        },
    })
}

fn measure_tilt(
    world: &mut World,
    estimator: &KnobEstimator,
    index: usize,
    tilt: TiltAngles,
) -> Result<AccuracyRow, ExperimentError> {
    world.set_brick_tilt(0, tilt)?;
    let truth = vec![tilt.theta_x_deg, tilt.theta_y_deg];
    let obs = world.render()?;
    let measured = obs
        .reflection()
        .ok_or_else(|| "no reflection detected".to_string())
        .and_then(|p| {
            ReflectionMeasurement::from_pixels(
                &p,
                &estimator.calibration.expected_reflection(),
                &estimator.cam,
            )
            .map_err(|e| e.to_string())
        })
        .map(|m| tilt_from_reflection(&m, &estimator.cam));
    Ok(match measured {
        Ok(m) => {
            let measured = vec![m.theta_x_deg, m.theta_y_deg];
            let error = measured.iter().zip(&truth).map(|(a, b)| a - b).collect();
            AccuracyRow {
                index,
                truth,
                measured: Some(measured),
                error: Some(error),
                failure: None,
            }
        }
        Err(e) => AccuracyRow {
            index,
            truth,
            measured: None,
            error: None,
            failure: Some(e),
        },
    })
}

/// One manipulation trial of a robustness sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTrial {
    pub delta_mm: f64,
    pub trial: usize,
    pub seed: u64,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub delta_mm: f64,
    pub policy: Policy,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub spec: SweepSpec,
    pub trials: Vec<RobustnessTrial>,
    pub rates: Vec<SuccessRate>,
}

impl RobustnessResult {
    pub fn rate(&self, delta_mm: f64, policy: Policy) -> Option<f64> {
        self.rates
            .iter()
            .find(|r| r.policy == policy && (r.delta_mm - delta_mm).abs() < 1e-9)
            .map(|r| r.rate)
    }
}

/// Seed of trial `k` (delta-major) derived from the sweep seed; both
/// policies of a trial share it, so they face the same calibration error.
pub fn trial_seed(sweep_seed: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(sweep_seed);
    rng.set_stream(k);
    rng.next_u64()
}

pub fn run_robustness_sweep(
    config: &Config,
    spec: &SweepSpec,
) -> Result<RobustnessResult, ExperimentError> {
    spec.validate()?;
    if spec.kind != SweepKind::Robustness {
        return Err(ExperimentError::Spec("not a robustness sweep".into()));
    }
    let config = spec.effective(config);
    let calibration = config.reference_calibration()?;
    let estimator = config.estimator(calibration);

    let jobs: Vec<(f64, usize, Policy)> = spec
        .grid
        .iter()
        .flat_map(|d| {
            (0..spec.trials).flat_map(move |t| spec.policies.iter().map(move |p| (*d, t, *p)))
        })
        .collect();
    let trials = jobs
        .par_iter()
        .enumerate()
        .map(|(j, &(delta, trial, policy))| {
            let k = (j / spec.policies.len()) as u64;
            let seed = trial_seed(spec.seed, k);
            let record = run_trial(&config, &estimator, delta, seed, policy)?;
            Ok(RobustnessTrial {
                delta_mm: delta,
                trial,
                seed,
                record,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let rates = spec
        .grid
        .iter()
        .flat_map(|d| spec.policies.iter().map(move |p| (*d, *p)))
        .map(|(d, p)| {
            let sel: Vec<_> = trials
                .iter()
                .filter(|t| t.delta_mm == d && t.record.policy == p)
                .collect();
            let successes = sel.iter().filter(|t| t.record.success).count();
            SuccessRate {
                delta_mm: d,
                policy: p,
                trials: sel.len(),
                successes,
                rate: successes as f64 / sel.len() as f64,
            }
        })
        .collect();
    Ok(RobustnessResult {
        spec: spec.clone(),
        trials,
        rates,
    })
}

/// One manipulation trial on the default scenario with a calibration error
/// of `delta_mm` in a direction drawn from `seed`.
pub fn run_trial(
    config: &Config,
    estimator: &KnobEstimator,
    delta_mm: f64,
    seed: u64,
    policy: Policy,
) -> Result<TrialRecord, ExperimentError> {
    let scenario = Scenario {
        seed,
        noise: config.noise,
        tolerance: config.tolerance,
        calibration_error_mm: Some(delta_mm),
        ..Scenario::default()
    };
    let mut built = scenario.build(config.camera, config.brick, config.sim)?;
    let task = ManipulationTask {
        pick: built.pick.expect("default scenario has a task"),
        place: built.place.expect("default scenario has a task"),
    };
    Ok(run_manipulation(
        &mut built.world,
        estimator,
        &config.servo,
        &task,
        policy,
        config.estimator.view_distance_mm,
    ))
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `<kind>.csv` and `<kind>_summary.json`; returns their paths.
pub fn write_accuracy(
    dir: &Path,
    result: &AccuracyResult,
) -> Result<Vec<PathBuf>, ExperimentError> {
    ensure_dir(dir)?;
    let name = result.spec.kind.name();
    let csv_path = dir.join(format!("{name}.csv"));
    let csv_err = |source| ExperimentError::Csv {
        path: csv_path.clone(),
        source,
    };
    let mut w = csv::Writer::from_writer(create(&csv_path)?);
    let mut header = vec!["index".to_string()];
    for prefix in ["truth", "measured", "error"] {
        header.extend(result.axis_names.iter().map(|a| format!("{prefix}_{a}")));
    }
    header.push("failure".into());
    w.write_record(&header).map_err(csv_err)?;
    for row in &result.rows {
        let blank = vec![String::new(); result.axis_names.len()];
        let cells = |v: &Option<Vec<f64>>| {
            v.as_ref()
                .map(|v| v.iter().map(|x| fmt_f(*x)).collect())
                .unwrap_or_else(|| blank.clone())
        };
        let mut rec = vec![row.index.to_string()];
        rec.extend(row.truth.iter().map(|x| fmt_f(*x)));
        rec.extend(cells(&row.measured));
        rec.extend(cells(&row.error));
        rec.push(row.failure.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: csv_path.clone(),
        source,
    })?;
    let summary_path = dir.join(format!("{name}_summary.json"));
    write_json(&summary_path, &result.summary)?;
    Ok(vec![csv_path, summary_path])
}

#[derive(Serialize)]
struct RobustnessCsvRow {
    delta_mm: String,
    trial: usize,
    policy: Policy,
    seed: u64,
    success: bool,
    failed_step: String,
    pick_outcome: String,
    pick_residual_mm: String,
    place_outcome: String,
    place_residual_mm: String,
    servo_iterations: usize,
    wrong_pair: bool,
}

fn outcome_name(o: Option<AttemptOutcome>) -> String {
    match o {
        Some(AttemptOutcome::Success) => "success".into(),
        Some(AttemptOutcome::Collision) => "collision".into(),
        Some(AttemptOutcome::Miss) => "miss".into(),
        None => String::new(),
    }
}

fn step_name(s: Option<Step>) -> String {
    match s {
        Some(Step::Peek) => "peek".into(),
        Some(Step::PickUp) => "pick_up".into(),
        Some(Step::Place) => "place".into(),
        Some(Step::Inspection) => "inspection".into(),
        None => String::new(),
    }
}

/// Writes `robustness.csv`, `robustness_summary.json` and `trials.jsonl`;
/// returns their paths.
pub fn write_robustness(
    dir: &Path,
    result: &RobustnessResult,
) -> Result<Vec<PathBuf>, ExperimentError> {
    ensure_dir(dir)?;
    let csv_path = dir.join("robustness.csv");
    let csv_err = |source| ExperimentError::Csv {
        path: csv_path.clone(),
        source,
    };
    let mut w = csv::Writer::from_writer(create(&csv_path)?);
    for t in &result.trials {
        let r = &t.record;
        let iterations = r.peek.as_ref().map_or(0, |s| s.iterations.len())
            + r.pick_servo.as_ref().map_or(0, |s| s.iterations.len());
        let wrong = r.peek.as_ref().is_some_and(|s| s.wrong_pair)
            || r.pick_servo.as_ref().is_some_and(|s| s.wrong_pair);
        w.serialize(RobustnessCsvRow {
            delta_mm: fmt_f(t.delta_mm),
            trial: t.trial,
            policy: r.policy,
            seed: t.seed,
            success: r.success,
            failed_step: step_name(r.failed_step),
            pick_outcome: outcome_name(r.pick.map(|a| a.outcome)),
            pick_residual_mm: r
                .pick
                .map(|a| fmt_f(a.residual.translation_norm()))
                .unwrap_or_default(),
            place_outcome: outcome_name(r.place.map(|a| a.outcome)),
            place_residual_mm: r
                .place
                .map(|a| fmt_f(a.residual.translation_norm()))
                .unwrap_or_default(),
            servo_iterations: iterations,
            wrong_pair: wrong,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: csv_path.clone(),
        source,
    })?;

    let summary_path = dir.join("robustness_summary.json");
    write_json(
        &summary_path,
        &serde_json::json!({
            "kind": result.spec.kind,
            "seed": result.spec.seed,
            "trials_per_delta": result.spec.trials,
            "rates": result.rates,
            "spec": result.spec,
        }),
    )?;

    let log_path = dir.join("trials.jsonl");
    let mut log = create(&log_path)?;
    let io_err = |source| ExperimentError::Io {
        path: log_path.clone(),
        source,
    };
    for t in &result.trials {
        let line = serde_json::to_string(t).expect("trial serializes");
        writeln!(log, "{line}").map_err(io_err)?;
    }
    log.flush().map_err(io_err)?;
    Ok(vec![csv_path, summary_path, log_path])
}

/// Reads a trial log written by [`write_robustness`].
pub fn read_trial_log(path: &Path) -> Result<Vec<RobustnessTrial>, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| ExperimentError::Spec(format!("bad trial record: {e}")))
        })
        .collect()
}

/// Reads the sweep spec stored in a `robustness_summary.json`.
pub fn read_robustness_spec(path: &Path) -> Result<SweepSpec, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    #[derive(Deserialize)]
    struct Summary {
        spec: SweepSpec,
    }
    serde_json::from_str::<Summary>(&text)
        .map(|s| s.spec)
        .map_err(|e| ExperimentError::Spec(format!("bad summary {}: {e}", path.display())))
}

/// Re-runs a logged trial and reports whether it reproduces exactly.
pub fn replay_trial(
    config: &Config,
    calibration: Calibration,
    trial: &RobustnessTrial,
) -> Result<bool, ExperimentError> {
    let estimator = config.estimator(calibration);
    let again = run_trial(
        config,
        &estimator,
        trial.delta_mm,
        trial.seed,
        trial.record.policy,
    )?;
    Ok(again == trial.record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_expected_sizes() {
        assert_eq!(SweepSpec::accuracy_position(0).row_count(), 49);
        assert_eq!(SweepSpec::accuracy_yaw(0).row_count(), 9);
        assert_eq!(SweepSpec::accuracy_tilt(0).row_count(), 49);
        assert_eq!(SweepSpec::robustness(vec![0.4, 0.8], 12, 0).row_count(), 48);
        assert_eq!(SweepSpec::accuracy_position(0).grid[0], -1.5);
        assert_eq!(SweepSpec::accuracy_yaw(0).grid[8], 8.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = SweepSpec::accuracy_yaw(0);
        s.grid.clear();
        assert!(s.validate().is_err());
        let mut s = SweepSpec::robustness(vec![1.0], 0, 0);
        assert!(s.validate().is_err());
        s.trials = 1;
        s.grid = vec![-1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_eq!(trial_seed(1, 5), trial_seed(1, 5));
    }
}
