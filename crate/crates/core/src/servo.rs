//! Peek / pick up / place / inspect, with iterative visual-servo centering.
//!
//! The servo loop holds the camera height fixed, measures the planar offset
//! of the target knob pair, and moves by `gain` times that offset until the
//! measurement is within threshold. Mechanical attempts are made from the
//! final pose; height is not part of the model.

use nalgebra::Rotation2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PlanarOffset, Pose2, TiltAngles, ToolPose};
use crate::knob::{EstimatorError, KnobEstimator};
use crate::mask_io::Observation;
use crate::sim::{Attempt, AttemptOutcome, BrickId, PlaceSite, SimError, Target, World};
use crate::tilt::{tilt_from_reflection, ReflectionMeasurement};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServoError {
    #[error("invalid servo config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServoConfig {
    /// Converged when the measured translation is at most this, mm.
    pub threshold_mm: f64,
    /// ... and the measured yaw at most this, degrees.
    pub threshold_deg: f64,
    pub max_iterations: usize,
    /// Fraction of each measured offset applied per move.
    pub gain: f64,
    /// Inspection flags a defect above this tilt, degrees.
    pub tilt_defect_deg: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        ServoConfig {
            threshold_mm: 0.1,
            threshold_deg: 0.2,
            max_iterations: 10,
            gain: 1.0,
            tilt_defect_deg: 0.5,
        }
    }
}

impl ServoConfig {
    pub fn validate(&self) -> Result<(), ServoError> {
        let ok = self.threshold_mm > 0.0
            && self.threshold_deg > 0.0
            && self.max_iterations >= 1
            && self.gain > 0.0
            && self.gain <= 1.0
            && self.tilt_defect_deg >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ServoError::Config(format!("{self:?}")))
        }
    }

    pub fn within_threshold(&self, o: &PlanarOffset) -> bool {
        o.translation_norm() <= self.threshold_mm && o.dyaw_deg.abs() <= self.threshold_deg
    }
}

/// A tool with a camera that can be moved and read.
pub trait Workcell {
    type Target;

    fn commanded_pose(&self) -> ToolPose;
    fn move_to(&mut self, pose: ToolPose) -> Result<(), String>;
    fn capture(&mut self) -> Result<Observation, String>;

    /// True target offset in the tool frame, when the cell knows it.
    fn ground_truth(&self, _target: &Self::Target) -> Option<PlanarOffset> {
        None
    }
}

impl Workcell for World {
    type Target = Target;

    fn commanded_pose(&self) -> ToolPose {
        World::commanded_pose(self)
    }

    fn move_to(&mut self, pose: ToolPose) -> Result<(), String> {
        self.command_move(pose).map_err(|e| e.to_string())
    }

    fn capture(&mut self) -> Result<Observation, String> {
        self.render().map_err(|e| e.to_string())
    }

    fn ground_truth(&self, target: &Target) -> Option<PlanarOffset> {
        self.truth_offset(target).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServoIteration {
    /// Offset measured at the start of the iteration, tool frame.
    pub measured: Option<PlanarOffset>,
    /// Move applied afterwards, board frame.
    pub correction: Option<PlanarOffset>,
    /// Why no offset could be measured.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServoReport {
    pub iterations: Vec<ServoIteration>,
    pub converged: bool,
    /// Last successfully measured offset.
    pub final_offset: Option<PlanarOffset>,
    /// Ground-truth target offset after the loop, when known.
    pub true_residual: Option<PlanarOffset>,
    /// The loop centred on a knob pair other than the intended one.
    pub wrong_pair: bool,
    pub failure: Option<String>,
}

/// Centres the tool over the nearest knob pair.
///
/// Estimation failures (for example no visible pair) use up an iteration
/// and are retried; capture or motion failures end the loop. Running out of
/// iterations yields a report with `converged == false` and a failure
/// message.
pub fn servo_center<W: Workcell>(
    cell: &mut W,
    estimator: &KnobEstimator,
    config: &ServoConfig,
    target: Option<&W::Target>,
) -> ServoReport {
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut final_offset = None;
    let mut failure = None;
    for _ in 0..config.max_iterations {
        let obs = match cell.capture() {
            Ok(o) => o,
            Err(e) => {
                failure = Some(format!("capture failed: {e}"));
                break;
            }
        };
        let measured = match estimator.estimate(&obs) {
            Ok(est) => est.offset,
            Err(e) => {
                iterations.push(ServoIteration {
                    measured: None,
                    correction: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        final_offset = Some(measured);
        if config.within_threshold(&measured) {
            iterations.push(ServoIteration {
                measured: Some(measured),
                correction: None,
                error: None,
            });
            converged = true;
            break;
        }
        let cmd = cell.commanded_pose();
        let t = Rotation2::new(cmd.yaw_deg.to_radians()) * measured.translation() * config.gain;
        let correction = PlanarOffset::new(t.x, t.y, measured.dyaw_deg * config.gain);
        iterations.push(ServoIteration {
            measured: Some(measured),
            correction: Some(correction),
            error: None,
        });
        if let Err(e) = cell.move_to(cmd.shifted(&correction)) {
            failure = Some(format!("move failed: {e}"));
            break;
        }
    }
    if !converged && failure.is_none() {
        failure = Some(format!(
            "not centred after {} iterations",
            config.max_iterations
        ));
    }
    let true_residual = target.and_then(|t| cell.ground_truth(t));
    let half_pitch = estimator.brick.knob_pitch_mm() / 2.0;
    let wrong_pair = true_residual.is_some_and(|r| r.translation_norm() >= half_pitch);
    ServoReport {
        iterations,
        converged,
        final_offset,
        true_residual,
        wrong_pair,
        failure,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Trust the commanded poses.
    OpenLoop,
    /// Peek, servo before picking, and compensate the place.
    ClosedLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Peek,
    PickUp,
    Place,
    Inspection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub position_offset: PlanarOffset,
    pub tilt: TiltAngles,
    pub defect: bool,
}

/// Move one brick onto a place site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManipulationTask {
    pub pick: BrickId,
    pub place: PlaceSite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub policy: Policy,
    /// Calibration error in effect, from simulator ground truth.
    pub delta: PlanarOffset,
    pub peek: Option<ServoReport>,
    /// Place-site error recorded by the peek: nominal minus centred pose.
    pub peek_error: Option<PlanarOffset>,
    pub pick_servo: Option<ServoReport>,
    pub pick: Option<Attempt>,
    pub place: Option<Attempt>,
    pub inspection: Option<InspectionReport>,
    pub failed_step: Option<Step>,
    pub failure: Option<String>,
    /// Both the pick and the place succeeded.
    pub success: bool,
}

impl TrialRecord {
    fn new(policy: Policy, delta: PlanarOffset) -> Self {
        TrialRecord {
            policy,
            delta,
            peek: None,
            peek_error: None,
            pick_servo: None,
            pick: None,
            place: None,
            inspection: None,
            failed_step: None,
            failure: None,
            success: false,
        }
    }

    fn fail(mut self, step: Step, why: impl Into<String>) -> Self {
        self.failed_step = Some(step);
        self.failure = Some(why.into());
        self
    }
}

/// Pose error between where a target was planned and where the tool had to
/// go to centre on it, in the board frame.
fn pose_error(nominal: &ToolPose, reached: &ToolPose) -> PlanarOffset {
    nominal.pose2().offset_from(&reached.pose2())
}

fn view_pose(
    world: &World,
    pose: Pose2,
    target: &Target,
    view_mm: f64,
) -> Result<ToolPose, SimError> {
    let z = world.target_top_mm(target)? + view_mm;
    Ok(ToolPose::planar(pose.x_mm, pose.y_mm, z, pose.yaw_deg))
}

/// Single capture at the current planar pose, `view_mm` above the brick
/// the tool just placed.
pub fn inspect(
    world: &mut World,
    estimator: &KnobEstimator,
    config: &ServoConfig,
    placed: BrickId,
    view_mm: f64,
) -> Result<InspectionReport, String> {
    let top = world
        .target_top_mm(&Target::Brick(placed))
        .map_err(|e| e.to_string())?;
    let pose = ToolPose {
        z_mm: top + view_mm,
        ..world.commanded_pose()
    };
    world.command_move(pose).map_err(|e| e.to_string())?;
    let obs = world.render().map_err(|e| e.to_string())?;
    let est = estimator
        .estimate(&obs)
        .map_err(|e: EstimatorError| e.to_string())?;
    let reflection = obs
        .reflection()
        .ok_or_else(|| "no reflection detected".to_string())?;
    let m = ReflectionMeasurement::from_pixels(
        &reflection,
        &estimator.calibration.expected_reflection(),
        &estimator.cam,
    )
    .map_err(|e| e.to_string())?;
    let tilt = tilt_from_reflection(&m, &estimator.cam);
    Ok(InspectionReport {
        position_offset: est.offset,
        tilt,
        defect: tilt.max_abs() > config.tilt_defect_deg,
    })
}

/// Centres over a place site and records how far it lies from where it
/// was planned, for feed-forward compensation at placement.
pub fn peek(
    world: &mut World,
    estimator: &KnobEstimator,
    config: &ServoConfig,
    site: &PlaceSite,
    view_mm: f64,
) -> (ServoReport, Option<PlanarOffset>) {
    let target = Target::Site(*site);
    let nominal = match view_pose(world, site.pose, &target, view_mm) {
        Ok(p) => p,
        Err(e) => return (failed_report(e.to_string()), None),
    };
    if let Err(e) = world.command_move(nominal) {
        return (failed_report(e.to_string()), None);
    }
    let report = servo_center(world, estimator, config, Some(&target));
    let error = report
        .converged
        .then(|| pose_error(&nominal, &world.commanded_pose()));
    (report, error)
}

fn failed_report(why: String) -> ServoReport {
    ServoReport {
        iterations: Vec::new(),
        converged: false,
        final_offset: None,
        true_residual: None,
        wrong_pair: false,
        failure: Some(why),
    }
}

/// Runs peek, pick up, place and inspection in order.
///
/// Closed loop peeks at the place site, servo-centres over the brick before
/// picking, and places at the nominal site pose corrected by the peek
/// error. Open loop moves straight to nominal poses. Any failing step ends
/// the trial with that step recorded.
pub fn run_manipulation(
    world: &mut World,
    estimator: &KnobEstimator,
    config: &ServoConfig,
    task: &ManipulationTask,
    policy: Policy,
    view_mm: f64,
) -> TrialRecord {
    let mut rec = TrialRecord::new(policy, world.calibration_error());

    // Peek.
    let mut compensation = PlanarOffset::ZERO;
    if policy == Policy::ClosedLoop {
        let (report, error) = peek(world, estimator, config, &task.place, view_mm);
        rec.peek = Some(report.clone());
        match error {
            Some(e) => {
                rec.peek_error = Some(e);
                compensation = e;
            }
            None => {
                let why = report.failure.unwrap_or_else(|| "peek failed".into());
                return rec.fail(Step::Peek, why);
            }
        }
    }

    // Pick up.
    let brick_target = Target::Brick(task.pick);
    let pick_pose = match world
        .target_pose(&brick_target)
        .and_then(|p| view_pose(world, p, &brick_target, view_mm))
    {
        Ok(p) => p,
        Err(e) => return rec.fail(Step::PickUp, e.to_string()),
    };
    if let Err(e) = world.command_move(pick_pose) {
        return rec.fail(Step::PickUp, e.to_string());
    }
    if policy == Policy::ClosedLoop {
        let report = servo_center(world, estimator, config, Some(&brick_target));
        let ok = report.converged;
        let why = report.failure.clone();
        rec.pick_servo = Some(report);
        if !ok {
            return rec.fail(Step::PickUp, why.unwrap_or_default());
        }
    }
    match world.attempt_pick(task.pick) {
        Ok(a) => {
            rec.pick = Some(a);
            if a.outcome != AttemptOutcome::Success {
                return rec.fail(Step::PickUp, format!("pick {:?}", a.outcome));
            }
        }
        Err(e) => return rec.fail(Step::PickUp, e.to_string()),
    }

    // Place.
    let site_target = Target::Site(task.place);
    let place_pose = match view_pose(world, task.place.pose, &site_target, view_mm) {
        Ok(p) => p.with_pose2(Pose2::new(
            p.x_mm - compensation.dx_mm,
            p.y_mm - compensation.dy_mm,
            p.yaw_deg - compensation.dyaw_deg,
        )),
        Err(e) => return rec.fail(Step::Place, e.to_string()),
    };
    if let Err(e) = world.command_move(place_pose) {
        return rec.fail(Step::Place, e.to_string());
    }
    match world.attempt_place(&task.place) {
        Ok(a) => {
            rec.place = Some(a);
            if a.outcome != AttemptOutcome::Success {
                return rec.fail(Step::Place, format!("place {:?}", a.outcome));
            }
        }
        Err(e) => return rec.fail(Step::Place, e.to_string()),
    }
    rec.success = true;

    // Inspection.
    match inspect(world, estimator, config, task.pick, view_mm) {
        Ok(r) => rec.inspection = Some(r),
        Err(e) => return rec.fail(Step::Inspection, e),
    }
    rec
}
