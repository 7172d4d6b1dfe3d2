//! One operator trial: a seeded world, a trial clock and a command log.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use eif_core::config::Config;
use eif_core::geometry::{Pose2, ToolPose};
use eif_core::sim::{AttemptOutcome, BrickId, Scenario, Target, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frame::{eif_raster, encode_png_base64, state_digest, third_person_raster};
use crate::protocol::{
    Command, ErrorCode, ServerMessage, TrialOutcome, ViewMode, PROTOCOL_VERSION,
};
use crate::TeleopError;

/// Millisecond time source. Readings need not be monotone; the session
/// clamps them.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        SystemClock(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

/// Hand-driven clock for tests and replays.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock(AtomicU64::new(start_ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeleopSettings {
    /// Largest translation per jog.
    pub max_jog_mm: f64,
    /// Largest rotation per jog.
    pub max_jog_deg: f64,
    /// Distance from the start pose to the brick's grip point.
    pub brick_distance_mm: f64,
    /// Brick yaw is drawn uniformly from `±brick_yaw_range_deg`.
    pub brick_yaw_range_deg: f64,
}

impl Default for TeleopSettings {
    fn default() -> Self {
        TeleopSettings {
            max_jog_mm: 10.0,
            max_jog_deg: 10.0,
            brick_distance_mm: 100.0,
            brick_yaw_range_deg: 10.0,
        }
    }
}

pub struct TeleopSession {
    id: String,
    config: Config,
    scenario: Scenario,
    settings: TeleopSettings,
    clock: Arc<dyn Clock>,
    seed: u64,
    world: World,
    brick: BrickId,
    view: ViewMode,
    seq: u64,
    last_ms: u64,
    trial_start_ms: u64,
    log: Vec<Command>,
    outcome: Option<TrialOutcome>,
}

impl std::fmt::Debug for TeleopSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TeleopSession")
            .field("id", &self.id)
            .field("seed", &self.seed)
            .field("seq", &self.seq)
            .field("view", &self.view)
            .field("outcome", &self.outcome)
            .finish_non_exhaustive()
    }
}

/// Builds the trial world: one brick at `brick_distance_mm` from the start
/// pose in a seeded direction, and the scenario's calibration error.
fn build_world(
    config: &Config,
    scenario: &Scenario,
    settings: &TeleopSettings,
    seed: u64,
) -> Result<(World, BrickId), TeleopError> {
    let mut world = World::new(
        config.camera,
        scenario.noise,
        scenario.tolerance,
        config.sim,
        seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let angle: f64 = rng.random_range(0.0..TAU);
    let yaw = if settings.brick_yaw_range_deg > 0.0 {
        rng.random_range(-settings.brick_yaw_range_deg..=settings.brick_yaw_range_deg)
    } else {
        0.0
    };
    let d = settings.brick_distance_mm;
    let brick = world.add_brick(
        config.brick,
        Pose2::new(d * angle.cos(), d * angle.sin(), yaw),
        0,
    )?;
    if let Some(delta) = scenario.calibration_error {
        world.set_calibration_error(delta);
    } else if let Some(m) = scenario.calibration_error_mm {
        world.inject_calibration_error(m)?;
    }
    let z = config.sim.brick_height_mm + config.estimator.view_distance_mm;
    world.command_move(ToolPose::planar(0.0, 0.0, z, 0.0))?;
    Ok((world, brick))
}

impl TeleopSession {
    pub fn new(
        id: impl Into<String>,
        config: Config,
        scenario: Scenario,
        settings: TeleopSettings,
        seed: u64,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, TeleopError> {
        let (world, brick) = build_world(&config, &scenario, &settings, seed)?;
        let now = clock.now_ms();
        Ok(TeleopSession {
            id: id.into(),
            config,
            scenario,
            settings,
            clock,
            seed,
            world,
            brick,
            view: ViewMode::Eif,
            seq: 0,
            last_ms: now,
            trial_start_ms: now,
            log: Vec::new(),
            outcome: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn brick(&self) -> BrickId {
        self.brick
    }

    pub fn view(&self) -> ViewMode {
        self.view
    }

    /// Accepted commands of the current trial.
    pub fn log(&self) -> &[Command] {
        &self.log
    }

    pub fn outcome(&self) -> Option<&TrialOutcome> {
        self.outcome.as_ref()
    }

    /// Brick grip pose relative to the actual tool.
    pub fn ground_truth(&self) -> Result<eif_core::geometry::PlanarOffset, TeleopError> {
        Ok(self.world.truth_offset(&Target::Brick(self.brick))?)
    }

    fn now(&mut self) -> u64 {
        self.last_ms = self.last_ms.max(self.clock.now_ms());
        self.last_ms
    }

    pub fn trial_ms(&mut self) -> u64 {
        self.now() - self.trial_start_ms
    }

    pub fn hello(&self) -> ServerMessage {
        ServerMessage::Hello {
            protocol: PROTOCOL_VERSION,
            session: self.id.clone(),
            seed: self.seed,
            view: self.view,
            tool: self.world.commanded_pose(),
            width: self.config.camera.width(),
            height: self.config.camera.height(),
        }
    }

    /// Renders the current view as the next frame.
    pub fn frame(&mut self) -> Result<ServerMessage, TeleopError> {
        let (w, h) = (self.config.camera.width(), self.config.camera.height());
        let img = match self.view {
            ViewMode::Eif => {
                let obs = self.world.render()?;
                let (c, r) = self.world.aperture();
                eif_raster(&obs, (c.x, c.y, r))
            }
            ViewMode::ThirdPerson => third_person_raster(&self.world, w, h),
        };
        let png = encode_png_base64(&img)?;
        self.seq += 1;
        Ok(ServerMessage::Frame {
            seq: self.seq,
            view: self.view,
            width: w,
            height: h,
            png,
            digest: state_digest(&self.world),
            trial_ms: self.trial_ms(),
            tool: self.world.commanded_pose(),
        })
    }

    fn error(code: ErrorCode, message: impl Into<String>) -> Vec<ServerMessage> {
        vec![ServerMessage::Error {
            code,
            message: message.into(),
        }]
    }

    fn frame_or_error(&mut self, mut before: Vec<ServerMessage>) -> Vec<ServerMessage> {
        match self.frame() {
            Ok(f) => before.push(f),
            Err(e) => before.push(ServerMessage::Error {
                code: ErrorCode::RenderFailed,
                message: e.to_string(),
            }),
        }
        before
    }

    /// Parses and applies one text message.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<Command>(text) {
            Ok(cmd) => self.handle(&cmd),
            Err(e) => Self::error(ErrorCode::Malformed, e.to_string()),
        }
    }

    /// Applies a command. Accepted commands reply with a frame (preceded by
    /// the outcome for a pick); rejected ones with a single error and no
    /// state change.
    pub fn handle(&mut self, cmd: &Command) -> Vec<ServerMessage> {
        match *cmd {
            Command::Jog {
                dx_mm,
                dy_mm,
                dyaw_deg,
            } => {
                if self.outcome.is_some() {
                    return Self::error(ErrorCode::TrialFinished, "trial ended; send reset");
                }
                let step = dx_mm.hypot(dy_mm);
                if !(step <= self.settings.max_jog_mm
                    && dyaw_deg.abs() <= self.settings.max_jog_deg)
                {
                    return Self::error(
                        ErrorCode::JogTooLarge,
                        format!(
                            "jog limited to {} mm and {} deg per command",
                            self.settings.max_jog_mm, self.settings.max_jog_deg
                        ),
                    );
                }
                let p = self.world.commanded_pose();
                let target = ToolPose {
                    x_mm: p.x_mm + dx_mm,
                    y_mm: p.y_mm + dy_mm,
                    yaw_deg: p.yaw_deg + dyaw_deg,
                    ..p
                };
                if let Err(e) = self.world.command_move(target) {
                    return Self::error(ErrorCode::OutOfWorkspace, e.to_string());
                }
                self.log.push(cmd.clone());
                self.frame_or_error(Vec::new())
            }
            Command::SetView { view } => {
                self.view = view;
                self.log.push(cmd.clone());
                self.frame_or_error(Vec::new())
            }
            Command::AttemptPick => {
                if self.outcome.is_some() {
                    return Self::error(ErrorCode::TrialFinished, "trial ended; send reset");
                }
                let attempt = match self.world.attempt_pick(self.brick) {
                    Ok(a) => a,
                    Err(e) => return Self::error(ErrorCode::Internal, e.to_string()),
                };
                self.log.push(cmd.clone());
                let outcome = TrialOutcome {
                    seed: self.seed,
                    outcome: attempt.outcome,
                    success: attempt.outcome == AttemptOutcome::Success,
                    residual: attempt.residual,
                    residual_mm: attempt.residual.translation_norm(),
                    elapsed_ms: self.trial_ms(),
                    commands: self.log.len(),
                };
                self.outcome = Some(outcome);
                let msg = ServerMessage::Outcome {
                    seq: self.seq + 1,
                    outcome,
                };
                self.frame_or_error(vec![msg])
            }
            Command::Reset { seed } => {
                let seed = seed.unwrap_or(self.seed.wrapping_add(1));
                match build_world(&self.config, &self.scenario, &self.settings, seed) {
                    Ok((world, brick)) => {
                        self.world = world;
                        self.brick = brick;
                        self.seed = seed;
                        self.log.clear();
                        self.outcome = None;
                        self.trial_start_ms = self.now();
                        self.frame_or_error(Vec::new())
                    }
                    Err(e) => Self::error(ErrorCode::Internal, e.to_string()),
                }
            }
        }
    }
}

/// Re-runs a trial's command log on a fresh session and returns its
/// outcome. Elapsed time comes from a stopped clock and is always zero.
pub fn replay(
    config: &Config,
    scenario: &Scenario,
    settings: TeleopSettings,
    seed: u64,
    log: &[Command],
) -> Result<Option<TrialOutcome>, TeleopError> {
    let mut s = TeleopSession::new(
        "replay",
        config.clone(),
        scenario.clone(),
        settings,
        seed,
        Arc::new(ManualClock::new(0)),
    )?;
    s.frame()?;
    for cmd in log {
        for reply in s.handle(cmd) {
            if let ServerMessage::Error { code, message } = reply {
                return Err(TeleopError::Replay(format!("{code:?}: {message}")));
            }
        }
    }
    Ok(s.outcome)
}
