use std::f64::consts::TAU;

use nalgebra::{Rotation2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::render::render_jittered_disc;
use super::{NoiseModel, SimError, SimParams, ToleranceModel};
use crate::geometry::{
    image_to_plane_vec, normalize_deg, plane_to_image_vec, tool_point_to_pixel, BrickSpec,
    CameraModel, Pixel, PlanarOffset, Pose2, TiltAngles, ToolPose,
};
use crate::mask_io::{Observation, ObservationError, ObservationProvider};
use crate::tilt::reflection_displacement;

pub type BrickId = u32;

/// A brick resting on the board or on another brick.
///
/// `pose` is the grip pose: the midpoint of the vertical knob pair the tool
/// engages. For a brick with `rows >= 2` that pair sits in column
/// `(cols - 1) / 2` (integer division) and rows `(rows - 2) / 2` and the one
/// above it; a single-row brick is gripped on its knob at column
/// `(cols - 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrickInstance {
    pub id: BrickId,
    pub spec: BrickSpec,
    pub pose: Pose2,
    /// 0 for a brick resting on the board.
    pub level: u32,
    pub tilt: TiltAngles,
}

impl BrickInstance {
    fn grip_index(spec: &BrickSpec) -> (f64, f64) {
        let col = ((spec.cols() - 1) / 2) as f64;
        let row = if spec.rows() >= 2 {
            ((spec.rows() - 2) / 2) as f64 + 0.5
        } else {
            0.0
        };
        (col, row)
    }

    /// Knob centres in the grip frame, row-major from the bottom row.
    pub fn local_knobs(spec: &BrickSpec) -> Vec<Vector2<f64>> {
        let (c0, r0) = Self::grip_index(spec);
        let p = spec.knob_pitch_mm();
        (0..spec.rows())
            .flat_map(|i| {
                (0..spec.cols())
                    .map(move |j| Vector2::new((j as f64 - c0) * p, (i as f64 - r0) * p))
            })
            .collect()
    }

    pub fn knob_positions(&self) -> Vec<Vector2<f64>> {
        Self::local_knobs(&self.spec)
            .into_iter()
            .map(|k| self.pose.to_world(k))
            .collect()
    }

    pub fn top_mm(&self, brick_height_mm: f64) -> f64 {
        (self.level + 1) as f64 * brick_height_mm
    }

    /// Whether a board-frame point lies over this brick's footprint.
    pub fn footprint_contains(&self, p: &Vector2<f64>) -> bool {
        let (c0, r0) = Self::grip_index(&self.spec);
        let pitch = self.spec.knob_pitch_mm();
        let l = self.pose.to_local(*p);
        let x_lo = (-c0 - 0.5) * pitch;
        let x_hi = (self.spec.cols() as f64 - 1.0 - c0 + 0.5) * pitch;
        let y_lo = (-r0 - 0.5) * pitch;
        let y_hi = (self.spec.rows() as f64 - 1.0 - r0 + 0.5) * pitch;
        l.x > x_lo && l.x < x_hi && l.y > y_lo && l.y < y_hi
    }

    fn overlaps(&self, other: &BrickInstance) -> bool {
        self.level == other.level
            && (other
                .knob_positions()
                .iter()
                .any(|k| self.footprint_contains(k))
                || self
                    .knob_positions()
                    .iter()
                    .any(|k| other.footprint_contains(k)))
    }
}

/// Where a held brick should go: on top of `base`, gripped at `pose`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaceSite {
    pub base: BrickId,
    pub pose: Pose2,
}

/// Something the tool can be centred over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Brick(BrickId),
    Site(PlaceSite),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Success,
    /// Within one knob pitch but outside the capture tolerance.
    Collision,
    Miss,
}

/// Result of a mechanical pick or place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub outcome: AttemptOutcome,
    /// True target pose relative to the tool at the time of the attempt.
    pub residual: PlanarOffset,
}

pub type PickOutcome = Attempt;
pub type PlaceOutcome = Attempt;

/// Complete mutable simulator state. Cloning it is a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub bricks: Vec<BrickInstance>,
    pub held: Option<BrickInstance>,
    pub commanded: ToolPose,
    pub calib_error: PlanarOffset,
    /// Tilt given to bricks seated by the next successful places.
    pub place_defect: Option<TiltAngles>,
    pub rng: ChaCha8Rng,
    pub next_id: BrickId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    cam: CameraModel,
    noise: NoiseModel,
    tolerance: ToleranceModel,
    params: SimParams,
    state: WorldState,
}

impl World {
    pub fn new(
        cam: CameraModel,
        noise: NoiseModel,
        tolerance: ToleranceModel,
        params: SimParams,
        seed: u64,
    ) -> Result<Self, SimError> {
        noise.validate()?;
        tolerance.validate()?;
        params.validate()?;
        Ok(World {
            cam,
            noise,
            tolerance,
            params,
            state: WorldState {
                bricks: Vec::new(),
                held: None,
                commanded: ToolPose::planar(0.0, 0.0, params.workspace_max_z_mm, 0.0),
                calib_error: PlanarOffset::ZERO,
                place_defect: None,
                rng: ChaCha8Rng::seed_from_u64(seed),
                next_id: 0,
            },
        })
    }

    /// Rebuilds a world from a snapshot.
    pub fn from_state(
        cam: CameraModel,
        noise: NoiseModel,
        tolerance: ToleranceModel,
        params: SimParams,
        state: WorldState,
    ) -> Result<Self, SimError> {
        noise.validate()?;
        tolerance.validate()?;
        params.validate()?;
        Ok(World {
            cam,
            noise,
            tolerance,
            params,
            state,
        })
    }

    pub fn camera(&self) -> &CameraModel {
        &self.cam
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn set_noise(&mut self, noise: NoiseModel) -> Result<(), SimError> {
        noise.validate()?;
        self.noise = noise;
        Ok(())
    }

    pub fn tolerance(&self) -> &ToleranceModel {
        &self.tolerance
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn snapshot(&self) -> WorldState {
        self.state.clone()
    }

    pub fn bricks(&self) -> &[BrickInstance] {
        &self.state.bricks
    }

    pub fn brick(&self, id: BrickId) -> Option<&BrickInstance> {
        self.state.bricks.iter().find(|b| b.id == id)
    }

    pub fn held(&self) -> Option<&BrickInstance> {
        self.state.held.as_ref()
    }

    /// Bricks on the board plus the held one.
    pub fn brick_count(&self) -> usize {
        self.state.bricks.len() + usize::from(self.state.held.is_some())
    }

    pub fn add_brick(
        &mut self,
        spec: BrickSpec,
        pose: Pose2,
        level: u32,
    ) -> Result<BrickId, SimError> {
        let brick = BrickInstance {
            id: self.state.next_id,
            spec,
            pose,
            level,
            tilt: TiltAngles::default(),
        };
        if let Some(other) = self.state.bricks.iter().find(|b| b.overlaps(&brick)) {
            return Err(SimError::Occupied {
                level,
                by: other.id,
            });
        }
        self.state.next_id += 1;
        self.state.bricks.push(brick);
        Ok(brick.id)
    }

    pub fn set_brick_tilt(&mut self, id: BrickId, tilt: TiltAngles) -> Result<(), SimError> {
        let b = self
            .state
            .bricks
            .iter_mut()
            .find(|b| b.id == id)
            .ok_or(SimError::UnknownBrick(id))?;
        b.tilt = tilt;
        Ok(())
    }

    pub fn set_place_defect(&mut self, tilt: Option<TiltAngles>) {
        self.state.place_defect = tilt;
    }

    pub fn commanded_pose(&self) -> ToolPose {
        self.state.commanded
    }

    /// Actual tool pose: the commanded pose displaced by the calibration
    /// error.
    pub fn tool_pose(&self) -> ToolPose {
        self.state.commanded.shifted(&self.state.calib_error)
    }

    pub fn calibration_error(&self) -> PlanarOffset {
        self.state.calib_error
    }

    pub fn set_calibration_error(&mut self, delta: PlanarOffset) {
        self.state.calib_error = delta;
    }

    /// Sets `δ` to `magnitude_mm` in a direction drawn from the world RNG,
    /// with zero yaw.
    pub fn inject_calibration_error(
        &mut self,
        magnitude_mm: f64,
    ) -> Result<PlanarOffset, SimError> {
        if !(magnitude_mm >= 0.0 && magnitude_mm.is_finite()) {
            return Err(SimError::Model(format!(
                "calibration error magnitude must be non-negative, got {magnitude_mm}"
            )));
        }
        let angle: f64 = self.state.rng.random_range(0.0..TAU);
        let delta = PlanarOffset::new(magnitude_mm * angle.cos(), magnitude_mm * angle.sin(), 0.0);
        self.state.calib_error = delta;
        Ok(delta)
    }

    pub fn command_move(&mut self, target: ToolPose) -> Result<(), SimError> {
        let lim = self.params.workspace_half_extent_mm;
        let ok = target.x_mm.abs() <= lim
            && target.y_mm.abs() <= lim
            && target.z_mm > 0.0
            && target.z_mm <= self.params.workspace_max_z_mm
            && target.yaw_deg.is_finite()
            && target.roll_deg.is_finite()
            && target.pitch_deg.is_finite();
        if !ok {
            return Err(SimError::OutOfWorkspace {
                x: target.x_mm,
                y: target.y_mm,
                z: target.z_mm,
            });
        }
        self.state.commanded = target;
        Ok(())
    }

    /// Centre and radius (px) of the circular aperture window.
    pub fn aperture(&self) -> (Pixel, f64) {
        let side = self.cam.width().min(self.cam.height()) as f64;
        (self.cam.center(), self.params.aperture_fraction * side)
    }

    /// Board-frame pose of a target's grip point.
    pub fn target_pose(&self, target: &Target) -> Result<Pose2, SimError> {
        match target {
            Target::Brick(id) => Ok(self.brick(*id).ok_or(SimError::UnknownBrick(*id))?.pose),
            Target::Site(site) => {
                self.brick(site.base)
                    .ok_or(SimError::UnknownBrick(site.base))?;
                Ok(site.pose)
            }
        }
    }

    /// Height of the surface the camera looks at when over `target`.
    pub fn target_top_mm(&self, target: &Target) -> Result<f64, SimError> {
        let h = self.params.brick_height_mm;
        match target {
            Target::Brick(id) => Ok(self
                .brick(*id)
                .ok_or(SimError::UnknownBrick(*id))?
                .top_mm(h)),
            Target::Site(site) => Ok(self
                .brick(site.base)
                .ok_or(SimError::UnknownBrick(site.base))?
                .top_mm(h)),
        }
    }

    /// Target grip pose relative to the actual tool, in the tool frame.
    pub fn truth_offset(&self, target: &Target) -> Result<PlanarOffset, SimError> {
        let pose = self.target_pose(target)?;
        let tool = self.tool_pose().pose2();
        let local = tool.to_local(pose.position());
        Ok(PlanarOffset::new(
            local.x,
            local.y,
            pose.yaw_deg - tool.yaw_deg,
        ))
    }

    fn classify(&self, residual: PlanarOffset, pitch: f64) -> AttemptOutcome {
        let t = residual.translation_norm();
        if t <= self.tolerance.capture_radius_mm
            && residual.dyaw_deg.abs() <= self.tolerance.capture_yaw_deg
        {
            AttemptOutcome::Success
        } else if t < pitch {
            AttemptOutcome::Collision
        } else {
            AttemptOutcome::Miss
        }
    }

    fn is_covered(&self, brick: &BrickInstance) -> bool {
        self.state.bricks.iter().any(|b| {
            b.level == brick.level + 1
                && brick
                    .knob_positions()
                    .iter()
                    .any(|k| b.footprint_contains(k))
        })
    }

    pub fn attempt_pick(&mut self, target: BrickId) -> Result<Attempt, SimError> {
        if self.state.held.is_some() {
            return Err(SimError::State("a brick is already held".into()));
        }
        let idx = self
            .state
            .bricks
            .iter()
            .position(|b| b.id == target)
            .ok_or(SimError::UnknownBrick(target))?;
        let brick = self.state.bricks[idx];
        if self.is_covered(&brick) {
            return Err(SimError::State(format!(
                "brick {target} has a brick on top"
            )));
        }
        let residual = self.truth_offset(&Target::Brick(target))?;
        let outcome = self.classify(residual, brick.spec.knob_pitch_mm());
        if outcome == AttemptOutcome::Success {
            let mut held = self.state.bricks.remove(idx);
            held.tilt = TiltAngles::default();
            self.state.held = Some(held);
        }
        Ok(Attempt { outcome, residual })
    }

    pub fn attempt_place(&mut self, site: &PlaceSite) -> Result<Attempt, SimError> {
        let held = self
            .state
            .held
            .ok_or_else(|| SimError::State("no brick is held".into()))?;
        let base = *self
            .brick(site.base)
            .ok_or(SimError::UnknownBrick(site.base))?;
        let placed = BrickInstance {
            pose: site.pose,
            level: base.level + 1,
            tilt: self.state.place_defect.unwrap_or_default(),
            ..held
        };
        if let Some(other) = self.state.bricks.iter().find(|b| b.overlaps(&placed)) {
            return Err(SimError::Occupied {
                level: placed.level,
                by: other.id,
            });
        }
        let residual = self.truth_offset(&Target::Site(*site))?;
        let outcome = self.classify(residual, held.spec.knob_pitch_mm());
        if outcome == AttemptOutcome::Success {
            self.state.held = None;
            self.state.bricks.push(placed);
        }
        Ok(Attempt { outcome, residual })
    }

    /// Topmost board brick under a board-frame point.
    fn top_brick_at(&self, p: &Vector2<f64>) -> Option<&BrickInstance> {
        self.state
            .bricks
            .iter()
            .filter(|b| b.footprint_contains(p))
            .max_by_key(|b| b.level)
    }

    /// Renders the current view and advances the world RNG.
    pub fn render(&mut self) -> Result<Observation, SimError> {
        let tool = self.tool_pose();
        let h = self.params.brick_height_mm;
        let axis = tool.pose2().position();
        let under = self.top_brick_at(&axis).copied();
        let z_obs = match under {
            Some(b) => {
                let top = b.top_mm(h);
                if tool.z_mm <= top {
                    return Err(SimError::BelowBrickTop {
                        tool_z: tool.z_mm,
                        top,
                    });
                }
                tool.z_mm - top
            }
            None => tool.z_mm,
        };
        let (w, ht) = (self.cam.width(), self.cam.height());
        if self.state.held.is_some() {
            // The held brick fills the aperture.
            return Observation::new(w, ht, z_obs, None, Vec::new())
                .map_err(|e| SimError::State(e.to_string()));
        }

        let (ac, ar) = self.aperture();
        let sigma = self.noise.mask_boundary_sigma_px;
        let n = self.params.jitter_points;
        let mut jitter = vec![0.0; n];
        let mut masks = Vec::new();
        let bricks = self.state.bricks.clone();
        for b in &bricks {
            let depth = tool.z_mm - b.top_mm(h);
            if depth <= 0.0 {
                continue;
            }
            let r_px = self.cam.fx() * b.spec.knob_radius_mm() / depth;
            for k in b.knob_positions() {
                let covered = bricks
                    .iter()
                    .any(|c| c.level == b.level + 1 && c.footprint_contains(&k));
                if covered {
                    continue;
                }
                for j in jitter.iter_mut() {
                    let z: f64 = self.state.rng.sample(StandardNormal);
                    *j = sigma * z;
                }
                let dropped = self.state.rng.random::<f64>() < self.noise.mask_dropout;
                if dropped {
                    continue;
                }
                let local = tool.pose2().to_local(k);
                let center = tool_point_to_pixel(&self.cam, depth, &local)?;
                let reach = r_px + jitter.iter().fold(0.0f64, |m, j| m.max(*j));
                if (center - ac).norm() > ar + reach {
                    continue;
                }
                let jit: &[f64] = if sigma > 0.0 { &jitter } else { &[] };
                if let Some(m) = render_jittered_disc(
                    masks.len() as u32,
                    center,
                    r_px,
                    jit,
                    Some((ac, ar)),
                    w,
                    ht,
                ) {
                    masks.push(m);
                }
            }
        }

        let nx: f64 = self.state.rng.sample(StandardNormal);
        let ny: f64 = self.state.rng.sample(StandardNormal);
        let reflection = under.and_then(|b| {
            let on_knob = b
                .knob_positions()
                .iter()
                .any(|k| (k - axis).norm() <= b.spec.knob_radius_mm());
            if on_knob {
                return None;
            }
            let rel = TiltAngles::new(
                b.tilt.theta_x_deg - tool.roll_deg,
                b.tilt.theta_y_deg - tool.pitch_deg,
            );
            let d_brick = image_to_plane_vec(&reflection_displacement(&rel, &self.cam));
            let yaw = normalize_deg(b.pose.yaw_deg - tool.yaw_deg).to_radians();
            let d = plane_to_image_vec(&(Rotation2::new(yaw) * d_brick));
            let s = self.noise.reflection_sigma_px;
            let p = self.cam.center() + d + Vector2::new(s * nx, s * ny);
            self.cam.contains(&p).then_some(p)
        });

        Observation::new(w, ht, z_obs, reflection, masks)
            .map_err(|e| SimError::State(e.to_string()))
    }
}

impl ObservationProvider for World {
    /// Moves to `tool_pose` (commanded) and renders.
    fn capture(&mut self, tool_pose: &ToolPose) -> Result<Observation, ObservationError> {
        self.command_move(*tool_pose)
            .map_err(|e| ObservationError::Render(e.to_string()))?;
        self.render()
            .map_err(|e| ObservationError::Render(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask_io::encode_observation;

    const VIEW: f64 = 30.0;

    fn world(noise: NoiseModel) -> World {
        World::new(
            CameraModel::default(),
            noise,
            ToleranceModel::default(),
            SimParams::default(),
            7,
        )
        .unwrap()
    }

    fn view_pose(w: &World, x: f64, y: f64, yaw: f64) -> ToolPose {
        ToolPose::planar(x, y, w.params().brick_height_mm + VIEW, yaw)
    }

    #[test]
    fn knob_layout_of_2x4() {
        let k = BrickInstance::local_knobs(&BrickSpec::default());
        assert_eq!(k.len(), 8);
        assert_eq!(k[0], Vector2::new(-8.0, -4.0));
        assert_eq!(k[1], Vector2::new(0.0, -4.0));
        assert_eq!(k[5], Vector2::new(0.0, 4.0));
        assert_eq!(k[7], Vector2::new(16.0, 4.0));
    }

    #[test]
    fn aligned_view_has_unclipped_target_pair() {
        let mut w = world(NoiseModel::NONE);
        w.add_brick(BrickSpec::default(), Pose2::default(), 0)
            .unwrap();
        w.command_move(view_pose(&w, 0.0, 0.0, 0.0)).unwrap();
        let obs = w.render().unwrap();
        assert!(obs.masks().len() >= 2);
        let full = crate::sim::render_disc_mask(
            0,
            Pixel::new(320.0, 240.0 - 830.0 * 4.0 / 30.0),
            66.4,
            None,
            640,
            480,
        )
        .unwrap();
        assert!(obs.masks().iter().any(|m| m.clone().with_label(0) == full));
        assert_eq!(obs.reflection(), Some(Pixel::new(320.0, 240.0)));
        assert!((obs.z_mm() - VIEW).abs() < 1e-9);
    }

    #[test]
    fn empty_board_has_no_masks() {
        let mut w = world(NoiseModel::default());
        w.command_move(ToolPose::planar(0.0, 0.0, 40.0, 0.0))
            .unwrap();
        let obs = w.render().unwrap();
        assert!(obs.masks().is_empty());
        assert_eq!(obs.reflection(), None);
        assert_eq!(obs.z_mm(), 40.0);
    }

    #[test]
    fn tool_offset_shifts_masks() {
        let mut w = world(NoiseModel::NONE);
        w.add_brick(BrickSpec::default(), Pose2::default(), 0)
            .unwrap();
        w.command_move(view_pose(&w, 0.0, 0.0, 0.0)).unwrap();
        let a = w.render().unwrap();
        w.command_move(view_pose(&w, -2.0, 0.0, 0.0)).unwrap();
        let b = w.render().unwrap();
        let shift = 2.0 * 830.0 / VIEW;
        let ac = Pixel::new(320.0, 240.0 - 830.0 * 4.0 / VIEW);
        let near = |o: &Observation| {
            o.masks()
                .iter()
                .map(|m| m.centroid())
                .min_by(|p, q| (p - ac).norm().total_cmp(&(q - ac).norm()))
                .unwrap()
        };
        let ca = near(&a);
        let cb = near(&b);
        assert!(((cb.x - ca.x) - shift).abs() < 1.0, "{ca} {cb}");
    }

    #[test]
    fn render_below_brick_top_fails() {
        let mut w = world(NoiseModel::NONE);
        w.add_brick(BrickSpec::default(), Pose2::default(), 0)
            .unwrap();
        w.command_move(ToolPose::planar(0.0, 0.0, 5.0, 0.0))
            .unwrap();
        assert!(matches!(w.render(), Err(SimError::BelowBrickTop { .. })));
    }

    #[test]
    fn calibration_error_displaces_tool() {
        let mut w = world(NoiseModel::NONE);
        w.command_move(ToolPose::planar(10.0, 0.0, 40.0, 0.0))
            .unwrap();
        assert_eq!(w.tool_pose().x_mm, 10.0);
        w.set_calibration_error(PlanarOffset::new(1.0, 0.0, 0.0));
        assert_eq!(w.tool_pose().x_mm, 11.0);
        assert!(w
            .command_move(ToolPose::planar(300.0, 0.0, 40.0, 0.0))
            .is_err());
        assert!(w
            .command_move(ToolPose::planar(0.0, 0.0, 0.0, 0.0))
            .is_err());
    }

    #[test]
    fn injected_error_has_requested_magnitude() {
        let mut a = world(NoiseModel::NONE);
        assert_eq!(
            a.inject_calibration_error(0.0).unwrap().translation_norm(),
            0.0
        );
        let d = a.inject_calibration_error(2.0).unwrap();
        assert!((d.translation_norm() - 2.0).abs() < 1e-12);
        assert_eq!(d.dyaw_deg, 0.0);
        let mut b = World::new(
            CameraModel::default(),
            NoiseModel::NONE,
            ToleranceModel::default(),
            SimParams::default(),
            8,
        )
        .unwrap();
        let e = b.inject_calibration_error(2.0).unwrap();
        assert!((e.translation_norm() - 2.0).abs() < 1e-12);
        assert_ne!(d, e);
    }

    #[test]
    fn pick_outcomes_follow_tolerance() {
        for (dx, expect) in [
            (0.0, AttemptOutcome::Success),
            (0.5, AttemptOutcome::Success),
            (1.5, AttemptOutcome::Collision),
            (9.0, AttemptOutcome::Miss),
        ] {
            let mut w = world(NoiseModel::NONE);
            let id = w
                .add_brick(BrickSpec::default(), Pose2::default(), 0)
                .unwrap();
            w.command_move(view_pose(&w, dx, 0.0, 0.0)).unwrap();
            let a = w.attempt_pick(id).unwrap();
            assert_eq!(a.outcome, expect, "dx = {dx}");
            assert!((a.residual.dx_mm + dx).abs() < 1e-12);
            assert_eq!(w.held().is_some(), expect == AttemptOutcome::Success);
            assert_eq!(w.brick_count(), 1);
        }
    }

    #[test]
    fn double_pick_is_a_state_error() {
        let mut w = world(NoiseModel::NONE);
        let a = w
            .add_brick(BrickSpec::default(), Pose2::default(), 0)
            .unwrap();
        let b = w
            .add_brick(BrickSpec::default(), Pose2::new(48.0, 0.0, 0.0), 0)
            .unwrap();
        w.command_move(view_pose(&w, 0.0, 0.0, 0.0)).unwrap();
        w.attempt_pick(a).unwrap();
        assert!(matches!(w.attempt_pick(b), Err(SimError::State(_))));
    }

    #[test]
    fn place_seats_brick_and_conserves_count() {
        let mut w = world(NoiseModel::NONE);
        let base = w
            .add_brick(
                BrickSpec::new(8.0, 2.4, 8, 16).unwrap(),
                Pose2::default(),
                0,
            )
            .unwrap();
        let id = w
            .add_brick(BrickSpec::default(), Pose2::new(-24.0, 0.0, 0.0), 1)
            .unwrap();
        w.command_move(view_pose(&w, -24.0, 0.0, 0.0)).unwrap();
        assert_eq!(w.attempt_pick(id).unwrap().outcome, AttemptOutcome::Success);
        assert_eq!(w.brick_count(), 2);
        let site = PlaceSite {
            base,
            pose: Pose2::new(24.0, 0.0, 0.0),
        };
        w.command_move(view_pose(&w, 24.0, 0.0, 0.0)).unwrap();
        let a = w.attempt_place(&site).unwrap();
        assert_eq!(a.outcome, AttemptOutcome::Success);
        assert_eq!(w.brick_count(), 2);
        let placed = w.brick(id).unwrap();
        assert_eq!(placed.level, 1);
        assert_eq!(placed.tilt, TiltAngles::default());
    }

    #[test]
    fn place_onto_occupied_footprint_fails() {
        let mut w = world(NoiseModel::NONE);
        let base = w
            .add_brick(
                BrickSpec::new(8.0, 2.4, 8, 16).unwrap(),
                Pose2::default(),
                0,
            )
            .unwrap();
        let id = w
            .add_brick(BrickSpec::default(), Pose2::new(-24.0, 0.0, 0.0), 1)
            .unwrap();
        w.add_brick(BrickSpec::default(), Pose2::new(24.0, 0.0, 0.0), 1)
            .unwrap();
        w.command_move(view_pose(&w, -24.0, 0.0, 0.0)).unwrap();
        w.attempt_pick(id).unwrap();
        let site = PlaceSite {
            base,
            pose: Pose2::new(32.0, 0.0, 0.0),
        };
        assert!(matches!(
            w.attempt_place(&site),
            Err(SimError::Occupied { .. })
        ));
    }

    #[test]
    fn defect_mode_tilts_reflection() {
        let mut w = world(NoiseModel::NONE);
        let id = w
            .add_brick(BrickSpec::default(), Pose2::default(), 0)
            .unwrap();
        w.set_brick_tilt(id, TiltAngles::new(1.0, 0.0)).unwrap();
        w.command_move(view_pose(&w, 0.0, 0.0, 0.0)).unwrap();
        let r = w.render().unwrap().reflection().unwrap();
        assert!((r.x - 320.0 - 830.0 * 1f64.to_radians().tan()).abs() < 1e-9);
        assert_eq!(r.y, 240.0);
    }

    #[test]
    fn held_brick_blocks_view() {
        let mut w = world(NoiseModel::NONE);
        let id = w
            .add_brick(BrickSpec::default(), Pose2::default(), 0)
            .unwrap();
        w.command_move(view_pose(&w, 0.0, 0.0, 0.0)).unwrap();
        w.attempt_pick(id).unwrap();
        let obs = w.render().unwrap();
        assert!(obs.masks().is_empty() && obs.reflection().is_none());
    }

    #[test]
    fn same_seed_same_bytes() {
        let run = || {
            let mut w = world(NoiseModel::default());
            w.add_brick(BrickSpec::default(), Pose2::default(), 0)
                .unwrap();
            w.inject_calibration_error(1.0).unwrap();
            let mut out = Vec::new();
            for x in [0.0, 0.5, -1.0] {
                w.command_move(view_pose(&w, x, 0.0, 0.0)).unwrap();
                out.extend(encode_observation(&w.render().unwrap()));
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn snapshot_round_trips_through_json() {
        let mut w = world(NoiseModel::default());
        w.add_brick(BrickSpec::default(), Pose2::new(1.0, 2.0, 3.0), 0)
            .unwrap();
        let s = w.snapshot();
        let back: WorldState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
