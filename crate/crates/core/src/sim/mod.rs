//! Ground-truth world model and synthetic observation renderer.
//!
//! The world is a stack of rigid bricks on a board, a tool carrying the
//! eye-in-finger camera, and a constant calibration error `δ` between where
//! the tool is commanded and where it actually goes. Rendering projects every
//! exposed knob through a pinhole camera, clips it to the tool's circular
//! aperture and perturbs the mask boundary; the ring-light reflection
//! follows a planar-mirror model.

mod render;
mod scenario;
mod world;

pub use render::{render_disc_mask, render_jittered_disc};
pub use scenario::{BrickPlacement, BuiltScenario, Scenario, ScenarioError, TaskSpec};
pub use world::{
    Attempt, AttemptOutcome, BrickId, BrickInstance, PickOutcome, PlaceOutcome, PlaceSite, Target,
    World, WorldState,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("target pose ({x}, {y}, {z}) mm is outside the workspace")]
    OutOfWorkspace { x: f64, y: f64, z: f64 },
    #[error("tool at z = {tool_z} mm is below the brick top at {top} mm")]
    BelowBrickTop { tool_z: f64, top: f64 },
    #[error("invalid state: {0}")]
    State(String),
    #[error("unknown brick {0}")]
    UnknownBrick(BrickId),
    #[error("footprint at level {level} is occupied by brick {by}")]
    Occupied { level: u32, by: BrickId },
    #[error("invalid model: {0}")]
    Model(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Segmentation and detection noise applied by the renderer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Standard deviation of the radial mask-boundary perturbation, px.
    pub mask_boundary_sigma_px: f64,
    /// Probability that a visible knob yields no mask.
    pub mask_dropout: f64,
    /// Standard deviation of the reflection detection, px per axis.
    pub reflection_sigma_px: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            mask_boundary_sigma_px: 0.4,
            mask_dropout: 0.0,
            reflection_sigma_px: 1.0,
        }
    }
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        mask_boundary_sigma_px: 0.0,
        mask_dropout: 0.0,
        reflection_sigma_px: 0.0,
    };

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.mask_boundary_sigma_px >= 0.0
            && self.mask_boundary_sigma_px.is_finite()
            && (0.0..=1.0).contains(&self.mask_dropout)
            && self.reflection_sigma_px >= 0.0
            && self.reflection_sigma_px.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SimError::Model(format!("invalid noise model {self:?}")))
        }
    }
}

/// Mechanical self-centering of the tool during pick and place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceModel {
    pub capture_radius_mm: f64,
    pub capture_yaw_deg: f64,
}

impl Default for ToleranceModel {
    fn default() -> Self {
        ToleranceModel {
            capture_radius_mm: 0.8,
            capture_yaw_deg: 2.0,
        }
    }
}

impl ToleranceModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.capture_radius_mm >= 0.0 && self.capture_yaw_deg >= 0.0 {
            Ok(())
        } else {
            Err(SimError::Model(format!("invalid tolerance model {self:?}")))
        }
    }
}

/// Fixed simulator geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Aperture window radius as a fraction of the smaller image side.
    pub aperture_fraction: f64,
    pub brick_height_mm: f64,
    /// Commands must satisfy `|x|, |y| <= workspace_half_extent_mm`.
    pub workspace_half_extent_mm: f64,
    /// Commands must satisfy `0 < z <= workspace_max_z_mm`.
    pub workspace_max_z_mm: f64,
    /// Control points of the mask-boundary perturbation.
    pub jitter_points: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            aperture_fraction: 0.45,
            brick_height_mm: 9.6,
            workspace_half_extent_mm: 250.0,
            workspace_max_z_mm: 300.0,
            jitter_points: 16,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.aperture_fraction > 0.0
            && self.brick_height_mm > 0.0
            && self.workspace_half_extent_mm > 0.0
            && self.workspace_max_z_mm > 0.0
            && self.jitter_points >= 2;
        if ok {
            Ok(())
        } else {
            Err(SimError::Model(format!(
                "invalid simulator parameters {self:?}"
            )))
        }
    }
}
