//! Scenario files: board layout, noise, tolerance and seed, in TOML.
//!
//! ```toml
//! seed = 7
//! calibration_error_mm = 1.0      # optional, random direction
//!
//! [noise]
//! mask_boundary_sigma_px = 0.4
//!
//! [[bricks]]                      # index 0: baseplate
//! rows = 8
//! cols = 16
//! x_mm = 0.0
//! y_mm = 0.0
//!
//! [[bricks]]                      # index 1: the brick to move
//! rows = 2
//! cols = 4
//! x_mm = -24.0
//! y_mm = 0.0
//! level = 1
//!
//! [task]
//! pick = 1
//! place_base = 0
//! place_x_mm = 24.0
//! place_y_mm = 0.0
//! ```
//!
//! Knob pitch and radius come from the brick section of the main
//! configuration; scenarios only give footprints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BrickId, NoiseModel, PlaceSite, SimError, SimParams, ToleranceModel, World};
use crate::geometry::{BrickSpec, CameraModel, GeometryError, PlanarOffset, Pose2, TiltAngles};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrickPlacement {
    pub rows: u32,
    pub cols: u32,
    pub x_mm: f64,
    pub y_mm: f64,
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub level: u32,
    /// `[theta_x_deg, theta_y_deg]`.
    #[serde(default)]
    pub tilt_deg: Option<[f64; 2]>,
}

/// Pick one brick and place it on another at a given grip pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Index into `bricks`.
    pub pick: usize,
    /// Index into `bricks`.
    pub place_base: usize,
    pub place_x_mm: f64,
    pub place_y_mm: f64,
    #[serde(default)]
    pub place_yaw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub tolerance: ToleranceModel,
    /// Magnitude of a randomly oriented calibration error.
    #[serde(default)]
    pub calibration_error_mm: Option<f64>,
    /// Explicit calibration error; takes precedence over the magnitude.
    #[serde(default)]
    pub calibration_error: Option<PlanarOffset>,
    #[serde(default)]
    pub bricks: Vec<BrickPlacement>,
    #[serde(default)]
    pub task: Option<TaskSpec>,
}

/// A built scenario: the world plus ids resolved from the task.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub world: World,
    pub brick_ids: Vec<BrickId>,
    pub pick: Option<BrickId>,
    pub place: Option<PlaceSite>,
}

impl Default for Scenario {
    /// An 8×16 baseplate with a 2×4 brick three knobs left of centre, to be
    /// moved three knobs right of centre.
    fn default() -> Self {
        Scenario {
            seed: 0,
            noise: NoiseModel::default(),
            tolerance: ToleranceModel::default(),
            calibration_error_mm: None,
            calibration_error: None,
            bricks: vec![
                BrickPlacement {
                    rows: 8,
                    cols: 16,
                    x_mm: 0.0,
                    y_mm: 0.0,
                    yaw_deg: 0.0,
                    level: 0,
                    tilt_deg: None,
                },
                BrickPlacement {
                    rows: 2,
                    cols: 4,
                    x_mm: -24.0,
                    y_mm: 0.0,
                    yaw_deg: 0.0,
                    level: 1,
                    tilt_deg: None,
                },
            ],
            task: Some(TaskSpec {
                pick: 1,
                place_base: 0,
                place_x_mm: 24.0,
                place_y_mm: 0.0,
                place_yaw_deg: 0.0,
            }),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_toml_str(&text)
    }

    /// Builds the world. `brick` supplies pitch and knob radius.
    pub fn build(
        &self,
        cam: CameraModel,
        brick: BrickSpec,
        params: SimParams,
    ) -> Result<BuiltScenario, ScenarioError> {
        let mut world = World::new(cam, self.noise, self.tolerance, params, self.seed)?;
        let mut ids = Vec::with_capacity(self.bricks.len());
        for b in &self.bricks {
            let spec = brick.with_footprint(b.rows, b.cols)?;
            let id = world.add_brick(spec, Pose2::new(b.x_mm, b.y_mm, b.yaw_deg), b.level)?;
            if let Some([tx, ty]) = b.tilt_deg {
                world.set_brick_tilt(id, TiltAngles::new(tx, ty))?;
            }
            ids.push(id);
        }
        if let Some(d) = self.calibration_error {
            world.set_calibration_error(d);
        } else if let Some(m) = self.calibration_error_mm {
            world.inject_calibration_error(m)?;
        }
        let index = |i: usize| {
            ids.get(i)
                .copied()
                .ok_or_else(|| ScenarioError::Invalid(format!("task refers to missing brick {i}")))
        };
        let (pick, place) = match &self.task {
            Some(t) => (
                Some(index(t.pick)?),
                Some(PlaceSite {
                    base: index(t.place_base)?,
                    pose: Pose2::new(t.place_x_mm, t.place_y_mm, t.place_yaw_deg),
                }),
            ),
            None => (None, None),
        };
        Ok(BuiltScenario {
            world,
            brick_ids: ids,
            pick,
            place,
        })
    }
}
