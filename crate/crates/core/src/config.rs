//! Top-level configuration file (TOML). Every section and key is optional.
//!
//! ```toml
//! seed = 1
//!
//! [camera]
//! fx_px = 830.0
//! fy_px = 830.0
//! width_px = 640
//! height_px = 480
//! cx_px = 320.0
//! cy_px = 240.0
//!
//! [brick]
//! knob_pitch_mm = 8.0
//! knob_radius_mm = 2.4
//! rows = 2
//! cols = 4
//!
//! [estimator]
//! alpha = 35000.0
//! beta = 1.0
//! line_support = 3
//! view_distance_mm = 30.0
//!
//! [servo]
//! threshold_mm = 0.1
//! threshold_deg = 0.2
//! max_iterations = 10
//! gain = 1.0
//! tilt_defect_deg = 0.5
//!
//! [noise]
//! mask_boundary_sigma_px = 0.4
//! mask_dropout = 0.0
//! reflection_sigma_px = 1.0
//!
//! [tolerance]
//! capture_radius_mm = 0.8
//! capture_yaw_deg = 2.0
//!
//! [sim]
//! aperture_fraction = 0.45
//! brick_height_mm = 9.6
//! ```
//!
//! Units: millimetres, pixels and degrees throughout.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{Calibration, CalibrationError};
use crate::geometry::{BrickSpec, CameraModel, Pose2, ToolPose};
use crate::knob::{
    fit_observation, select_target_pair, FitWeights, KnobEstimator, DEFAULT_LINE_SUPPORT,
};
use crate::servo::ServoConfig;
use crate::sim::{NoiseModel, SimParams, ToleranceModel, World};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Pixels an extremal mask row/column needs to count as a bounding line.
    pub line_support: usize,
    /// Camera-to-knob-top distance while observing, mm.
    pub view_distance_mm: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let w = FitWeights::default();
        EstimatorConfig {
            alpha: w.alpha,
            beta: w.beta,
            line_support: DEFAULT_LINE_SUPPORT,
            view_distance_mm: 30.0,
        }
    }
}

impl EstimatorConfig {
    pub fn weights(&self) -> FitWeights {
        FitWeights {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub seed: u64,
    pub camera: CameraModel,
    pub brick: BrickSpec,
    pub estimator: EstimatorConfig,
    pub servo: ServoConfig,
    pub noise: NoiseModel,
    pub tolerance: ToleranceModel,
    pub sim: SimParams,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            camera: CameraModel::default(),
            brick: BrickSpec::default(),
            estimator: EstimatorConfig::default(),
            servo: ServoConfig::default(),
            noise: NoiseModel::default(),
            tolerance: ToleranceModel::default(),
            sim: SimParams::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.estimator
            .weights()
            .validate()
            .map_err(|e| invalid(&e))?;
        if self.estimator.line_support == 0 {
            return Err(ConfigError::Invalid(
                "line_support must be at least 1".into(),
            ));
        }
        if !(self.estimator.view_distance_mm > 0.0) {
            return Err(ConfigError::Invalid(
                "view_distance_mm must be positive".into(),
            ));
        }
        self.servo.validate().map_err(|e| invalid(&e))?;
        self.noise.validate().map_err(|e| invalid(&e))?;
        self.tolerance.validate().map_err(|e| invalid(&e))?;
        self.sim.validate().map_err(|e| invalid(&e))?;
        Ok(())
    }

    /// Expected knob and reflection pixels from a noise-free view with the
    /// tool aligned over a single brick, measured with the estimator itself.
    /// This is the simulated counterpart of aligning the tool by hand and
    /// recording what the camera sees.
    pub fn reference_calibration(&self) -> Result<Calibration, CalibrationError> {
        let fail = |e: &dyn std::fmt::Display| CalibrationError::Invalid(e.to_string());
        let mut world = World::new(self.camera, NoiseModel::NONE, self.tolerance, self.sim, 0)
            .map_err(|e| fail(&e))?;
        world
            .add_brick(self.brick, Pose2::default(), 0)
            .map_err(|e| fail(&e))?;
        let z = self.sim.brick_height_mm + self.estimator.view_distance_mm;
        world
            .command_move(ToolPose::planar(0.0, 0.0, z, 0.0))
            .map_err(|e| fail(&e))?;
        let obs = world.render().map_err(|e| fail(&e))?;
        let fitted: Vec<_> = fit_observation(
            &obs,
            &self.camera,
            &self.brick,
            &self.estimator.weights(),
            self.estimator.line_support,
        )
        .map_err(|e| fail(&e))?
        .into_iter()
        .filter_map(Result::ok)
        .collect();
        let (top, bottom) = select_target_pair(
            &fitted,
            &self.camera.center(),
            &self.camera,
            &self.brick,
            obs.z_mm(),
        )
        .map_err(|e| fail(&e))?;
        let reflection = obs
            .reflection()
            .ok_or_else(|| CalibrationError::Invalid("reference view has no reflection".into()))?;
        Calibration::new((top.center_px, bottom.center_px), reflection)
    }

    /// Estimator bound to this configuration and `calibration`.
    pub fn estimator(&self, calibration: Calibration) -> KnobEstimator {
        KnobEstimator {
            cam: self.camera,
            brick: self.brick,
            weights: self.estimator.weights(),
            line_support: self.estimator.line_support,
            calibration,
        }
    }
}
