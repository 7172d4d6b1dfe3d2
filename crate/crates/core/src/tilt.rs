//! Brick roll/pitch from the ring-light reflection.
//!
//! The ring light is concentric with the camera, so a flat surface tilted by
//! θ moves the specular point by `f·tan θ` pixels on the matching axis.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BrickSpec, CameraModel, Pixel, TiltAngles};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TiltError {
    #[error("reflection displacement ({dx}, {dy}) px exceeds the image size")]
    OutOfRange { dx: f64, dy: f64 },
    #[error("a {rows}x{cols} brick has no flat site between adjacent knobs")]
    UnsupportedBrick { rows: u32, cols: u32 },
}

/// Reflection displacement from its expected pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionMeasurement {
    d_px: Vector2<f64>,
}

impl ReflectionMeasurement {
    pub fn new(d_px: Vector2<f64>, cam: &CameraModel) -> Result<Self, TiltError> {
        let ok = d_px.x.abs() < cam.width() as f64 && d_px.y.abs() < cam.height() as f64;
        if !ok {
            return Err(TiltError::OutOfRange {
                dx: d_px.x,
                dy: d_px.y,
            });
        }
        Ok(ReflectionMeasurement { d_px })
    }

    pub fn from_pixels(
        observed: &Pixel,
        expected: &Pixel,
        cam: &CameraModel,
    ) -> Result<Self, TiltError> {
        ReflectionMeasurement::new(observed - expected, cam)
    }

    pub fn d_px(&self) -> Vector2<f64> {
        self.d_px
    }
}

/// `θx = atan(dx/fx)`, `θy = atan(dy/fy)`, in degrees.
pub fn tilt_from_reflection(m: &ReflectionMeasurement, cam: &CameraModel) -> TiltAngles {
    TiltAngles::new(
        (m.d_px.x / cam.fx()).atan().to_degrees(),
        (m.d_px.y / cam.fy()).atan().to_degrees(),
    )
}

/// Pixel displacement of the reflection for a surface tilted by `tilt`.
/// Exact inverse of [`tilt_from_reflection`].
pub fn reflection_displacement(tilt: &TiltAngles, cam: &CameraModel) -> Vector2<f64> {
    Vector2::new(
        cam.fx() * tilt.theta_x_deg.to_radians().tan(),
        cam.fy() * tilt.theta_y_deg.to_radians().tan(),
    )
}

/// Largest tilt per axis whose reflection still lands in the image, limited
/// by the nearer image border on each axis.
pub fn max_observable_tilt(cam: &CameraModel) -> TiltAngles {
    let c = cam.center();
    let mx = c.x.min(cam.width() as f64 - c.x).max(0.0);
    let my = c.y.min(cam.height() as f64 - c.y).max(0.0);
    TiltAngles::new(
        (mx / cam.fx()).atan().to_degrees(),
        (my / cam.fy()).atan().to_degrees(),
    )
}

/// Flat site whose reflection is used for tilt, as an offset in mm from the
/// corner knob (x along columns, y along rows).
///
/// One-knob-wide bricks use the midpoint of two neighbouring knobs along
/// the long axis; wider bricks use the centre of a 2×2 knob cell.
pub fn reflection_target_site(spec: &BrickSpec) -> Result<Vector2<f64>, TiltError> {
    let half = spec.knob_pitch_mm() / 2.0;
    match (spec.rows(), spec.cols()) {
        (1, 1) => Err(TiltError::UnsupportedBrick { rows: 1, cols: 1 }),
        (1, _) => Ok(Vector2::new(half, 0.0)),
        (_, 1) => Ok(Vector2::new(0.0, half)),
        _ => Ok(Vector2::new(half, half)),
    }
}
