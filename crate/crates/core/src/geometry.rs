//! Frames, pinhole projection and pixel/millimetre conversion.
//!
//! # Conventions
//!
//! - **Image**: origin at the top-left pixel, `u` to the right, `v` down.
//!   Pixel `(c, r)` has its centre at the continuous coordinate `(c, r)`.
//! - **Board / tool plane**: right-handed, `x` right and `y` up as seen from
//!   the camera, yaw counter-clockwise positive, angles in degrees.
//! - **Camera**: looks straight down the tool axis with its principal point at
//!   the tool centre. A point at tool-frame `(x, y)` on a plane `z` mm in front
//!   of the camera images at `center + (fx·x/z, −fy·y/z)`, i.e. the camera frame
//!   is `(x, −y, z)` of the tool frame.
//!
//! [`plane_to_image_vec`] and [`image_to_plane_vec`] are the only places where
//! the `y` flip happens; everything else goes through them.

use nalgebra::{Point2, Rotation2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A continuous image coordinate in pixels.
pub type Pixel = Point2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("depth must be positive, got {0} mm")]
    NonPositiveDepth(f64),
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("invalid brick spec: {0}")]
    InvalidBrick(String),
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn normalize_deg(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(360.0);
    if wrapped > 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Ideal pinhole camera whose principal point is the tool centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraParams", into = "CameraParams")]
pub struct CameraModel {
    fx_px: f64,
    fy_px: f64,
    width_px: u32,
    height_px: u32,
    center_px: Pixel,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct CameraParams {
    fx_px: f64,
    fy_px: f64,
    width_px: u32,
    height_px: u32,
    cx_px: f64,
    cy_px: f64,
}

impl TryFrom<CameraParams> for CameraModel {
    type Error = GeometryError;

    fn try_from(p: CameraParams) -> Result<Self, Self::Error> {
        CameraModel::new(
            p.fx_px,
            p.fy_px,
            p.width_px,
            p.height_px,
            Pixel::new(p.cx_px, p.cy_px),
        )
    }
}

impl From<CameraModel> for CameraParams {
    fn from(c: CameraModel) -> Self {
        CameraParams {
            fx_px: c.fx_px,
            fy_px: c.fy_px,
            width_px: c.width_px,
            height_px: c.height_px,
            cx_px: c.center_px.x,
            cy_px: c.center_px.y,
        }
    }
}

impl Default for CameraModel {
    /// 640×480 endoscope camera with `f = 830 px`, centred principal point.
    fn default() -> Self {
        CameraModel {
            fx_px: 830.0,
            fy_px: 830.0,
            width_px: 640,
            height_px: 480,
            center_px: Pixel::new(320.0, 240.0),
        }
    }
}

impl CameraModel {
    pub fn new(
        fx_px: f64,
        fy_px: f64,
        width_px: u32,
        height_px: u32,
        center_px: Pixel,
    ) -> Result<Self, GeometryError> {
        if !(fx_px > 0.0 && fx_px.is_finite() && fy_px > 0.0 && fy_px.is_finite()) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive, got ({fx_px}, {fy_px})"
            )));
        }
        if width_px == 0 || height_px == 0 {
            return Err(GeometryError::InvalidCamera("empty image".into()));
        }
        let inside = |v: f64, size: u32| v.is_finite() && v >= 0.0 && v <= size as f64;
        if !(inside(center_px.x, width_px) && inside(center_px.y, height_px)) {
            return Err(GeometryError::InvalidCamera(format!(
                "principal point ({}, {}) outside {width_px}x{height_px} image",
                center_px.x, center_px.y
            )));
        }
        Ok(CameraModel {
            fx_px,
            fy_px,
            width_px,
            height_px,
            center_px,
        })
    }

    pub fn fx(&self) -> f64 {
        self.fx_px
    }

    pub fn fy(&self) -> f64 {
        self.fy_px
    }

    pub fn width(&self) -> u32 {
        self.width_px
    }

    pub fn height(&self) -> u32 {
        self.height_px
    }

    /// Principal point, which is also where the tool centre images.
    pub fn center(&self) -> Pixel {
        self.center_px
    }

    /// Whether a continuous pixel coordinate lies on the sensor.
    pub fn contains(&self, p: &Pixel) -> bool {
        p.x >= -0.5
            && p.y >= -0.5
            && p.x < self.width_px as f64 - 0.5
            && p.y < self.height_px as f64 - 0.5
    }
}

/// Knob geometry of a brick type. Lengths in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BrickParams", into = "BrickParams")]
pub struct BrickSpec {
    knob_pitch_mm: f64,
    knob_radius_mm: f64,
    rows: u32,
    cols: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct BrickParams {
    #[serde(default = "default_pitch")]
    knob_pitch_mm: f64,
    #[serde(default = "default_knob_radius")]
    knob_radius_mm: f64,
    rows: u32,
    cols: u32,
}

fn default_pitch() -> f64 {
    8.0
}

fn default_knob_radius() -> f64 {
    2.4
}

impl TryFrom<BrickParams> for BrickSpec {
    type Error = GeometryError;

    fn try_from(p: BrickParams) -> Result<Self, Self::Error> {
        BrickSpec::new(p.knob_pitch_mm, p.knob_radius_mm, p.rows, p.cols)
    }
}

impl From<BrickSpec> for BrickParams {
    fn from(b: BrickSpec) -> Self {
        BrickParams {
            knob_pitch_mm: b.knob_pitch_mm,
            knob_radius_mm: b.knob_radius_mm,
            rows: b.rows,
            cols: b.cols,
        }
    }
}

impl Default for BrickSpec {
    /// A 2×4 brick with standard 8 mm pitch and 2.4 mm knob radius.
    fn default() -> Self {
        BrickSpec {
            knob_pitch_mm: 8.0,
            knob_radius_mm: 2.4,
            rows: 2,
            cols: 4,
        }
    }
}

impl BrickSpec {
    pub fn new(
        knob_pitch_mm: f64,
        knob_radius_mm: f64,
        rows: u32,
        cols: u32,
    ) -> Result<Self, GeometryError> {
        if !(knob_radius_mm > 0.0 && knob_pitch_mm > 2.0 * knob_radius_mm) {
            return Err(GeometryError::InvalidBrick(format!(
                "need pitch > 2·radius > 0, got pitch {knob_pitch_mm}, radius {knob_radius_mm}"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(GeometryError::InvalidBrick(format!(
                "knob grid must be at least 1x1, got {rows}x{cols}"
            )));
        }
        Ok(BrickSpec {
            knob_pitch_mm,
            knob_radius_mm,
            rows,
            cols,
        })
    }

    /// Same knob geometry with a different footprint.
    pub fn with_footprint(&self, rows: u32, cols: u32) -> Result<Self, GeometryError> {
        BrickSpec::new(self.knob_pitch_mm, self.knob_radius_mm, rows, cols)
    }

    pub fn knob_pitch_mm(&self) -> f64 {
        self.knob_pitch_mm
    }

    pub fn knob_radius_mm(&self) -> f64 {
        self.knob_radius_mm
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }
}

/// Planar misalignment: translation in the board plane plus yaw.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarOffset {
    pub dx_mm: f64,
    pub dy_mm: f64,
    pub dyaw_deg: f64,
}

impl PlanarOffset {
    pub const ZERO: PlanarOffset = PlanarOffset {
        dx_mm: 0.0,
        dy_mm: 0.0,
        dyaw_deg: 0.0,
    };

    /// Builds an offset with yaw normalized into `(-180, 180]`.
    pub fn new(dx_mm: f64, dy_mm: f64, dyaw_deg: f64) -> Self {
        PlanarOffset {
            dx_mm,
            dy_mm,
            dyaw_deg: normalize_deg(dyaw_deg),
        }
    }

    pub fn translation(&self) -> Vector2<f64> {
        Vector2::new(self.dx_mm, self.dy_mm)
    }

    pub fn translation_norm(&self) -> f64 {
        self.dx_mm.hypot(self.dy_mm)
    }

    pub fn scaled(&self, k: f64) -> Self {
        PlanarOffset::new(self.dx_mm * k, self.dy_mm * k, self.dyaw_deg * k)
    }

    pub fn is_finite(&self) -> bool {
        self.dx_mm.is_finite() && self.dy_mm.is_finite() && self.dyaw_deg.is_finite()
    }
}

/// Roll/pitch of a surface relative to the image plane, in degrees.
///
/// `theta_x_deg` is the inclination that moves the ring-light reflection
/// along image `u`, `theta_y_deg` along image `v`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TiltAngles {
    pub theta_x_deg: f64,
    pub theta_y_deg: f64,
}

impl TiltAngles {
    pub fn new(theta_x_deg: f64, theta_y_deg: f64) -> Self {
        TiltAngles {
            theta_x_deg,
            theta_y_deg,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.theta_x_deg.abs().max(self.theta_y_deg.abs())
    }
}

/// Planar rigid pose in the board frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x_mm: f64,
    pub y_mm: f64,
    pub yaw_deg: f64,
}

impl Pose2 {
    pub fn new(x_mm: f64, y_mm: f64, yaw_deg: f64) -> Self {
        Pose2 {
            x_mm,
            y_mm,
            yaw_deg,
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x_mm, self.y_mm)
    }

    pub fn rotation(&self) -> Rotation2<f64> {
        Rotation2::new(self.yaw_deg.to_radians())
    }

    /// Maps a point expressed in this pose's frame to the board frame.
    pub fn to_world(&self, local: Vector2<f64>) -> Vector2<f64> {
        self.position() + self.rotation() * local
    }

    /// Maps a board-frame point into this pose's frame.
    pub fn to_local(&self, world: Vector2<f64>) -> Vector2<f64> {
        self.rotation().inverse() * (world - self.position())
    }

    /// Displacement `self − reference` with the yaw difference normalized.
    pub fn offset_from(&self, reference: &Pose2) -> PlanarOffset {
        PlanarOffset::new(
            self.x_mm - reference.x_mm,
            self.y_mm - reference.y_mm,
            self.yaw_deg - reference.yaw_deg,
        )
    }

    pub fn shifted(&self, offset: &PlanarOffset) -> Pose2 {
        Pose2::new(
            self.x_mm + offset.dx_mm,
            self.y_mm + offset.dy_mm,
            normalize_deg(self.yaw_deg + offset.dyaw_deg),
        )
    }
}

/// Full tool pose. `z_mm` is the camera height above the board surface.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ToolPose {
    pub x_mm: f64,
    pub y_mm: f64,
    pub z_mm: f64,
    pub yaw_deg: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
}

impl ToolPose {
    pub fn planar(x_mm: f64, y_mm: f64, z_mm: f64, yaw_deg: f64) -> Self {
        ToolPose {
            x_mm,
            y_mm,
            z_mm,
            yaw_deg,
            roll_deg: 0.0,
            pitch_deg: 0.0,
        }
    }

    pub fn pose2(&self) -> Pose2 {
        Pose2::new(self.x_mm, self.y_mm, self.yaw_deg)
    }

    pub fn with_pose2(&self, p: Pose2) -> ToolPose {
        ToolPose {
            x_mm: p.x_mm,
            y_mm: p.y_mm,
            yaw_deg: p.yaw_deg,
            ..*self
        }
    }

    pub fn shifted(&self, offset: &PlanarOffset) -> ToolPose {
        self.with_pose2(self.pose2().shifted(offset))
    }
}

fn check_depth(z_mm: f64) -> Result<(), GeometryError> {
    if z_mm > 0.0 && z_mm.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonPositiveDepth(z_mm))
    }
}

/// Projects a camera-frame point (mm, depth along `z`) to pixels.
///
/// The result may fall outside the image; callers clip.
pub fn project_point(cam: &CameraModel, p_mm: &Vector3<f64>) -> Result<Pixel, GeometryError> {
    check_depth(p_mm.z)?;
    Ok(Pixel::new(
        cam.center_px.x + cam.fx_px * p_mm.x / p_mm.z,
        cam.center_px.y + cam.fy_px * p_mm.y / p_mm.z,
    ))
}

/// Apparent knob radius in pixels at camera-to-brick distance `z_mm`.
pub fn expected_knob_radius_px(
    cam: &CameraModel,
    spec: &BrickSpec,
    z_mm: f64,
) -> Result<f64, GeometryError> {
    check_depth(z_mm)?;
    Ok(cam.fx_px * spec.knob_radius_mm / z_mm)
}

/// Converts a pixel displacement at depth `z_mm` to a camera-frame
/// displacement in millimetres.
pub fn px_to_mm(
    cam: &CameraModel,
    z_mm: f64,
    d_px: &Vector2<f64>,
) -> Result<Vector2<f64>, GeometryError> {
    check_depth(z_mm)?;
    Ok(Vector2::new(
        d_px.x * z_mm / cam.fx_px,
        d_px.y * z_mm / cam.fy_px,
    ))
}

/// Inverse of [`px_to_mm`].
pub fn mm_to_px(
    cam: &CameraModel,
    z_mm: f64,
    d_mm: &Vector2<f64>,
) -> Result<Vector2<f64>, GeometryError> {
    check_depth(z_mm)?;
    Ok(Vector2::new(
        d_mm.x * cam.fx_px / z_mm,
        d_mm.y * cam.fy_px / z_mm,
    ))
}

/// Tool-plane vector (x right, y up) to image axes (u right, v down).
pub fn plane_to_image_vec(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(v.x, -v.y)
}

/// Image-axis vector (u right, v down) to tool-plane axes (x right, y up).
pub fn image_to_plane_vec(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(v.x, -v.y)
}

/// Pixel at which a tool-frame point on a plane `z_mm` away images.
pub fn tool_point_to_pixel(
    cam: &CameraModel,
    z_mm: f64,
    p_tool_mm: &Vector2<f64>,
) -> Result<Pixel, GeometryError> {
    let cam_frame = plane_to_image_vec(p_tool_mm);
    project_point(cam, &Vector3::new(cam_frame.x, cam_frame.y, z_mm))
}

/// Tool-frame millimetre displacement corresponding to an image displacement.
pub fn image_displacement_to_tool_mm(
    cam: &CameraModel,
    z_mm: f64,
    d_px: &Vector2<f64>,
) -> Result<Vector2<f64>, GeometryError> {
    Ok(image_to_plane_vec(&px_to_mm(cam, z_mm, d_px)?))
}
