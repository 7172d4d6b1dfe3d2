use nalgebra::Vector2;

use super::EstimatorError;
use crate::geometry::{
    image_displacement_to_tool_mm, image_to_plane_vec, CameraModel, Pixel, PlanarOffset,
};

/// Offset of the observed knob pair from its calibrated position, in the
/// tool frame (x right, y up, yaw counter-clockwise).
///
/// Translation is the displacement of the pair midpoint converted to mm at
/// depth `z_mm`; yaw is the signed angle from the expected centre-to-centre
/// vector to the observed one. Both pairs are ordered top-to-bottom first.
pub fn compute_offset(
    pair: (Pixel, Pixel),
    expected: (Pixel, Pixel),
    cam: &CameraModel,
    z_mm: f64,
) -> Result<PlanarOffset, EstimatorError> {
    let (a_top, a_bottom) = top_first(pair);
    let (e_top, e_bottom) = top_first(expected);
    let e_vec = image_to_plane_vec(&(e_bottom - e_top));
    let a_vec = image_to_plane_vec(&(a_bottom - a_top));
    if e_vec.norm() == 0.0 {
        return Err(EstimatorError::Domain(
            "expected knob centres coincide".into(),
        ));
    }
    if a_vec.norm() == 0.0 {
        return Err(EstimatorError::Domain(
            "observed knob centres coincide".into(),
        ));
    }
    let a_mid = (a_top.coords + a_bottom.coords) * 0.5;
    let e_mid = (e_top.coords + e_bottom.coords) * 0.5;
    let t = image_displacement_to_tool_mm(cam, z_mm, &(a_mid - e_mid))?;
    let yaw = signed_angle(&e_vec, &a_vec).to_degrees();
    Ok(PlanarOffset::new(t.x, t.y, yaw))
}

fn top_first((a, b): (Pixel, Pixel)) -> (Pixel, Pixel) {
    if (b.y, b.x) < (a.y, a.x) {
        (b, a)
    } else {
        (a, b)
    }
}

fn signed_angle(from: &Vector2<f64>, to: &Vector2<f64>) -> f64 {
    let cross = from.x * to.y - from.y * to.x;
    cross.atan2(from.dot(to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Rotation2;

    fn cam() -> CameraModel {
        CameraModel::default()
    }

    fn expected() -> (Pixel, Pixel) {
        (Pixel::new(320.0, 129.5), Pixel::new(320.0, 350.5))
    }

    #[test]
    fn aligned_pair_has_zero_offset() {
        let o = compute_offset(expected(), expected(), &cam(), 30.0).unwrap();
        assert_eq!(o, PlanarOffset::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn image_translation_maps_to_mm() {
        let (t, b) = expected();
        let shift = Vector2::new(10.0, 0.0);
        let o = compute_offset((t + shift, b + shift), expected(), &cam(), 30.0).unwrap();
        assert_abs_diff_eq!(o.dx_mm, 0.361, epsilon = 5e-4);
        assert_abs_diff_eq!(o.dy_mm, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.dyaw_deg, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_about_midpoint_is_pure_yaw() {
        let (t, b) = expected();
        let mid = Pixel::from((t.coords + b.coords) * 0.5);
        // Counter-clockwise in the tool frame is clockwise in image
        // coordinates because v points down.
        let rot = Rotation2::new(-(2.0f64).to_radians());
        let rt = mid + rot * (t - mid);
        let rb = mid + rot * (b - mid);
        let o = compute_offset((rt, rb), expected(), &cam(), 30.0).unwrap();
        assert_abs_diff_eq!(o.dyaw_deg, 2.0, epsilon = 1e-9);
        assert!(o.dx_mm.abs() < 1e-9 && o.dy_mm.abs() < 1e-9);
    }

    #[test]
    fn pair_order_does_not_matter() {
        let (t, b) = expected();
        let shift = Vector2::new(-3.0, 7.0);
        let a = compute_offset((t + shift, b + shift), expected(), &cam(), 30.0).unwrap();
        let c = compute_offset((b + shift, t + shift), expected(), &cam(), 30.0).unwrap();
        assert_eq!(a, c);
        assert!(a.dy_mm < 0.0, "image-down is tool -y");
    }

    #[test]
    fn coincident_centres_are_rejected() {
        let p = Pixel::new(10.0, 10.0);
        assert!(compute_offset((p, p), expected(), &cam(), 30.0).is_err());
        assert!(compute_offset(expected(), (p, p), &cam(), 30.0).is_err());
    }
}
