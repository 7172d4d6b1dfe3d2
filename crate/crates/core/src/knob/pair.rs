use std::cmp::Ordering;

use super::fit::FittedKnob;
use super::EstimatorError;
use crate::geometry::{BrickSpec, CameraModel, GeometryError, Pixel};

/// Allowed relative deviation of a pair's spacing from the projected pitch.
pub const PITCH_TOLERANCE: f64 = 0.25;
/// Allowed deviation of a pair's axis from the image vertical, degrees.
pub const VERTICAL_TOLERANCE_DEG: f64 = 30.0;

/// Picks the vertical knob pair whose midpoint is nearest the tool centre.
///
/// Returns `(top, bottom)` ordered by image row. Ties on distance go to the
/// lower summed fit cost, then to lexicographically smaller centres.
pub fn select_target_pair(
    knobs: &[FittedKnob],
    tool_center: &Pixel,
    cam: &CameraModel,
    spec: &BrickSpec,
    z_mm: f64,
) -> Result<(FittedKnob, FittedKnob), EstimatorError> {
    if !(z_mm > 0.0) {
        return Err(GeometryError::NonPositiveDepth(z_mm).into());
    }
    let pitch_px = cam.fy() * spec.knob_pitch_mm() / z_mm;
    let max_tilt = VERTICAL_TOLERANCE_DEG.to_radians();

    let mut best: Option<(f64, f64, [f64; 4], usize, usize)> = None;
    for i in 0..knobs.len() {
        for j in (i + 1)..knobs.len() {
            let (top, bottom) = ordered(&knobs[i], &knobs[j]);
            let d = bottom.center_px - top.center_px;
            let spacing = d.norm();
            if (spacing - pitch_px).abs() > PITCH_TOLERANCE * pitch_px {
                continue;
            }
            if d.x.abs().atan2(d.y.abs()) > max_tilt {
                continue;
            }
            let mid = Pixel::from((top.center_px.coords + bottom.center_px.coords) * 0.5);
            let key = (
                (mid - tool_center).norm(),
                top.cost + bottom.cost,
                [
                    top.center_px.x,
                    top.center_px.y,
                    bottom.center_px.x,
                    bottom.center_px.y,
                ],
                i,
                j,
            );
            let better = match &best {
                None => true,
                Some(b) => compare(&key, b) == Ordering::Less,
            };
            if better {
                best = Some(key);
            }
        }
    }
    let (_, _, _, i, j) = best.ok_or(EstimatorError::NoTargetPair {
        candidates: knobs.len(),
    })?;
    let (top, bottom) = ordered(&knobs[i], &knobs[j]);
    Ok((*top, *bottom))
}

fn ordered<'a>(a: &'a FittedKnob, b: &'a FittedKnob) -> (&'a FittedKnob, &'a FittedKnob) {
    let key = |k: &FittedKnob| (k.center_px.y, k.center_px.x);
    if key(a).partial_cmp(&key(b)) == Some(Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    }
}

fn compare(
    a: &(f64, f64, [f64; 4], usize, usize),
    b: &(f64, f64, [f64; 4], usize, usize),
) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then_with(|| {
        a.2.iter()
            .zip(b.2.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}
