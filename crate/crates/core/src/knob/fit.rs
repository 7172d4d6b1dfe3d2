use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::cost::{FitWeights, PreparedMask};
use super::lines::BoundingLines;
use super::EstimatorError;
use crate::geometry::Pixel;
use crate::mask_io::KnobMask;
use crate::optimize::{coarse_grid, golden_section};

/// Radius search bracket relative to the expected radius.
pub const BRACKET: (f64, f64) = (0.5, 1.5);
/// Spacing of the exhaustive radius scan that seeds the golden-section
/// search, px. The cost is piecewise constant in the coverage term, so it
/// has many shallow local minima; a sparse seed grid lands in the wrong one.
pub const SCAN_STEP_PX: f64 = 0.05;
/// Final golden-section bracket width, px.
pub const RADIUS_TOLERANCE_PX: f64 = 1e-3;
/// A minimum closer than this to either end of the bracket is not interior.
pub const BOUNDARY_MARGIN_PX: f64 = 0.1;

/// A knob circle reconstructed from one mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedKnob {
    pub center_px: Pixel,
    pub radius_px: f64,
    pub cost: f64,
    pub mask_label: u32,
    pub lines: BoundingLines,
}

impl FittedKnob {
    /// Largest deviation from tangency to either bounding line, px.
    pub fn tangency_error(&self) -> f64 {
        let du = (self.center_px.x - self.lines.v_line()).abs() - self.radius_px;
        let dv = (self.center_px.y - self.lines.h_line()).abs() - self.radius_px;
        du.abs().max(dv.abs())
    }
}

/// Finds the radius minimizing the fit cost for a circle tangent to both
/// bounding lines; the centre follows from the radius.
///
/// The radius is searched in `[0.5, 1.5]·r_exp` with
/// `r_exp = sqrt(expected_area / π)`: a scan at [`SCAN_STEP_PX`] picks the
/// best grid point, then golden-section search refines inside the two
/// neighbouring cells and is kept only if it improves on the grid.
pub fn fit_circle(
    mask: &KnobMask,
    lines: &BoundingLines,
    expected_area_px2: f64,
    weights: &FitWeights,
) -> Result<FittedKnob, EstimatorError> {
    if !(expected_area_px2 > 0.0 && expected_area_px2.is_finite()) {
        return Err(EstimatorError::Domain(format!(
            "expected area must be positive, got {expected_area_px2}"
        )));
    }
    weights.validate()?;
    let prepared = PreparedMask::new(mask);
    let cost = |r: f64| prepared.cost(&lines.center_for_radius(r), r, expected_area_px2, weights);

    let r_exp = (expected_area_px2 / PI).sqrt();
    let lo = BRACKET.0 * r_exp;
    let hi = BRACKET.1 * r_exp;
    let steps = ((hi - lo) / SCAN_STEP_PX).floor() as usize;
    let (_, grid_r, grid_cost) =
        coarse_grid(cost, lo, lo + steps as f64 * SCAN_STEP_PX, steps + 1);
    let a = (grid_r - SCAN_STEP_PX).max(lo);
    let b = (grid_r + SCAN_STEP_PX).min(hi);
    let refined = golden_section(cost, a, b, RADIUS_TOLERANCE_PX);

    let (r, c) = if refined.value <= grid_cost {
        (refined.x, refined.value)
    } else {
        (grid_r, grid_cost)
    };
    let knob = FittedKnob {
        center_px: lines.center_for_radius(r),
        radius_px: r,
        cost: c,
        mask_label: mask.label(),
        lines: *lines,
    };
    let at_edge = r - lo < BOUNDARY_MARGIN_PX || hi - r < BOUNDARY_MARGIN_PX;
    if at_edge {
        return Err(EstimatorError::NoInteriorMinimum {
            best: Box::new(knob),
        });
    }
    Ok(knob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knob::lines::find_bounding_lines;
    use crate::sim::render_disc_mask;

    const TOOL: Pixel = Pixel::new(320.0, 240.0);

    fn fit(mask: &KnobMask, area: f64, w: &FitWeights) -> FittedKnob {
        let lines = find_bounding_lines(mask, &TOOL, 3).unwrap();
        fit_circle(mask, &lines, area, w).unwrap()
    }

    #[test]
    fn recovers_unoccluded_disc() {
        let truth = Pixel::new(251.37, 173.82);
        let r = 66.4;
        let m = render_disc_mask(0, truth, r, None, 640, 480).unwrap();
        let k = fit(&m, PI * r * r, &FitWeights::default());
        assert!((k.center_px - truth).norm() < 1.0, "{k:?}");
        assert!((k.radius_px - r).abs() < 1.0);
        assert!(k.tangency_error() < 1e-6);
    }

    #[test]
    fn recovers_far_clipped_disc() {
        let truth = Pixel::new(251.37, 173.82);
        let r = 66.4;
        let m = render_disc_mask(0, truth, r, Some((TOOL, 130.0)), 640, 480).unwrap();
        let full = render_disc_mask(0, truth, r, None, 640, 480).unwrap();
        assert!(m.count() < full.count() * 9 / 10);
        let k = fit(&m, PI * r * r, &FitWeights::default());
        assert!((k.center_px - truth).norm() < 1.0, "{k:?}");
        assert!((k.radius_px - r).abs() < 1.0);
    }

    #[test]
    fn area_term_disabled_ignores_expected_area() {
        let truth = Pixel::new(400.2, 300.6);
        let r = 50.0;
        let m = render_disc_mask(0, truth, r, None, 640, 480).unwrap();
        let w = FitWeights {
            alpha: 3.5e4,
            beta: 0.0,
        };
        let a = fit(&m, PI * r * r, &w);
        let b = fit(&m, 2.0 * PI * r * r, &w);
        assert!((a.radius_px - b.radius_px).abs() < 0.1);
        assert!((a.center_px - b.center_px).norm() < 0.15);
        assert!((a.center_px - truth).norm() < 1.0);
    }

    #[test]
    fn boundary_minimum_is_reported_with_best_effort() {
        // Disc far larger than expected: coverage keeps pushing r upward.
        let m = render_disc_mask(0, Pixel::new(200.0, 150.0), 60.0, None, 640, 480).unwrap();
        let lines = find_bounding_lines(&m, &TOOL, 3).unwrap();
        let err = fit_circle(&m, &lines, PI * 20.0 * 20.0, &FitWeights::default()).unwrap_err();
        match err {
            EstimatorError::NoInteriorMinimum { best } => {
                assert!((best.radius_px - 30.0).abs() < BOUNDARY_MARGIN_PX);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
