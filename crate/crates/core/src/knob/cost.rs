use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::geometry::Pixel;
use crate::mask_io::{KnobMask, RowRun};

/// Weights of the circle-fit cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWeights {
    /// Weight of the fraction of mask pixels left outside the circle.
    pub alpha: f64,
    /// Weight of the area discrepancy, per px².
    pub beta: f64,
}

impl Default for FitWeights {
    fn default() -> Self {
        FitWeights {
            alpha: 3.5e4,
            beta: 1.0,
        }
    }
}

impl FitWeights {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.alpha > 0.0 && self.beta >= 0.0 && self.alpha.is_finite() && self.beta.is_finite() {
            Ok(())
        } else {
            Err(EstimatorError::Domain(format!(
                "fit weights need alpha > 0 and beta >= 0, got {self:?}"
            )))
        }
    }
}

/// Run-length view of a mask for fast repeated coverage queries.
#[derive(Debug, Clone)]
pub(crate) struct PreparedMask {
    runs: Vec<RowRun>,
    count: usize,
}

impl PreparedMask {
    pub(crate) fn new(mask: &KnobMask) -> Self {
        let runs = mask.row_runs();
        let count = runs
            .iter()
            .map(|r| (r.x_end - r.x_start + 1) as usize)
            .sum();
        PreparedMask { runs, count }
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    /// Number of mask pixels whose centres lie inside or on the circle.
    pub(crate) fn covered(&self, center: &Pixel, r: f64) -> usize {
        let r2 = r * r;
        let mut total = 0usize;
        for run in &self.runs {
            let dy = run.y as f64 - center.y;
            let dy2 = dy * dy;
            if dy2 > r2 {
                continue;
            }
            let inside = |x: i64| {
                let dx = x as f64 - center.x;
                dx * dx + dy2 <= r2
            };
            let half = (r2 - dy2).sqrt();
            // Chord endpoints from the closed form, then nudged so the
            // integer interval matches the exact per-pixel predicate.
            let mut lo = (center.x - half).ceil() as i64;
            let mut hi = (center.x + half).floor() as i64;
            while lo <= hi && !inside(lo) {
                lo += 1;
            }
            while inside(lo - 1) {
                lo -= 1;
            }
            while hi >= lo && !inside(hi) {
                hi -= 1;
            }
            while inside(hi + 1) {
                hi += 1;
            }
            if lo > hi {
                continue;
            }
            let a = lo.max(run.x_start as i64);
            let b = hi.min(run.x_end as i64);
            if a <= b {
                total += (b - a + 1) as usize;
            }
        }
        total
    }

    pub(crate) fn cost(
        &self,
        center: &Pixel,
        r: f64,
        expected_area_px2: f64,
        w: &FitWeights,
    ) -> f64 {
        let covered = self.covered(center, r) as f64;
        w.alpha * (1.0 - covered / self.count as f64)
            + w.beta * (expected_area_px2 - PI * r * r).abs()
    }
}

/// Circle-fit cost: `α·(1 − |mask ∩ circle| / |mask|) + β·|E_area − π r²|`,
/// counting mask pixels by their centres.
pub fn eval_cost(
    mask: &KnobMask,
    center: &Pixel,
    r: f64,
    expected_area_px2: f64,
    weights: &FitWeights,
) -> Result<f64, EstimatorError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(EstimatorError::Domain(format!(
            "circle radius must be positive, got {r}"
        )));
    }
    if !(expected_area_px2 > 0.0 && expected_area_px2.is_finite()) {
        return Err(EstimatorError::Domain(format!(
            "expected area must be positive, got {expected_area_px2}"
        )));
    }
    let prepared = PreparedMask::new(mask);
    if prepared.count() == 0 {
        return Err(EstimatorError::Domain("empty mask".into()));
    }
    Ok(prepared.cost(center, r, expected_area_px2, weights))
}
