//! Knob pose estimation from partially occluded segmentation masks.
//!
//! For every mask the estimator finds the two bounding lines facing the tool
//! centre, fits a circle tangent to both by minimizing a coverage + area cost
//! over the radius alone, and takes the circle centre as the knob centre.
//! The vertical pair nearest the tool centre is then compared with the
//! calibrated knob positions to give the planar offset.

mod cost;
mod fit;
mod lines;
mod offset;
mod pair;

pub use cost::{eval_cost, FitWeights};
pub use fit::{
    fit_circle, FittedKnob, BOUNDARY_MARGIN_PX, BRACKET, RADIUS_TOLERANCE_PX, SCAN_STEP_PX,
};
pub use lines::{find_bounding_lines, BoundingLines, DEFAULT_LINE_SUPPORT};
pub use offset::compute_offset;
pub use pair::{select_target_pair, PITCH_TOLERANCE, VERTICAL_TOLERANCE_DEG};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::Calibration;
use crate::geometry::{
    expected_knob_radius_px, BrickSpec, CameraModel, GeometryError, PlanarOffset,
};
use crate::mask_io::Observation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("mask {label} has no row or column with {support} pixels")]
    DegenerateMask { label: u32, support: usize },
    #[error("circle fit for mask {} hit the radius bracket edge", best.mask_label)]
    NoInteriorMinimum { best: Box<FittedKnob> },
    #[error("no vertical knob pair among {candidates} fitted knobs")]
    NoTargetPair { candidates: usize },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Fits every mask of `obs` independently, preserving mask order. Expected
/// knob area follows from the observation depth.
pub fn fit_observation(
    obs: &Observation,
    cam: &CameraModel,
    brick: &BrickSpec,
    weights: &FitWeights,
    line_support: usize,
) -> Result<Vec<Result<FittedKnob, EstimatorError>>, EstimatorError> {
    let r = expected_knob_radius_px(cam, brick, obs.z_mm())?;
    let area = PI * r * r;
    let center = cam.center();
    Ok(obs
        .masks()
        .par_iter()
        .map(|m| {
            let lines = find_bounding_lines(m, &center, line_support)?.refined(r);
            fit_circle(m, &lines, area, weights)
        })
        .collect())
}

/// Result of running the full estimator on one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnobEstimate {
    /// Target-pair offset from calibration, tool frame.
    pub offset: PlanarOffset,
    /// `(top, bottom)` target pair.
    pub pair: (FittedKnob, FittedKnob),
    /// Every mask that produced a usable circle.
    pub fitted: Vec<FittedKnob>,
    /// Masks that were skipped (degenerate or boundary fits).
    pub rejected: usize,
}

/// Per-observation knob pipeline bound to one camera, brick type and
/// calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct KnobEstimator {
    pub cam: CameraModel,
    pub brick: BrickSpec,
    pub weights: FitWeights,
    pub line_support: usize,
    pub calibration: Calibration,
}

impl KnobEstimator {
    pub fn new(
        cam: CameraModel,
        brick: BrickSpec,
        weights: FitWeights,
        calibration: Calibration,
    ) -> Self {
        KnobEstimator {
            cam,
            brick,
            weights,
            line_support: DEFAULT_LINE_SUPPORT,
            calibration,
        }
    }

    /// `π·r_exp²` for the knob radius projected at `z_mm`.
    pub fn expected_area(&self, z_mm: f64) -> Result<f64, EstimatorError> {
        let r = expected_knob_radius_px(&self.cam, &self.brick, z_mm)?;
        Ok(PI * r * r)
    }

    /// Fits every mask independently, preserving mask order.
    pub fn fit_masks(
        &self,
        obs: &Observation,
    ) -> Result<Vec<Result<FittedKnob, EstimatorError>>, EstimatorError> {
        fit_observation(
            obs,
            &self.cam,
            &self.brick,
            &self.weights,
            self.line_support,
        )
    }

    pub fn estimate(&self, obs: &Observation) -> Result<KnobEstimate, EstimatorError> {
        let results = self.fit_masks(obs)?;
        let total = results.len();
        let fitted: Vec<FittedKnob> = results.into_iter().filter_map(Result::ok).collect();
        let rejected = total - fitted.len();
        let pair = select_target_pair(
            &fitted,
            &self.cam.center(),
            &self.cam,
            &self.brick,
            obs.z_mm(),
        )?;
        let offset = compute_offset(
            (pair.0.center_px, pair.1.center_px),
            self.calibration.expected_knobs(),
            &self.cam,
            obs.z_mm(),
        )?;
        Ok(KnobEstimate {
            offset,
            pair,
            fitted,
            rejected,
        })
    }
}
