//! Segmentation-mask contract and the observation interchange format.
//!
//! Any segmentation front end (the simulator, a recorded trial, or a real
//! instance-segmentation model running elsewhere) hands the estimator an
//! [`Observation`]: a list of per-knob binary masks plus an optional
//! ring-light reflection point. Masks may overlap.

mod codec;
mod provider;

pub use codec::{decode_observation, encode_observation, ParseError, ParseErrorKind, MAGIC};
pub use provider::{
    read_observation, write_observation, FileProvider, ObservationError, ObservationProvider,
    ReplayProvider,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pixel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("mask {label} has no set pixels")]
    Empty { label: u32 },
    #[error("mask {label}: bitmap has {actual} cells, expected {expected}")]
    SizeMismatch {
        label: u32,
        expected: usize,
        actual: usize,
    },
    #[error("mask {label} extends to ({x}, {y}), outside the {width}x{height} image")]
    OutOfBounds {
        label: u32,
        x: u64,
        y: u64,
        width: u32,
        height: u32,
    },
    #[error("observation depth must be positive, got {0} mm")]
    NonPositiveDepth(f64),
    #[error("reflection ({x}, {y}) lies outside the image")]
    ReflectionOutOfBounds { x: f64, y: f64 },
}

/// Horizontal run of set pixels `x_start..=x_end` on image row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowRun {
    pub y: u32,
    pub x_start: u32,
    pub x_end: u32,
}

/// Binary raster of one segmented knob, cropped to a box at `(x0, y0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnobMask {
    label: u32,
    x0: u32,
    y0: u32,
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl KnobMask {
    /// Builds a mask from a cropped row-major bitmap.
    pub fn from_bitmap(
        label: u32,
        x0: u32,
        y0: u32,
        width: u32,
        height: u32,
        bits: Vec<bool>,
    ) -> Result<Self, MaskError> {
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(MaskError::SizeMismatch {
                label,
                expected,
                actual: bits.len(),
            });
        }
        if !bits.iter().any(|&b| b) {
            return Err(MaskError::Empty { label });
        }
        Ok(KnobMask {
            label,
            x0,
            y0,
            width,
            height,
            bits,
        })
    }

    /// Builds a tightly cropped mask from a set of `(x, y)` pixels.
    pub fn from_pixels(
        label: u32,
        pixels: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self, MaskError> {
        let pixels: Vec<(u32, u32)> = pixels.into_iter().collect();
        let (Some(x0), Some(y0)) = (
            pixels.iter().map(|p| p.0).min(),
            pixels.iter().map(|p| p.1).min(),
        ) else {
            return Err(MaskError::Empty { label });
        };
        let x1 = pixels.iter().map(|p| p.0).max().unwrap_or(x0);
        let y1 = pixels.iter().map(|p| p.1).max().unwrap_or(y0);
        let width = x1 - x0 + 1;
        let height = y1 - y0 + 1;
        let mut bits = vec![false; width as usize * height as usize];
        for (x, y) in pixels {
            bits[(y - y0) as usize * width as usize + (x - x0) as usize] = true;
        }
        KnobMask::from_bitmap(label, x0, y0, width, height, bits)
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = label;
        self
    }

    /// `(x0, y0, width, height)` of the stored raster.
    pub fn bounds(&self) -> (u32, u32, u32, u32) {
        (self.x0, self.y0, self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Whether image pixel `(x, y)` is set.
    pub fn contains(&self, x: i64, y: i64) -> bool {
        let lx = x - self.x0 as i64;
        let ly = y - self.y0 as i64;
        if lx < 0 || ly < 0 || lx >= self.width as i64 || ly >= self.height as i64 {
            return false;
        }
        self.bits[ly as usize * self.width as usize + lx as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set pixels in image coordinates, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (self.x0 + (i % w) as u32, self.y0 + (i / w) as u32))
    }

    /// Maximal horizontal runs of set pixels, ordered by row then column.
    pub fn row_runs(&self) -> Vec<RowRun> {
        let w = self.width as usize;
        let mut runs = Vec::new();
        for (ly, row) in self.bits.chunks(w.max(1)).enumerate() {
            let mut start = None;
            for (lx, &b) in row.iter().enumerate() {
                match (b, start) {
                    (true, None) => start = Some(lx),
                    (false, Some(s)) => {
                        runs.push(self.run(ly, s, lx - 1));
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = start {
                runs.push(self.run(ly, s, w - 1));
            }
        }
        runs
    }

    fn run(&self, ly: usize, s: usize, e: usize) -> RowRun {
        RowRun {
            y: self.y0 + ly as u32,
            x_start: self.x0 + s as u32,
            x_end: self.x0 + e as u32,
        }
    }

    /// Mean position of the set pixels.
    pub fn centroid(&self) -> Pixel {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (x, y) in self.pixels() {
            sx += x as f64;
            sy += y as f64;
            n += 1;
        }
        Pixel::new(sx / n as f64, sy / n as f64)
    }

    fn check_bounds(&self, width: u32, height: u32) -> Result<(), MaskError> {
        let x_end = self.x0 as u64 + self.width as u64;
        let y_end = self.y0 as u64 + self.height as u64;
        if x_end > width as u64 || y_end > height as u64 {
            // Cropped rows/columns may be padding; only set pixels matter.
            if let Some((x, y)) = self.pixels().find(|&(x, y)| x >= width || y >= height) {
                return Err(MaskError::OutOfBounds {
                    label: self.label,
                    x: x as u64,
                    y: y as u64,
                    width,
                    height,
                });
            }
        }
        Ok(())
    }
}

/// Everything the pipeline consumes from one captured frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    width_px: u32,
    height_px: u32,
    z_mm: f64,
    reflection_px: Option<Pixel>,
    masks: Vec<KnobMask>,
    metadata: BTreeMap<String, String>,
}

impl Observation {
    pub fn new(
        width_px: u32,
        height_px: u32,
        z_mm: f64,
        reflection_px: Option<Pixel>,
        masks: Vec<KnobMask>,
    ) -> Result<Self, MaskError> {
        if !(z_mm > 0.0 && z_mm.is_finite()) {
            return Err(MaskError::NonPositiveDepth(z_mm));
        }
        if let Some(r) = reflection_px {
            let ok = r.x.is_finite()
                && r.y.is_finite()
                && r.x >= -0.5
                && r.y >= -0.5
                && r.x < width_px as f64 - 0.5
                && r.y < height_px as f64 - 0.5;
            if !ok {
                return Err(MaskError::ReflectionOutOfBounds { x: r.x, y: r.y });
            }
        }
        for m in &masks {
            m.check_bounds(width_px, height_px)?;
        }
        Ok(Observation {
            width_px,
            height_px,
            z_mm,
            reflection_px,
            masks,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn width(&self) -> u32 {
        self.width_px
    }

    pub fn height(&self) -> u32 {
        self.height_px
    }

    pub fn z_mm(&self) -> f64 {
        self.z_mm
    }

    pub fn reflection(&self) -> Option<Pixel> {
        self.reflection_px
    }

    pub fn masks(&self) -> &[KnobMask] {
        &self.masks
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub(crate) fn set_metadata(&mut self, metadata: BTreeMap<String, String>) {
        self.metadata = metadata;
    }
}
