//! Perception and control stack for an eye-in-finger LEGO manipulation tool.
//!
//! - [`geometry`]: frames, pinhole projection, pixel/millimetre conversion.
//! - [`mask_io`]: the segmentation-mask contract and observation file format.
//! - [`knob`]: occluded-knob circle fitting and planar offset estimation.
//! - [`tilt`]: brick roll/pitch from the ring-light reflection.
//! - [`sim`]: ground-truth world and synthetic renderer.
//! - [`servo`]: the peek / pick / place / inspect loop.
//! - [`experiment`]: accuracy and robustness sweeps.

pub mod calibration;
pub mod config;
pub mod experiment;
pub mod geometry;
pub mod knob;
pub mod mask_io;
pub mod optimize;
pub mod servo;
pub mod sim;
pub mod tilt;
