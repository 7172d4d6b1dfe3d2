//! Reference readings taken with the tool aligned to a brick.
//!
//! Stored as TOML:
//!
//! ```toml
//! expected_knob_top = [320.0, 129.6]
//! expected_knob_bottom = [320.0, 350.4]
//! expected_reflection = [320.0, 240.0]
//! ```
//!
//! All values are pixel coordinates (u right, v down).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pixel;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("cannot read calibration {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid calibration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid calibration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibrationFile", into = "CalibrationFile")]
pub struct Calibration {
    knob_top: Pixel,
    knob_bottom: Pixel,
    reflection: Pixel,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct CalibrationFile {
    expected_knob_top: [f64; 2],
    expected_knob_bottom: [f64; 2],
    expected_reflection: [f64; 2],
}

impl TryFrom<CalibrationFile> for Calibration {
    type Error = CalibrationError;

    fn try_from(f: CalibrationFile) -> Result<Self, Self::Error> {
        let p = |a: [f64; 2]| Pixel::new(a[0], a[1]);
        Calibration::new(
            (p(f.expected_knob_top), p(f.expected_knob_bottom)),
            p(f.expected_reflection),
        )
    }
}

impl From<Calibration> for CalibrationFile {
    fn from(c: Calibration) -> Self {
        CalibrationFile {
            expected_knob_top: [c.knob_top.x, c.knob_top.y],
            expected_knob_bottom: [c.knob_bottom.x, c.knob_bottom.y],
            expected_reflection: [c.reflection.x, c.reflection.y],
        }
    }
}

impl Calibration {
    /// Knob centres are reordered top-to-bottom.
    pub fn new(knobs: (Pixel, Pixel), reflection: Pixel) -> Result<Self, CalibrationError> {
        let all = [knobs.0, knobs.1, reflection];
        if all.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(CalibrationError::Invalid("non-finite pixel".into()));
        }
        if knobs.0 == knobs.1 {
            return Err(CalibrationError::Invalid(
                "expected knob centres coincide".into(),
            ));
        }
        let (top, bottom) = if (knobs.1.y, knobs.1.x) < (knobs.0.y, knobs.0.x) {
            (knobs.1, knobs.0)
        } else {
            knobs
        };
        Ok(Calibration {
            knob_top: top,
            knob_bottom: bottom,
            reflection,
        })
    }

    /// `(top, bottom)` expected knob centres.
    pub fn expected_knobs(&self) -> (Pixel, Pixel) {
        (self.knob_top, self.knob_bottom)
    }

    pub fn expected_reflection(&self) -> Pixel {
        self.reflection
    }

    pub fn from_toml_str(s: &str) -> Result<Self, CalibrationError> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("calibration serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        let text = fs::read_to_string(path).map_err(|source| CalibrationError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Calibration::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = Calibration::new(
            (Pixel::new(320.0, 350.5), Pixel::new(320.0, 129.5)),
            Pixel::new(320.0, 240.0),
        )
        .unwrap();
        assert_eq!(c.expected_knobs().0.y, 129.5);
        let text = c.to_toml_string();
        assert!(text.contains("expected_knob_top"));
        assert_eq!(Calibration::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejects_coincident_knobs() {
        let p = Pixel::new(1.0, 2.0);
        assert!(Calibration::new((p, p), p).is_err());
        assert!(Calibration::from_toml_str(
            "expected_knob_top = [1.0, 2.0]\nexpected_knob_bottom = [1.0, 2.0]\nexpected_reflection = [0.0, 0.0]\n"
        )
        .is_err());
    }
}
