use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{decode_observation, encode_observation, Observation, ParseError};
use crate::geometry::ToolPose;

#[derive(Debug, Error)]
pub enum ObservationError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("replay exhausted after {0} observations")]
    Exhausted(usize),
    #[error("render failed: {0}")]
    Render(String),
}

/// Source of per-frame observations.
///
/// Providers are single-owner and stateful; callers serialize captures.
/// Returning an observation with zero masks is a valid "nothing to segment"
/// answer; errors are reserved for failures to produce a frame at all.
pub trait ObservationProvider {
    fn capture(&mut self, tool_pose: &ToolPose) -> Result<Observation, ObservationError>;
}

pub fn read_observation(path: &Path) -> Result<Observation, ObservationError> {
    let bytes = fs::read(path).map_err(|source| ObservationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_observation(&bytes).map_err(|source| ObservationError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_observation(path: &Path, obs: &Observation) -> Result<(), ObservationError> {
    fs::write(path, encode_observation(obs)).map_err(|source| ObservationError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Replays one recorded observation file on every capture.
#[derive(Debug, Clone)]
pub struct FileProvider {
    path: PathBuf,
}

impl FileProvider {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        FileProvider { path: path.into() }
    }
}

impl ObservationProvider for FileProvider {
    fn capture(&mut self, _tool_pose: &ToolPose) -> Result<Observation, ObservationError> {
        read_observation(&self.path)
    }
}

/// Replays a directory of observation files in file-name order.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    files: Vec<PathBuf>,
    next: usize,
}

impl ReplayProvider {
    /// Collects every regular file in `dir`, sorted by name.
    pub fn from_dir(dir: &Path) -> Result<Self, ObservationError> {
        let io_err = |source| ObservationError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut files = Vec::new();
        for entry in fs::read_dir(dir).map_err(io_err)? {
            let entry = entry.map_err(io_err)?;
            if entry.file_type().map_err(io_err)?.is_file() {
                files.push(entry.path());
            }
        }
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        Ok(ReplayProvider { files, next: 0 })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn remaining(&self) -> usize {
        self.files.len() - self.next
    }
}

impl ObservationProvider for ReplayProvider {
    fn capture(&mut self, _tool_pose: &ToolPose) -> Result<Observation, ObservationError> {
        let Some(path) = self.files.get(self.next) else {
            return Err(ObservationError::Exhausted(self.files.len()));
        };
        self.next += 1;
        read_observation(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask_io::KnobMask;

    fn obs(label: u32) -> Observation {
        Observation::new(
            64,
            48,
            30.0,
            None,
            vec![KnobMask::from_pixels(label, [(3, 4), (4, 4)]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn file_provider_repeats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.eifo");
        write_observation(&path, &obs(7)).unwrap();
        let mut p = FileProvider::new(&path);
        let pose = ToolPose::default();
        let a = p.capture(&pose).unwrap();
        let b = p.capture(&pose).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, obs(7));
    }

    #[test]
    fn replay_in_name_order_then_exhausts() {
        let dir = tempfile::tempdir().unwrap();
        write_observation(&dir.path().join("002.eifo"), &obs(2)).unwrap();
        write_observation(&dir.path().join("001.eifo"), &obs(1)).unwrap();
        let mut p = ReplayProvider::from_dir(dir.path()).unwrap();
        let pose = ToolPose::default();
        assert_eq!(p.capture(&pose).unwrap().masks()[0].label(), 1);
        assert_eq!(p.capture(&pose).unwrap().masks()[0].label(), 2);
        assert!(matches!(
            p.capture(&pose),
            Err(ObservationError::Exhausted(2))
        ));
    }

    #[test]
    fn unreadable_frame_is_an_error_not_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.eifo");
        fs::write(&path, b"nope").unwrap();
        let mut p = FileProvider::new(&path);
        assert!(matches!(
            p.capture(&ToolPose::default()),
            Err(ObservationError::Parse { .. })
        ));
        let mut missing = FileProvider::new(dir.path().join("missing.eifo"));
        assert!(matches!(
            missing.capture(&ToolPose::default()),
            Err(ObservationError::Io { .. })
        ));
    }
}
