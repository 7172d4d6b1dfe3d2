//! Wire messages. One JSON document per WebSocket text message, tagged by
//! `type`.

use eif_core::geometry::{PlanarOffset, ToolPose};
use eif_core::sim::AttemptOutcome;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViewMode {
    /// Composite of the in-finger camera: masks, crosshair, reflection dot.
    Eif,
    /// Fixed overhead raster of the board around the start pose.
    ThirdPerson,
}

/// Client to bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Command {
    /// Relative move of the commanded tool pose, board frame.
    Jog {
        #[serde(default)]
        dx_mm: f64,
        #[serde(default)]
        dy_mm: f64,
        #[serde(default)]
        dyaw_deg: f64,
    },
    SetView {
        view: ViewMode,
    },
    /// Ends the trial.
    AttemptPick,
    /// Starts a fresh trial. Without a seed the previous seed plus one is
    /// used.
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    /// Not a valid command document.
    Malformed,
    /// Jog step larger than the configured bound.
    JogTooLarge,
    /// Target pose outside the workspace.
    OutOfWorkspace,
    /// Jog or pick after the trial ended; send `reset`.
    TrialFinished,
    RenderFailed,
    Internal,
}

/// End of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub outcome: AttemptOutcome,
    pub success: bool,
    /// True brick grip pose relative to the actual tool at the attempt.
    pub residual: PlanarOffset,
    pub residual_mm: f64,
    pub elapsed_ms: u64,
    /// Accepted commands in the trial, the pick included.
    pub commands: usize,
}

/// Bridge to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ServerMessage {
    Hello {
        protocol: u32,
        session: String,
        seed: u64,
        view: ViewMode,
        /// Commanded pose; the actual pose differs by the hidden
        /// calibration error.
        tool: ToolPose,
        width: u32,
        height: u32,
    },
    Frame {
        /// Strictly increasing per connection; also the state version.
        seq: u64,
        view: ViewMode,
        width: u32,
        height: u32,
        /// 8-bit grayscale PNG, standard base64.
        png: String,
        /// SHA-256 of the world state the frame was rendered from, hex.
        digest: String,
        trial_ms: u64,
        tool: ToolPose,
    },
    Outcome {
        /// Sequence number of the frame that follows.
        seq: u64,
        #[serde(flatten)]
        outcome: TrialOutcome,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}
