//! Teleoperation bridge: serves simulator views over a WebSocket and
//! accepts jog and pick commands from a human operator.
//!
//! The wire protocol is documented in `docs/teleop-protocol.md` at the
//! repository root.

pub mod frame;
pub mod protocol;
pub mod server;
pub mod session;

use eif_core::sim::SimError;
use thiserror::Error;

pub use protocol::{Command, ErrorCode, ServerMessage, TrialOutcome, ViewMode, PROTOCOL_VERSION};
pub use server::{bind, router, serve, BridgeState, SessionRecord};
pub use session::{replay, Clock, ManualClock, SystemClock, TeleopSession, TeleopSettings};

#[derive(Debug, Error)]
pub enum TeleopError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server stopped: {0}")]
    Serve(#[source] std::io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("frame encoding failed: {0}")]
    Render(String),
    #[error("replay diverged: {0}")]
    Replay(String),
}
