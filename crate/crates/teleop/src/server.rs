//! HTTP and WebSocket front end. Each connection owns one session; sessions
//! share nothing but the completed-trial table.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::Response;
use axum::routing::get;
use axum::{Json, Router};
use eif_core::config::Config;
use eif_core::sim::Scenario;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::protocol::{ServerMessage, TrialOutcome};
use crate::session::{Clock, SystemClock, TeleopSession, TeleopSettings};
use crate::TeleopError;

/// One finished trial, as exported on `/metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session: String,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
}

pub struct BridgeState {
    pub config: Config,
    pub scenario: Scenario,
    pub settings: TeleopSettings,
    pub clock: Arc<dyn Clock>,
    next_session: AtomicU64,
    records: Mutex<Vec<SessionRecord>>,
}

impl BridgeState {
    pub fn new(config: Config, scenario: Scenario, settings: TeleopSettings) -> Self {
        Self::with_clock(config, scenario, settings, Arc::new(SystemClock::new()))
    }

    pub fn with_clock(
        config: Config,
        scenario: Scenario,
        settings: TeleopSettings,
        clock: Arc<dyn Clock>,
    ) -> Self {
        BridgeState {
            config,
            scenario,
            settings,
            clock,
            next_session: AtomicU64::new(0),
            records: Mutex::new(Vec::new()),
        }
    }

    pub fn records(&self) -> Vec<SessionRecord> {
        self.records.lock().expect("records lock").clone()
    }
}

#[derive(Debug, Deserialize)]
struct ConnectParams {
    seed: Option<u64>,
}

pub fn router(state: Arc<BridgeState>) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/metrics", get(metrics))
        .with_state(state)
}

async fn metrics(State(state): State<Arc<BridgeState>>) -> Json<Vec<SessionRecord>> {
    Json(state.records())
}

async fn upgrade(
    ws: WebSocketUpgrade,
    Query(params): Query<ConnectParams>,
    State(state): State<Arc<BridgeState>>,
) -> Response {
    let n = state.next_session.fetch_add(1, Ordering::SeqCst);
    // Without an explicit seed, session n uses the scenario seed plus n.
    let seed = params.seed.unwrap_or(state.scenario.seed.wrapping_add(n));
    ws.on_upgrade(move |socket| run_session(socket, state, format!("s{n}"), seed))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    let text = serde_json::to_string(msg).expect("message serializes");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn run_session(mut socket: WebSocket, state: Arc<BridgeState>, id: String, seed: u64) {
    let session = TeleopSession::new(
        id.clone(),
        state.config.clone(),
        state.scenario.clone(),
        state.settings,
        seed,
        state.clock.clone(),
    );
    let mut session = match session {
        Ok(s) => s,
        Err(e) => {
            let msg = ServerMessage::Error {
                code: crate::ErrorCode::Internal,
                message: e.to_string(),
            };
            send(&mut socket, &msg).await;
            return;
        }
    };
    if !send(&mut socket, &session.hello()).await {
        return;
    }
    let first = session.frame().unwrap_or_else(|e| ServerMessage::Error {
        code: crate::ErrorCode::RenderFailed,
        message: e.to_string(),
    });
    if !send(&mut socket, &first).await {
        return;
    }
    while let Some(Ok(msg)) = socket.recv().await {
        let replies = match msg {
            Message::Text(t) => session.handle_text(t.as_str()),
            Message::Binary(_) => vec![ServerMessage::Error {
                code: crate::ErrorCode::Malformed,
                message: "binary messages are not accepted".into(),
            }],
            Message::Close(_) => break,
            _ => continue,
        };
        for m in &replies {
            if let ServerMessage::Outcome { outcome, .. } = m {
                state
                    .records
                    .lock()
                    .expect("records lock")
                    .push(SessionRecord {
                        session: id.clone(),
                        outcome: *outcome,
                    });
            }
            if !send(&mut socket, m).await {
                return;
            }
        }
    }
}

pub async fn bind(addr: SocketAddr) -> Result<TcpListener, TeleopError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| TeleopError::Bind {
            addr: addr.to_string(),
            source,
        })
}

pub async fn serve(listener: TcpListener, state: Arc<BridgeState>) -> Result<(), TeleopError> {
    axum::serve(listener, router(state))
        .await
        .map_err(TeleopError::Serve)
}
