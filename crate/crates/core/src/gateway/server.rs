//! HTTP and WebSocket front end over a live run.
//!
//! | method | path                           | body / query                     | reply                      |
//! |--------|--------------------------------|----------------------------------|----------------------------|
//! | POST   | `/run/start`                   | JSON [`StartRequest`]            | JSON [`StatusReply`]       |
//! | POST   | `/run/stop`                    |                                  | JSON [`StatusReply`]       |
//! | GET    | `/run/status`                  |                                  | JSON [`StatusReply`]       |
//! | POST   | `/run/utterance`               | plain text                       | JSON `{"tick": n}`         |
//! | GET    | `/run/panel/{agent}/{kind}`    | `n`, `at`                        | panel text                 |
//! | GET    | `/run/events`                  | `cursor`, `agent`, `kind`        | encoded events             |
//! | GET    | `/run/transcript`              |                                  | transcript file            |
//! | GET    | `/run/world`                   |                                  | scenario text, then poses  |
//! | GET    | `/run/ws`                      | `cursor`                         | socket of wire records     |
//!
//! Errors come back as status 400 (bad request), 404 (no run, unknown
//! agent or seq) or 409 (run stopped) with the message as plain text.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Notify};

use crate::tracebus::{PanelKind, TraceError, TraceKind};

use super::sim::{EventFilter, GatewayError, RunConfig, RunOutcome, Simulation};
use super::wire::{Record, RecordKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunState {
    Running,
    /// The leader's plan closed; the run idles until someone speaks.
    Settled(RunOutcome),
    /// Out of ticks.
    Exhausted,
    Stopped,
    Failed(String),
}

impl RunState {
    fn label(&self) -> &'static str {
        match self {
            RunState::Running => "running",
            RunState::Settled(_) => "settled",
            RunState::Exhausted => "exhausted",
            RunState::Stopped => "stopped",
            RunState::Failed(_) => "failed",
        }
    }

    fn accepts_input(&self) -> bool {
        matches!(self, RunState::Running | RunState::Settled(_))
    }
}

struct Live {
    sim: Simulation,
    state: RunState,
}

struct Shared {
    live: Mutex<Live>,
    wake: Notify,
    /// Published high-water seq.
    seq: watch::Sender<u64>,
}

/// A run stepping on its own task. Cloning shares the run.
#[derive(Clone)]
pub struct RunHandle {
    shared: Arc<Shared>,
}

#[derive(Debug, thiserror::Error)]
pub enum HandleError {
    #[error("run is {0}")]
    NotLive(&'static str),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

impl RunHandle {
    /// Starts stepping `sim` every `interval`.
    pub fn spawn(sim: Simulation, interval: Duration) -> Self {
        let (seq, _) = watch::channel(sim.ledger().last_seq());
        let shared = Arc::new(Shared {
            live: Mutex::new(Live {
                sim,
                state: RunState::Running,
            }),
            wake: Notify::new(),
            seq,
        });
        let task = shared.clone();
        tokio::spawn(async move { tick_loop(task, interval).await });
        RunHandle { shared }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Live> {
        self.shared.live.lock().expect("run lock poisoned")
    }

    pub fn state(&self) -> RunState {
        self.lock().state.clone()
    }

    pub fn stop(&self) {
        let mut live = self.lock();
        if !matches!(
            live.state,
            RunState::Stopped | RunState::Exhausted | RunState::Failed(_)
        ) {
            live.state = RunState::Stopped;
        }
        drop(live);
        self.shared.wake.notify_one();
    }

    /// Queues a human utterance; returns its delivery tick.
    pub fn submit(&self, text: &str) -> Result<u64, HandleError> {
        let mut live = self.lock();
        if !live.state.accepts_input() {
            return Err(HandleError::NotLive(live.state.label()));
        }
        let tick = live.sim.submit_utterance(text)?;
        drop(live);
        self.shared.wake.notify_one();
        Ok(tick)
    }

    pub fn status(&self) -> StatusReply {
        let live = self.lock();
        StatusReply {
            state: live.state.label().to_string(),
            tick: live.sim.tick(),
            last_seq: live.sim.ledger().last_seq(),
            outcome: match &live.state {
                RunState::Settled(o) => Some(o.as_str().to_string()),
                RunState::Exhausted => Some(RunOutcome::Budget.as_str().to_string()),
                _ => None,
            },
            error: match &live.state {
                RunState::Failed(m) => Some(m.clone()),
                _ => None,
            },
        }
    }

    /// Runs `f` against the simulation under the lock.
    pub fn with_sim<T>(&self, f: impl FnOnce(&Simulation) -> T) -> T {
        f(&self.lock().sim)
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.shared.seq.subscribe()
    }

    pub fn panel_text(
        &self,
        agent: &str,
        kind: PanelKind,
        n: Option<usize>,
        at: Option<u64>,
    ) -> Result<String, HandleError> {
        self.with_sim(|sim| {
            let n = n.unwrap_or(sim.config().recent);
            Ok(sim.ledger().panel(agent, kind, n, at)?.render())
        })
    }
}

async fn tick_loop(shared: Arc<Shared>, interval: Duration) {
    loop {
        let idle = {
            let mut live = shared.live.lock().expect("run lock poisoned");
            if !live.state.accepts_input() {
                return;
            }
            let settled = live.sim.is_settled();
            if settled {
                let outcome = live.sim.outcome().expect("settled runs have an outcome");
                live.state = RunState::Settled(outcome);
                true
            } else if live.sim.tick() >= live.sim.config().ticks {
                live.state = RunState::Exhausted;
                return;
            } else {
                live.state = RunState::Running;
                if let Err(e) = live.sim.step() {
                    live.state = RunState::Failed(e.to_string());
                    return;
                }
                shared.seq.send_replace(live.sim.ledger().last_seq());
                false
            }
        };
        if idle {
            shared.wake.notified().await;
        } else if interval.is_zero() {
            tokio::task::yield_now().await;
        } else {
            tokio::time::sleep(interval).await;
        }
    }
}

/// Optional overrides of the server's default [`RunConfig`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartRequest {
    pub scenario: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ticks: Option<u64>,
    pub recent: Option<usize>,
    pub latency: Option<u64>,
    pub accept_timeout: Option<u64>,
    /// Milliseconds between ticks.
    pub interval_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusReply {
    pub state: String,
    pub tick: u64,
    pub last_seq: u64,
    pub outcome: Option<String>,
    pub error: Option<String>,
}

#[derive(Clone)]
pub struct ServerState {
    defaults: RunConfig,
    interval: Duration,
    run: Arc<Mutex<Option<RunHandle>>>,
}

impl ServerState {
    pub fn new(defaults: RunConfig, interval: Duration) -> Self {
        ServerState {
            defaults,
            interval,
            run: Arc::new(Mutex::new(None)),
        }
    }

    fn current(&self) -> Result<RunHandle, ApiError> {
        self.run
            .lock()
            .expect("server lock poisoned")
            .clone()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, "no run".into()))
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, self.1).into_response()
    }
}

impl From<HandleError> for ApiError {
    fn from(e: HandleError) -> Self {
        let code = match &e {
            HandleError::NotLive(_) => StatusCode::CONFLICT,
            HandleError::Trace(TraceError::UnknownAgent(_) | TraceError::NoSuchSeq(_)) => StatusCode::NOT_FOUND,
            HandleError::Gateway(GatewayError::Trace(TraceError::UnknownAgent(_) | TraceError::NoSuchSeq(_))) => {
                StatusCode::NOT_FOUND
            }
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError(code, e.to_string())
    }
}

fn bad(e: impl ToString) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, e.to_string())
}

pub fn router(state: ServerState) -> Router {
    Router::new()
        .route("/run/start", post(start))
        .route("/run/stop", post(stop))
        .route("/run/status", get(status))
        .route("/run/utterance", post(utterance))
        .route("/run/panel/{agent}/{kind}", get(panel))
        .route("/run/events", get(events))
        .route("/run/transcript", get(transcript))
        .route("/run/world", get(world))
        .route("/run/ws", get(ws))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: ServerState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn start(State(s): State<ServerState>, body: Option<Json<StartRequest>>) -> Result<Json<StatusReply>, ApiError> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let d = &s.defaults;
    let config = RunConfig {
        scenario: req.scenario.or_else(|| d.scenario.clone()),
        script: req.script.or_else(|| d.script.clone()),
        seed: req.seed.unwrap_or(d.seed),
        ticks: req.ticks.unwrap_or(d.ticks),
        recent: req.recent.unwrap_or(d.recent),
        latency: req.latency.unwrap_or(d.latency),
        accept_timeout: req.accept_timeout.unwrap_or(d.accept_timeout),
    };
    let sim = Simulation::from_config(config).map_err(bad)?;
    let interval = req.interval_ms.map_or(s.interval, Duration::from_millis);
    let handle = RunHandle::spawn(sim, interval);
    let reply = handle.status();
    if let Some(old) = s.run.lock().expect("server lock poisoned").replace(handle) {
        old.stop();
    }
    Ok(Json(reply))
}

async fn stop(State(s): State<ServerState>) -> Result<Json<StatusReply>, ApiError> {
    let run = s.current()?;
    run.stop();
    Ok(Json(run.status()))
}

async fn status(State(s): State<ServerState>) -> Result<Json<StatusReply>, ApiError> {
    Ok(Json(s.current()?.status()))
}

#[derive(Serialize)]
struct Accepted {
    tick: u64,
}

async fn utterance(State(s): State<ServerState>, text: String) -> Result<Json<Accepted>, ApiError> {
    let tick = s.current()?.submit(&text)?;
    Ok(Json(Accepted { tick }))
}

#[derive(Deserialize)]
struct PanelQuery {
    n: Option<usize>,
    at: Option<u64>,
}

async fn panel(
    State(s): State<ServerState>,
    Path((agent, kind)): Path<(String, String)>,
    Query(q): Query<PanelQuery>,
) -> Result<String, ApiError> {
    let kind: PanelKind = kind.parse().map_err(bad)?;
    Ok(s.current()?.panel_text(&agent, kind, q.n, q.at)?)
}

#[derive(Deserialize)]
struct EventsQuery {
    cursor: Option<u64>,
    agent: Option<String>,
    /// Comma-separated kinds.
    kind: Option<String>,
}

fn filter_from(agent: Option<String>, kind: Option<&str>) -> Result<EventFilter, ApiError> {
    let kinds = match kind {
        Some(k) if !k.is_empty() => k
            .split(',')
            .map(|k| k.parse::<TraceKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?,
        _ => Vec::new(),
    };
    Ok(EventFilter { agent, kinds })
}

async fn events(State(s): State<ServerState>, Query(q): Query<EventsQuery>) -> Result<String, ApiError> {
    let filter = filter_from(q.agent, q.kind.as_deref())?;
    let run = s.current()?;
    let events = run
        .with_sim(|sim| sim.stream(&filter, q.cursor.unwrap_or(0)))
        .map_err(HandleError::from)?;
    Ok(events.iter().map(|e| e.encode()).collect())
}

async fn transcript(State(s): State<ServerState>) -> Result<String, ApiError> {
    Ok(s.current()?.with_sim(|sim| sim.ledger().encode()))
}

async fn world(State(s): State<ServerState>) -> Result<String, ApiError> {
    Ok(s.current()?.with_sim(|sim| {
        format!(
            "{}\n{}\n",
            sim.knowledge().scenario.format().trim_end(),
            sim.world().summary()
        )
    }))
}

#[derive(Deserialize)]
struct WsQuery {
    cursor: Option<u64>,
}

async fn ws(
    State(s): State<ServerState>,
    Query(q): Query<WsQuery>,
    upgrade: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let run = s.current()?;
    let cursor = q.cursor.unwrap_or(0);
    Ok(upgrade.on_upgrade(move |socket| session(socket, run, cursor)))
}

/// Answers one client record.
pub fn answer(run: &RunHandle, record: &Record) -> Record {
    match record.kind {
        RecordKind::Utterance => match run.submit(&record.payload) {
            Ok(tick) => Record::new(RecordKind::Ack, format!("tick={tick}")),
            Err(e) => Record::new(RecordKind::Error, e.to_string()),
        },
        RecordKind::Panel => {
            let mut words = record.payload.split_whitespace();
            let (Some(agent), Some(kind), None) = (words.next(), words.next(), words.next()) else {
                return Record::new(RecordKind::Error, "PANEL wants <agent> <kind>");
            };
            let kind = match kind.parse::<PanelKind>() {
                Ok(k) => k,
                Err(e) => return Record::new(RecordKind::Error, e),
            };
            match run.panel_text(agent, kind, None, None) {
                Ok(text) => Record::new(RecordKind::Panel, text),
                Err(e) => Record::new(RecordKind::Error, e.to_string()),
            }
        }
        other => Record::new(RecordKind::Error, format!("clients may not send {other}")),
    }
}

async fn session(socket: WebSocket, run: RunHandle, mut cursor: u64) {
    let (mut tx, mut rx) = socket.split();
    let mut seq = run.subscribe();
    let last = run.with_sim(|sim| sim.ledger().last_seq());
    if cursor > last {
        let err = Record::new(RecordKind::Error, TraceError::NoSuchSeq(cursor).to_string());
        let _ = tx.send(WsMessage::Text(err.encode().into())).await;
        return;
    }
    loop {
        let batch = run.with_sim(|sim| sim.ledger().since(cursor).map(|e| e.to_vec()).unwrap_or_default());
        for e in &batch {
            if tx
                .send(WsMessage::Text(Record::event(e).encode().into()))
                .await
                .is_err()
            {
                return;
            }
            cursor = e.seq;
        }
        tokio::select! {
            changed = seq.changed() => {
                if changed.is_err() {
                    return;
                }
            }
            incoming = rx.next() => {
                let reply = match incoming {
                    Some(Ok(WsMessage::Text(t))) => match Record::decode(t.as_str()) {
                        Ok(r) => answer(&run, &r),
                        Err(e) => Record::new(RecordKind::Error, e.to_string()),
                    },
                    Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                if tx.send(WsMessage::Text(reply.encode().into())).await.is_err() {
                    return;
                }
            }
        }
    }
}
