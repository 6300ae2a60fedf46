//! HTTP surface under `/v1`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use trustkit::domain::{generate_mission, Mission};
use trustkit::planner::StrategyKind;

use crate::config::ServiceConfig;
use crate::error::ServiceError;
use crate::session::{latin_square_row, OrderingSlot, OutcomeView, Phase, Session, StateView, SummaryView};
use crate::store::EventStore;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Strategy name; may be omitted when `ordering` is given.
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default)]
    pub ordering: Option<OrderingSlot>,
    #[serde(default)]
    pub mission_seed: Option<u64>,
    /// A full mission, as written by `trustkit generate`.
    #[serde(default)]
    pub mission: Option<Mission>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub strategy: StrategyKind,
    pub ordering: Option<OrderingSlot>,
    pub mission_seed: u64,
    pub n_sites: usize,
    pub phase: Phase,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreferenceBody {
    #[serde(default)]
    value: Option<f64>,
    #[serde(default)]
    skip: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionBody {
    action: serde_json::Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrustBody {
    slider: serde_json::Value,
}

#[derive(Debug, Serialize)]
struct LatinSquareRow {
    participant: usize,
    strategies: [StrategyKind; 3],
}

struct Inner {
    config: ServiceConfig,
    store: EventStore,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

/// Shared server state: live sessions plus their persistent logs.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn poisoned<T>(_: T) -> ServiceError {
    ServiceError::Internal("session lock poisoned".into())
}

impl AppState {
    /// Builds the state and replays any sessions already logged in the store.
    pub fn new(config: ServiceConfig, store: EventStore) -> Result<Self, ServiceError> {
        config.validate().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let mut sessions = HashMap::new();
        for (id, events) in store.load_all()? {
            let session = Session::replay(&events)?;
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        if !sessions.is_empty() {
            tracing::info!(count = sessions.len(), "recovered sessions");
        }
        Ok(Self { inner: Arc::new(Inner { config, store, sessions: RwLock::new(sessions) }) })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn session_ids(&self) -> Vec<String> {
        let map = self.inner.sessions.read().unwrap_or_else(|e| e.into_inner());
        let mut ids: Vec<_> = map.keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn create_session(&self, req: CreateSession) -> Result<Created, ServiceError> {
        let from_ordering = req.ordering.map(|o| {
            if o.slot >= StrategyKind::ALL.len() {
                Err(ServiceError::BadRequest(format!("ordering slot must be 0, 1 or 2, got {}", o.slot)))
            } else {
                Ok(latin_square_row(o.participant)[o.slot])
            }
        });
        let named = req
            .strategy
            .as_deref()
            .map(|s| s.parse::<StrategyKind>().map_err(|e| ServiceError::BadRequest(e.to_string())));
        let strategy = match (named, from_ordering) {
            (Some(a), Some(b)) => {
                let (a, b) = (a?, b?);
                if a != b {
                    return Err(ServiceError::BadRequest(format!(
                        "strategy {a} contradicts ordering, which assigns {b}"
                    )));
                }
                a
            }
            (Some(a), None) | (None, Some(a)) => a?,
            (None, None) => {
                return Err(ServiceError::BadRequest("either strategy or ordering is required".into()));
            }
        };

        let uuid = uuid::Uuid::new_v4();
        let mission = match (req.mission, req.mission_seed) {
            (Some(_), Some(_)) => {
                return Err(ServiceError::BadRequest("give mission or mission_seed, not both".into()));
            }
            (Some(m), None) => m,
            (None, seed) => {
                let seed = seed.unwrap_or(uuid.as_u64_pair().0);
                generate_mission(seed, &self.inner.config.mission)
                    .map_err(|e| ServiceError::BadRequest(e.to_string()))?
            }
        };

        let id = uuid.to_string();
        let cfg = &self.inner.config;
        let session =
            Session::create(id.clone(), mission, cfg.agent_config(strategy), cfg.base_search_time, req.ordering)?;
        self.inner.store.append(&id, session.events())?;
        let created = Created {
            id: id.clone(),
            strategy,
            ordering: req.ordering,
            mission_seed: session.mission().seed,
            n_sites: session.mission().n_sites(),
            phase: session.phase(),
        };
        self.inner.sessions.write().map_err(poisoned)?.insert(id.clone(), Arc::new(Mutex::new(session)));
        tracing::info!(%id, %strategy, "session created");
        Ok(created)
    }

    /// Runs `f` against a copy of the session, persists any new events, then
    /// publishes the copy. A failed command or write leaves the session untouched.
    pub fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let handle = self
            .inner
            .sessions
            .read()
            .map_err(poisoned)?
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("no session {id}")))?;
        let mut guard = handle.lock().map_err(poisoned)?;
        let mut next = guard.clone();
        let out = f(&mut next)?;
        let logged = guard.events().len();
        if next.events().len() > logged {
            self.inner.store.append(id, &next.events()[logged..])?;
        }
        *guard = next;
        Ok(out)
    }

    pub fn router(self, static_dir: Option<PathBuf>) -> Router {
        let api = Router::new()
            .route("/health", get(|| async { Json(serde_json::json!({ "status": "ok" })) }))
            .route("/latin-square/{participant}", get(latin_square))
            .route("/sessions", post(create))
            .route("/sessions/{id}", get(state))
            .route("/sessions/{id}/state", get(state))
            .route("/sessions/{id}/preference", post(preference))
            .route("/sessions/{id}/action", post(action))
            .route("/sessions/{id}/trust", post(trust))
            .route("/sessions/{id}/summary", get(summary))
            .route("/sessions/{id}/transcript", get(transcript))
            .fallback(|| async { ServiceError::NotFound("no such endpoint".into()) });
        let app = Router::new().nest("/v1", api).with_state(self);
        match static_dir {
            Some(dir) => app.fallback_service(ServeDir::new(dir)),
            None => app,
        }
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("malformed request body: {e}")))
}

fn integer(v: &serde_json::Value, what: &str) -> Result<i64, ServiceError> {
    v.as_i64().ok_or_else(|| ServiceError::BadRequest(format!("{what} must be an integer, got {v}")))
}

async fn latin_square(Path(participant): Path<usize>) -> Json<LatinSquareRow> {
    Json(LatinSquareRow { participant, strategies: latin_square_row(participant) })
}

async fn create(State(app): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Created>), ServiceError> {
    let req: CreateSession = parse(&body)?;
    Ok((StatusCode::CREATED, Json(app.create_session(req)?)))
}

async fn state(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<StateView>, ServiceError> {
    app.with_session(&id, Session::state_view).map(Json)
}

async fn preference(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StateView>, ServiceError> {
    let req: PreferenceBody = parse(&body)?;
    if req.skip && req.value.is_some() {
        return Err(ServiceError::BadRequest("give a value or skip, not both".into()));
    }
    app.with_session(&id, |s| s.set_preference(req.value)).map(Json)
}

async fn action(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<OutcomeView>, ServiceError> {
    let req: ActionBody = parse(&body)?;
    app.with_session(&id, |s| {
        // Phase errors take precedence over payload errors.
        if s.phase() != Phase::AwaitingAction {
            return s.submit_action(0);
        }
        s.submit_action(integer(&req.action, "action")?)
    })
    .map(Json)
}

async fn trust(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StateView>, ServiceError> {
    let req: TrustBody = parse(&body)?;
    app.with_session(&id, |s| {
        if s.phase() != Phase::AwaitingTrust {
            return s.submit_trust(0);
        }
        s.submit_trust(integer(&req.slider, "slider")?)
    })
    .map(Json)
}

async fn summary(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<SummaryView>, ServiceError> {
    app.with_session(&id, |s| Ok(s.summary())).map(Json)
}

async fn transcript(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let body = app.with_session(&id, |s| {
        s.transcript_jsonl().ok_or_else(|| ServiceError::NotFound("transcript is available once the mission is complete".into()))
    })?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, state.router(static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
