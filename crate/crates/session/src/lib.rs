//! Live exchanges over HTTP: a client plays the human side against a
//! configured machine.
//!
//! | method | path | body |
//! |---|---|---|
//! | `POST` | `/sessions` | [`CreateSession`] |
//! | `GET` | `/sessions/{id}` | |
//! | `POST` | `/sessions/{id}/actions` | [`Action`] |
//! | `GET` | `/sessions/{id}/transcript` | |
//!
//! Every response is JSON; failures carry `{code, message, detail}`. The
//! transcript comes back as JSON Lines, in the same format the CLI reads.

mod error;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

pub use error::{ApiError, ErrorBody};
pub use session::{
    default_machine, Action, CreateSession, EdgeDoc, ExchangeView, ExchangedEdge, Hints, PrivateView, Session,
    SessionView, Turn,
};

/// In-memory sessions. Each session has its own lock, so actions on one
/// session are serialized while different sessions proceed independently.
#[derive(Clone, Default)]
pub struct Store {
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Session>>>>>,
}

impl Store {
    fn new_id(&self) -> String {
        format!("{:016x}", rand::random::<u64>())
    }

    fn insert(&self, session: Session) -> Arc<Mutex<Session>> {
        let id = session.id().to_owned();
        let s = Arc::new(Mutex::new(session));
        self.sessions.lock().unwrap().insert(id, s.clone());
        s
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/actions", post(act))
        .route("/sessions/{id}/transcript", get(transcript))
        .with_state(store)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|r| ApiError::bad_request("invalid_body", r.body_text()))
}

async fn create(
    State(store): State<Store>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = body(payload)?;
    let session = Session::create(store.new_id(), req)?;
    let view = session.view();
    store.insert(session);
    Ok((StatusCode::CREATED, Json(view)))
}

async fn show(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let s = store.get(&id)?;
    let view = s.lock().unwrap().view();
    Ok(Json(view))
}

async fn act(
    State(store): State<Store>,
    Path(id): Path<String>,
    payload: Result<Json<Action>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let s = store.get(&id)?;
    let action = body(payload)?;
    let mut session = s.lock().unwrap();
    session.act(action)?;
    Ok(Json(session.view()))
}

async fn transcript(State(store): State<Store>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = store.get(&id)?;
    let t = s.lock().unwrap().transcript()?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], t.to_jsonl()).into_response())
}

pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Store::default())).await
}
