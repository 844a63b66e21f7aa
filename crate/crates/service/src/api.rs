//! JSON endpoints under `/api`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use drhai_core::dialogue::MoveRecord;
use drhai_core::{Agent, Move};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::scenario::{Scenario, ScenarioSpec};
use crate::session::{MenuEntry, Session, Summary};
use crate::store::Store;

type AppState = Arc<Store>;
type ApiResult<T> = Result<T, ServiceError>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/api/scenarios", get(list_scenarios).post(create_scenario))
        .route("/api/scenarios/{id}", get(get_scenario))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session).delete(delete_session))
        .route("/api/sessions/{id}/moves", get(get_menu).post(play_move))
        .with_state(store)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Storage(std::io::Error::other(e)))?
}

#[derive(Serialize)]
struct ScenarioView {
    id: String,
    title: String,
    description: String,
    topic: Vec<String>,
}

impl From<&Scenario> for ScenarioView {
    fn from(s: &Scenario) -> Self {
        ScenarioView {
            id: s.id.clone(),
            title: s.spec.title.clone(),
            description: s.spec.description.clone(),
            topic: s.topic.iter().map(|f| s.render(f)).collect(),
        }
    }
}

#[derive(Serialize)]
struct ScenarioDetail {
    id: String,
    #[serde(flatten)]
    spec: ScenarioSpec,
}

async fn list_scenarios(State(store): State<AppState>) -> Json<Vec<ScenarioView>> {
    Json(store.scenarios().iter().map(|s| ScenarioView::from(s.as_ref())).collect())
}

async fn get_scenario(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ScenarioDetail>> {
    let s = store.scenario(&id)?;
    Ok(Json(ScenarioDetail {
        id: s.id.clone(),
        spec: s.spec.clone(),
    }))
}

async fn create_scenario(
    State(store): State<AppState>,
    payload: Result<Json<ScenarioSpec>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<ScenarioView>)> {
    let spec = body(payload)?;
    let scenario = blocking(move || store.add_scenario(spec)).await?;
    Ok((StatusCode::CREATED, Json(ScenarioView::from(scenario.as_ref()))))
}

#[derive(Serialize)]
pub struct TranscriptEntry {
    #[serde(flatten)]
    record: MoveRecord,
    text: String,
}

fn entry(session: &Session, mv: &Move) -> TranscriptEntry {
    TranscriptEntry {
        record: mv.into(),
        text: session.render(mv),
    }
}

#[derive(Serialize)]
pub struct SessionView {
    id: String,
    scenario: ScenarioView,
    transcript: Vec<TranscriptEntry>,
    turn: Option<Agent>,
    finished: bool,
    summary: Option<Summary>,
    created: u64,
    updated: u64,
}

fn view(s: &Session) -> SessionView {
    SessionView {
        id: s.id.clone(),
        scenario: ScenarioView::from(s.scenario.as_ref()),
        transcript: s.state.history().iter().map(|m| entry(s, m)).collect(),
        turn: s.turn(),
        finished: s.finished(),
        summary: s.summary.clone(),
        created: s.created,
        updated: s.updated,
    }
}

#[derive(Deserialize)]
struct NewSession {
    scenario_id: String,
}

async fn create_session(
    State(store): State<AppState>,
    payload: Result<Json<NewSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let NewSession { scenario_id } = body(payload)?;
    let shared = blocking(move || store.create_session(&scenario_id)).await?;
    let session = shared.lock().await;
    Ok((StatusCode::CREATED, Json(view(&session))))
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let shared = store.session(&id)?;
    let session = shared.lock().await;
    Ok(Json(view(&session)))
}

async fn delete_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let shared = store.session(&id)?;
    // wait for a move in progress to finish
    let _guard = shared.lock().await;
    blocking(move || store.delete_session(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_menu(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<MenuEntry>>> {
    let session = store.session(&id)?.lock_owned().await;
    let menu = blocking(move || store.menu(&session)).await?;
    Ok(Json(menu))
}

#[derive(Deserialize)]
struct Play {
    token: String,
}

#[derive(Serialize)]
struct Played {
    played: Vec<TranscriptEntry>,
    session: SessionView,
}

async fn play_move(
    State(store): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<Play>, JsonRejection>,
) -> ApiResult<Json<Played>> {
    let Play { token } = body(payload)?;
    let mut session = store.session(&id)?.lock_owned().await;
    let out = blocking(move || {
        let played = store.play(&mut session, &token)?;
        Ok(Played {
            played: played.iter().map(|m| entry(&session, m)).collect(),
            session: view(&session),
        })
    })
    .await?;
    Ok(Json(out))
}
