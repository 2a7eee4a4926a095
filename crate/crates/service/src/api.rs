//! HTTP API over the job store.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cuttlefish_core::explain::{restrict, ContrastiveQuestion, ExplainError, ExplanationJson};
use cuttlefish_core::planner::SolveOutcome;
use cuttlefish_core::{DynamicTariff, HomeModel, Money};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::store::{Job, JobKind, JobStatus, JobStore, QuestionContext, StoreError};

pub struct AppState {
    pub store: Arc<JobStore>,
    pub tariff: DynamicTariff,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/problems", post(submit_problem))
        .route("/problems/{id}", get(get_problem))
        .route("/questions", post(submit_question))
        .route("/questions/{id}", get(get_question))
        .route("/tariff", get(get_tariff))
        .route("/health", get(health))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    path: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            path: None,
        }
    }

    fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            path: Some(path.into()),
            ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "store failure");
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "store", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(p) = self.path {
            body["path"] = json!(p);
        }
        (self.status, Json(body)).into_response()
    }
}

/// A path-prefixed message such as `appliances[0].window: ...` split into
/// its path and text.
fn split_model_message(msg: &str) -> Option<(&str, &str)> {
    let (head, tail) = msg.split_once(": ")?;
    let is_path = !head.is_empty()
        && head
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_[].".contains(c));
    is_path.then_some((head, tail))
}

fn join_path(outer: &str, inner: &str) -> String {
    match (outer, inner) {
        ("" | ".", i) => i.to_owned(),
        (o, "") => o.to_owned(),
        (o, i) if i.starts_with('[') => format!("{o}{i}"),
        (o, i) => format!("{o}.{i}"),
    }
}

/// Parses a JSON body, reporting the failing field path.
pub fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let outer = e.path().to_string();
        let msg = e.inner().to_string();
        // drop serde_json's " at line L column C" suffix
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_owned();
        match split_model_message(&msg) {
            Some((inner, text)) => ApiError::validation(join_path(&outer, inner), text),
            None => ApiError::validation(if outer == "." { String::new() } else { outer }, msg),
        }
    })
}

#[derive(Serialize)]
struct Submitted {
    job_id: String,
    status: JobStatus,
    created: bool,
}

#[derive(Serialize)]
pub struct JobView {
    pub id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    pub attempts: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_problem_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<SolveOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<Money>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<ExplanationJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub enqueued_at_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_at_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at_ms: Option<u64>,
}

fn view(job: Job, position: Option<usize>) -> JobView {
    JobView {
        id: job.id,
        kind: job.kind,
        status: job.status,
        position,
        attempts: job.attempts,
        base_problem_hash: job.question.map(|q| q.base_problem_hash),
        cost: job.outcome.as_ref().and_then(SolveOutcome::cost),
        result: job.outcome,
        explanation: job.explanation,
        error: job.error,
        enqueued_at_ms: job.enqueued_at_ms,
        started_at_ms: job.started_at_ms,
        finished_at_ms: job.finished_at_ms,
    }
}

fn submitted(job: Job, created: bool) -> Response {
    let code = if created {
        StatusCode::ACCEPTED
    } else {
        StatusCode::OK
    };
    (
        code,
        Json(Submitted {
            job_id: job.id,
            status: job.status,
            created,
        }),
    )
        .into_response()
}

async fn submit_problem(
    State(st): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let model: HomeModel = parse_body(&body)?;
    let id = model.content_hash();
    let (job, created) = st.store.submit(id, JobKind::Problem, model, None)?;
    if created {
        tracing::info!(job = %job.id, "problem queued");
    }
    Ok(submitted(job, created))
}

fn lookup(st: &AppState, id: &str, kind: JobKind) -> Result<JobView, ApiError> {
    let job =
        st.store.get(id).filter(|j| j.kind == kind).ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no job {id}"))
        })?;
    let position = st.store.queue_position(id);
    Ok(view(job, position))
}

async fn get_problem(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<JobView>, ApiError> {
    lookup(&st, &id, JobKind::Problem).map(Json)
}

async fn get_question(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<JobView>, ApiError> {
    lookup(&st, &id, JobKind::Question).map(Json)
}

async fn submit_question(
    State(st): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let question: ContrastiveQuestion = parse_body(&body)?;
    let base_id = &question.base_problem_hash;
    let base = st
        .store
        .get(base_id)
        .filter(|j| j.kind == JobKind::Problem)
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "not_found",
                format!("no problem {base_id}"),
            )
        })?;
    let Some(original) = base
        .outcome
        .and_then(|o| o.plan)
        .filter(|_| base.status == JobStatus::Done)
    else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "base_not_solved",
            format!("problem {base_id} has no solved plan to compare against"),
        ));
    };
    let additions = question.canonical_additions();
    let restricted = restrict(&base.problem, &additions).map_err(|e| match e {
        ExplainError::Question(m) => ApiError::validation(m.path, m.message),
        other => ApiError::validation("", other.to_string()),
    })?;
    let context = QuestionContext {
        base_problem_hash: base_id.clone(),
        additions,
        original_plan: original,
    };
    let (job, created) = st.store.submit(
        question.content_hash(),
        JobKind::Question,
        restricted,
        Some(context),
    )?;
    Ok(submitted(job, created))
}

async fn get_tariff(State(st): State<Arc<AppState>>) -> Json<DynamicTariff> {
    Json(st.tariff.clone())
}

async fn health(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "jobs": st.store.stats() }))
}
