use std::str::FromStr;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use actorsnote_core::ingest::{DocumentFormat, DocumentUpload};
use actorsnote_core::llm::ProviderKind;
use actorsnote_core::{
    EntryId, ExportFormat, ParticipantId, SaveRequest, ScriptId, Service, ServiceError, SessionId, SetupRequest,
    StoreError, Timestamp,
};

use crate::error::{ApiError, TOO_LARGE};
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    // The limit is enforced in the handlers so the 413 carries an ApiError body.
    let limit = state.max_upload_bytes.saturating_add(64 * 1024);
    Router::new()
        .route("/healthz", get(healthz))
        .route("/scripts", post(upload_script))
        .route("/scripts/{id}", get(get_script))
        .route("/scripts/{id}/analyze", post(analyze_script))
        .route("/participants/{id}/setup", post(setup_participant))
        .route("/participants/{id}/sessions", post(open_session))
        .route("/participants/{id}/archive", get(archive))
        .route("/sessions/{id}/refresh", post(refresh))
        .route("/sessions/{id}/keystroke", post(keystroke))
        .route("/sessions/{id}/entry", put(save_entry))
        .route("/entries/{id}", patch(update_entry))
        .route("/export", get(export))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Runs a service call off the async executor; gateway calls block.
async fn blocking<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
) -> ApiResult<T> {
    let svc = state.service.clone();
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(ApiError::from)
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn is_admin(state: &AppState, headers: &HeaderMap) -> bool {
    matches!((&state.admin_token, bearer(headers)), (Some(want), Some(got)) if want == got)
}

fn require_admin(state: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    if state.admin_token.is_none() || is_admin(state, headers) {
        Ok(())
    } else {
        Err(ApiError::unauthorized())
    }
}

/// The caller must hold the participant's token or the admin token.
fn require_participant(state: &AppState, headers: &HeaderMap, pid: &ParticipantId) -> ApiResult<()> {
    if is_admin(state, headers) {
        return Ok(());
    }
    let token = bearer(headers).ok_or_else(ApiError::unauthorized)?;
    let participant = state.service.participant(pid)?;
    if participant.token == token {
        Ok(())
    } else {
        Err(ApiError::unauthorized())
    }
}

fn too_large(limit: usize) -> ApiError {
    ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, TOO_LARGE, format!("upload exceeds {limit} bytes"))
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    let provider = match state.service.settings().provider_kind() {
        ProviderKind::Mock => "mock",
        ProviderKind::Hosted => "hosted",
    };
    Json(json!({
        "status": "ok",
        "build": env!("CARGO_PKG_VERSION"),
        "provider": provider,
    }))
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    title: Option<String>,
    filename: Option<String>,
}

#[derive(Debug, Serialize)]
struct ScriptCreated {
    script_id: ScriptId,
    title: String,
    chars: usize,
}

async fn read_multipart(mut mp: Multipart) -> ApiResult<(Vec<u8>, Option<String>, Option<String>, Option<String>)> {
    let (mut bytes, mut mime, mut filename, mut title) = (None, None, None, None);
    while let Some(field) = mp.next_field().await.map_err(multipart_error)? {
        match field.name() {
            Some("title") => title = Some(field.text().await.map_err(multipart_error)?),
            Some("file") | None => {
                mime = field.content_type().map(str::to_string);
                filename = field.file_name().map(str::to_string);
                bytes = Some(field.bytes().await.map_err(multipart_error)?.to_vec());
            }
            Some(_) => {}
        }
    }
    let bytes = bytes.ok_or_else(|| ApiError::bad_request("multipart body has no 'file' field"))?;
    Ok((bytes, mime, filename, title))
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, TOO_LARGE, e.body_text())
    } else {
        ApiError::bad_request(e.body_text())
    }
}

/// Plain-text and PDF bodies are accepted raw; `multipart/form-data` takes a
/// `file` part and an optional `title` part.
async fn upload_script(
    State(state): State<AppState>,
    Query(q): Query<UploadQuery>,
    req: Request,
) -> ApiResult<(StatusCode, Json<ScriptCreated>)> {
    require_admin(&state, req.headers())?;
    let content_type = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("text/plain")
        .to_string();
    let limit = state.max_upload_bytes;
    let (bytes, mime, filename, title) = if content_type.starts_with("multipart/form-data") {
        let mp = Multipart::from_request(req, &()).await.map_err(|e| ApiError::bad_request(e.body_text()))?;
        read_multipart(mp).await?
    } else {
        let body = Bytes::from_request(req, &()).await.map_err(|e| {
            if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
                too_large(limit)
            } else {
                ApiError::bad_request(e.body_text())
            }
        })?;
        (body.to_vec(), Some(content_type), q.filename.clone(), None)
    };
    if bytes.len() > limit {
        return Err(too_large(limit));
    }
    let format = match (&filename, &mime) {
        (Some(name), _) if DocumentFormat::from_filename(name).is_ok() => DocumentFormat::from_filename(name),
        (_, Some(m)) => DocumentFormat::from_mime(m),
        (Some(name), None) => DocumentFormat::from_filename(name),
        (None, None) => Ok(DocumentFormat::PlainText),
    }
    .map_err(|e| ApiError::from(ServiceError::from(e)))?;
    let title = title.or(q.title).or(filename).unwrap_or_else(|| "Untitled".into());
    let upload = DocumentUpload {
        bytes,
        declared_format: format,
        title,
    };
    let script = blocking(&state, move |svc| svc.ingest_script(&upload)).await?;
    Ok((
        StatusCode::CREATED,
        Json(ScriptCreated {
            chars: script.raw_text.chars().count(),
            script_id: script.id,
            title: script.title,
        }),
    ))
}

async fn get_script(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let script = state.service.script(&ScriptId::new(id))?;
    Ok(Json(json!({
        "script_id": script.id,
        "title": script.title,
        "text": script.raw_text,
        "summary": script.summary,
        "ingested_at": script.ingested_at,
    })))
}

async fn analyze_script(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<serde_json::Value>> {
    require_admin(&state, &headers)?;
    let id = ScriptId::new(id);
    let analysis = blocking(&state, move |svc| svc.analyze_script(&id)).await?;
    Ok(Json(json!({
        "summary": analysis.summary,
        "roles": analysis.roles,
        "warnings": analysis.warnings,
    })))
}

async fn setup_participant(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let pid = ParticipantId::new(id);
    match state.service.participant(&pid) {
        Ok(_) => require_participant(&state, &headers, &pid)?,
        Err(ServiceError::Store(StoreError::ParticipantNotFound(_))) => require_admin(&state, &headers)?,
        Err(e) => return Err(e.into()),
    }
    let req: SetupRequest = parse_json(&body)?;
    if req.d_day < req.day1 {
        return Err(ApiError::bad_request("d_day precedes day1"));
    }
    let p = blocking(&state, move |svc| svc.setup_participant(&pid, &req)).await?;
    Ok(Json(json!({
        "participant_id": p.participant_id,
        "token": p.token,
        "profile": p.profile,
        "production": p.production,
        "schedule": p.schedule,
    })))
}

#[derive(Debug, Deserialize)]
struct OpenSessionBody {
    date: NaiveDate,
}

async fn open_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let pid = ParticipantId::new(id);
    require_participant(&state, &headers, &pid)?;
    let OpenSessionBody { date } = parse_json(&body)?;
    let opened = blocking(&state, move |svc| svc.open_session(&pid, date)).await?;
    let log = opened.log;
    let mut out = json!({
        "session_id": log.session_id,
        "date": log.date,
        "condition": log.condition,
        "opened_at": log.opened_at,
    });
    if let Some(qs) = log.questions_presented {
        out["questions"] = json!(qs);
        out["warnings"] = json!(opened.warnings);
    }
    Ok((StatusCode::CREATED, Json(out)))
}

fn authorize_session(state: &AppState, headers: &HeaderMap, sid: &SessionId) -> ApiResult<()> {
    if is_admin(state, headers) {
        return Ok(());
    }
    bearer(headers).ok_or_else(ApiError::unauthorized)?;
    let owner = state.service.session_owner(sid)?;
    require_participant(state, headers, &owner)
}

async fn refresh(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<serde_json::Value>> {
    let sid = SessionId::new(id);
    authorize_session(&state, &headers, &sid)?;
    let (questions, warnings) = blocking(&state, move |svc| svc.refresh(&sid)).await?;
    Ok(Json(json!({ "questions": questions, "warnings": warnings })))
}

#[derive(Debug, Default, Deserialize)]
struct KeystrokeBody {
    /// Client-side epoch milliseconds of the first keystroke.
    #[serde(default)]
    at: Option<Timestamp>,
}

async fn keystroke(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let sid = SessionId::new(id);
    authorize_session(&state, &headers, &sid)?;
    let KeystrokeBody { at } = if body.is_empty() { KeystrokeBody::default() } else { parse_json(&body)? };
    let log = state.service.keystroke(&sid, at)?;
    Ok(Json(json!({
        "session_id": log.session_id,
        "first_keystroke_at": log.first_keystroke_at,
        "start_delay_ms": log.start_delay_ms,
    })))
}

async fn save_entry(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let sid = SessionId::new(id);
    authorize_session(&state, &headers, &sid)?;
    let req: SaveRequest = parse_json(&body)?;
    let entry = state.service.save_entry(&sid, req)?;
    let log = state.service.session(&sid)?;
    Ok(Json(json!({ "entry": entry, "session": log })))
}

async fn archive(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<serde_json::Value>> {
    let pid = ParticipantId::new(id);
    require_participant(&state, &headers, &pid)?;
    let entries = state.service.archive(&pid)?;
    Ok(Json(json!({ "entries": entries })))
}

#[derive(Debug, Deserialize)]
struct UpdateEntryBody {
    text: String,
}

async fn update_entry(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let eid = EntryId::new(id);
    if !is_admin(&state, &headers) {
        bearer(&headers).ok_or_else(ApiError::unauthorized)?;
        let owner = state.service.entry_owner(&eid)?;
        require_participant(&state, &headers, &owner)?;
    }
    let UpdateEntryBody { text } = parse_json(&body)?;
    let entry = state.service.update_entry(&eid, text)?;
    Ok(Json(json!({ "entry": entry })))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Query(q): Query<ExportQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    require_admin(&state, &headers)?;
    let format = match q.format.as_deref() {
        None => ExportFormat::Csv,
        Some(f) => ExportFormat::from_str(f).map_err(|e| ApiError::bad_request(e.to_string()))?,
    };
    let content_type = match format {
        ExportFormat::Csv => "text/csv; charset=utf-8",
        ExportFormat::Jsonl => "application/x-ndjson",
    };
    let body = state.service.export(format);
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}
