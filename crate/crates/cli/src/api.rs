//! JSON-over-HTTP service: browsing, checking, check-gated editing and
//! scenario sessions over one served specification.
//!
//! The served specification is swapped only by an editor commit. A commit
//! bumps the version and drops every scenario session, since their stores
//! were built for the old specification.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query as QueryParams, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use svsp_core::editor::{Change, ChangeError, EditError, EditSession, Proposal};
use svsp_core::query::{evaluate, parse_select, xref, Query, QueryError, QueryKind};
use svsp_core::scenario::{Binding, BindingValue, Session};
use svsp_core::{
    check_spec, format_spec, parse_spec, CheckReport, Code, DataElement, EffectBody, FunctionSpec,
    Init, Specification,
};

pub const DEFAULT_SESSION_LIMIT: usize = 64;

/// An error response: `{"code", "message"}` plus optional detail fields.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    extra: Option<(&'static str, Value)>,
}

impl ApiError {
    fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
            extra: None,
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, Code::E002.as_str(), message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, Code::E000.as_str(), message)
    }

    fn with(mut self, key: &'static str, value: Value) -> Self {
        self.extra = Some((key, value));
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"code": self.code, "message": self.message});
        if let Some((k, v)) = self.extra {
            body[k] = v;
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Served {
    spec: Arc<Specification>,
    report: CheckReport,
    version: u64,
}

struct SessionEntry {
    session: Arc<Mutex<Session>>,
    created_at: u64,
    version: u64,
    last_used: u64,
}

#[derive(Default)]
struct Sessions {
    entries: HashMap<String, SessionEntry>,
    clock: u64,
}

impl Sessions {
    fn touch(&mut self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.clock += 1;
        let now = self.clock;
        self.entries.get_mut(id).map(|e| {
            e.last_used = now;
            e.session.clone()
        })
    }

    fn insert(&mut self, id: String, entry: SessionEntry, limit: usize) {
        while self.entries.len() >= limit.max(1) {
            let oldest = self
                .entries
                .iter()
                .min_by_key(|(_, e)| e.last_used)
                .map(|(k, _)| k.clone())
                .expect("non-empty");
            self.entries.remove(&oldest);
        }
        self.entries.insert(id, entry);
    }
}

/// Shared service state.
pub struct AppState {
    served: RwLock<Served>,
    /// `None` when the specification has errors (check-only mode).
    editor: Mutex<Option<EditSession>>,
    sessions: Mutex<Sessions>,
    session_limit: usize,
}

impl AppState {
    pub fn new(spec: Specification) -> Arc<AppState> {
        AppState::with_session_limit(spec, DEFAULT_SESSION_LIMIT)
    }

    pub fn with_session_limit(spec: Specification, session_limit: usize) -> Arc<AppState> {
        let report = check_spec(&spec);
        let editor = EditSession::new(spec.clone()).ok();
        Arc::new(AppState {
            served: RwLock::new(Served {
                spec: Arc::new(spec),
                report,
                version: 0,
            }),
            editor: Mutex::new(editor),
            sessions: Mutex::new(Sessions::default()),
            session_limit,
        })
    }

    pub fn check_only(&self) -> bool {
        !self.served.read().unwrap().report.consistent
    }

    pub fn spec(&self) -> Arc<Specification> {
        self.served.read().unwrap().spec.clone()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().entries.len()
    }

    fn require_consistent(&self) -> ApiResult<()> {
        if self.check_only() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "check-only",
                "the served specification has errors; only browsing and checking are available",
            ));
        }
        Ok(())
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .unwrap()
            .touch(id)
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }
}

#[derive(Clone, Debug, Default)]
pub struct ServeOptions {
    /// Serve workbench assets at `/`.
    pub ui: bool,
    /// Built workbench assets; a placeholder page is served when absent.
    pub ui_dir: Option<PathBuf>,
}

pub fn router(state: Arc<AppState>, options: ServeOptions) -> Router {
    let api = Router::new()
        .route("/api/spec/summary", get(summary))
        .route("/api/functions", get(list_functions))
        .route("/api/functions/{id}", get(function_detail))
        .route("/api/elements", get(list_elements))
        .route("/api/elements/{id}/xref", get(element_xref))
        .route("/api/types", get(list_types))
        .route("/api/check", post(check))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_handle))
        .route("/api/sessions/{id}/store", get(session_store))
        .route("/api/sessions/{id}/calls", post(session_call))
        .route("/api/sessions/{id}/reset", post(session_reset))
        .route("/api/sessions/{id}/trace", get(session_trace))
        .route("/api/proposals", post(propose))
        .route("/api/proposals/{id}", get(proposal_detail))
        .route("/api/proposals/{id}/commit", post(commit))
        .route("/api/proposals/{id}/abandon", post(abandon))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state);
    let app = match (options.ui, options.ui_dir) {
        (false, _) => api,
        (true, Some(dir)) => api.fallback_service(ServeDir::new(dir)),
        (true, None) => api.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    };
    app.layer(CorsLayer::permissive())
}

const PLACEHOLDER_PAGE: &str = "<!doctype html>\n<title>svsp</title>\n\
<p>The workbench assets are not installed. Start the service with <code>--ui-dir DIR</code> \
to serve a built workbench, or use the JSON API under <code>/api</code>.</p>\n";

async fn summary(State(state): State<Arc<AppState>>) -> Json<Value> {
    let served = state.served.read().unwrap();
    let spec = &served.spec;
    Json(json!({
        "version": served.version,
        "consistent": served.report.consistent,
        "check_only": !served.report.consistent,
        "types": spec.types().count(),
        "elements": spec.elements().count(),
        "functions": spec.functions().count(),
        "states": spec.state_decl().map(|s| s.states.clone()).unwrap_or_default(),
        "diagnostics": served.report.summary,
    }))
}

#[derive(Deserialize)]
struct ListParams {
    #[serde(rename = "where")]
    filter: Option<String>,
    select: Option<String>,
}

fn invalid_query(e: QueryError) -> ApiError {
    match e {
        QueryError::UnknownElement(id) => ApiError::not_found(format!("unknown element `{id}`")),
        other => ApiError::bad_request(other.to_string()),
    }
}

/// Parses `where`/`select` for one entity kind. The kind is fixed by the
/// endpoint; a `kind=` term naming another kind is refused.
fn build_query(kind: QueryKind, params: &ListParams) -> ApiResult<(Query, bool)> {
    let text = params.filter.as_deref().unwrap_or("").trim();
    let with_kind = if text.is_empty() {
        format!("kind={kind}")
    } else if text.split('&').any(|t| t.trim().starts_with("kind")) {
        text.to_string()
    } else {
        format!("kind={kind} & {text}")
    };
    let mut q = Query::parse(&with_kind).map_err(invalid_query)?;
    if q.kind != kind {
        return Err(ApiError::bad_request(format!(
            "this endpoint lists {kind}s, not {}s",
            q.kind
        )));
    }
    let projected = params.select.is_some() || text.contains("select");
    if let Some(s) = &params.select {
        q.select = parse_select(s).map_err(invalid_query)?;
        q.validate().map_err(invalid_query)?;
    }
    Ok((q, projected))
}

async fn list_functions(
    State(state): State<Arc<AppState>>,
    QueryParams(params): QueryParams<ListParams>,
) -> ApiResult<Json<Value>> {
    let spec = state.spec();
    let (q, projected) = build_query(QueryKind::Function, &params)?;
    let table = evaluate(&spec, &q).map_err(invalid_query)?;
    // Without a projection the answer is the id list.
    Ok(Json(if projected {
        table.to_json()
    } else {
        json!(table.ids())
    }))
}

fn element_view(spec: &Specification, e: &DataElement) -> Value {
    let kind = spec
        .types()
        .find(|t| t.id == e.type_ref)
        .map(|t| t.describe());
    let restriction = e.restriction.to_string();
    let hint = match (&kind, e.restriction.is_unrestricted()) {
        (Some(k), false) => format!("{k}, {restriction}"),
        (Some(k), true) => k.clone(),
        (None, _) => restriction.clone(),
    };
    let (init, value) = match &e.init {
        Init::Known(v) => ("known", json!(v)),
        other => (status_word(other), Value::Null),
    };
    json!({
        "id": e.id,
        "type": e.type_ref,
        "kind": kind,
        "restriction": restriction,
        "hint": hint,
        "init": {"status": init, "value": value},
    })
}

fn status_word(init: &Init) -> &'static str {
    match init {
        Init::Unallocated => "unallocated",
        Init::Allocated => "allocated",
        Init::Defined => "defined",
        Init::Known(_) => "known",
    }
}

fn function_view(spec: &Specification, f: &FunctionSpec) -> Value {
    let params: Vec<Value> = f
        .params
        .iter()
        .map(|p| {
            let mut v = json!({
                "element": p.element,
                "direction": p.direction,
                "implicit": p.implicit,
                "bindable": p.is_bindable(),
            });
            if let Some(e) = spec.element(&p.element) {
                let view = element_view(spec, e);
                for key in ["type", "kind", "restriction", "hint"] {
                    v[key] = view[key].clone();
                }
            }
            v
        })
        .collect();
    let effects: Vec<Value> = f
        .effects
        .iter()
        .map(|e| {
            let body = match &e.body {
                EffectBody::Abstract => json!("abstract"),
                EffectBody::Transform(stmts) => {
                    json!(stmts.iter().map(svsp_core::dsl::format_statement).collect::<Vec<_>>())
                }
            };
            json!({
                "id": e.id,
                "pre": e.pre.iter().map(|p| json!({
                    "element": p.element,
                    "status": p.required,
                    "restriction": p.restriction.as_ref().map(|r| r.to_string()),
                })).collect::<Vec<_>>(),
                "post": e.post.iter().map(|p| json!({"element": p.element, "status": p.resulting})).collect::<Vec<_>>(),
                "body": body,
            })
        })
        .collect();
    json!({
        "id": f.id,
        "classification": f.classification,
        "params": params,
        "effects": effects,
        "decl": svsp_core::dsl::format_decl(&svsp_core::Decl::Func(f.clone())),
    })
}

async fn function_detail(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let spec = state.spec();
    let f = spec
        .function(&id)
        .ok_or_else(|| ApiError::not_found(format!("no function `{id}`")))?;
    Ok(Json(function_view(&spec, f)))
}

async fn list_elements(
    State(state): State<Arc<AppState>>,
    QueryParams(params): QueryParams<ListParams>,
) -> ApiResult<Json<Value>> {
    let spec = state.spec();
    let (q, projected) = build_query(QueryKind::Element, &params)?;
    let table = evaluate(&spec, &q).map_err(invalid_query)?;
    if projected {
        return Ok(Json(table.to_json()));
    }
    let rows: Vec<Value> = table
        .ids()
        .iter()
        .filter_map(|id| spec.element(id))
        .map(|e| element_view(&spec, e))
        .collect();
    Ok(Json(json!(rows)))
}

async fn element_xref(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let spec = state.spec();
    let x = xref(&spec, &id).map_err(invalid_query)?;
    Ok(Json(json!(x)))
}

async fn list_types(State(state): State<Arc<AppState>>) -> Json<Value> {
    let spec = state.spec();
    let rows: Vec<Value> = spec
        .types()
        .map(|t| json!({"id": t.id, "kind": t.kind(), "type": t.describe()}))
        .collect();
    Json(json!(rows))
}

#[derive(Deserialize, Default)]
struct CheckBody {
    /// Specification text to check instead of the served one.
    source: Option<String>,
}

async fn check(State(state): State<Arc<AppState>>, body: Option<Json<CheckBody>>) -> Json<Value> {
    let source = body.and_then(|Json(b)| b.source);
    let report = match source {
        None => state.served.read().unwrap().report.clone(),
        Some(text) => match parse_spec(&text) {
            Ok(spec) => check_spec(&spec),
            Err(diags) => CheckReport::from_diagnostics(diags),
        },
    };
    Json(json!(report))
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}

async fn create_session(
    State(state): State<Arc<AppState>>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    state.require_consistent()?;
    let (spec, version) = {
        let served = state.served.read().unwrap();
        (served.spec.clone(), served.version)
    };
    let session = Session::new(spec)
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, "check-only", e.to_string()))?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let created_at = now_secs();
    let mut sessions = state.sessions.lock().unwrap();
    sessions.clock += 1;
    let entry = SessionEntry {
        session: Arc::new(Mutex::new(session)),
        created_at,
        version,
        last_used: sessions.clock,
    };
    sessions.insert(id.clone(), entry, state.session_limit);
    Ok((
        StatusCode::CREATED,
        Json(json!({"id": id, "created_at": created_at, "version": version})),
    ))
}

async fn session_handle(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let mut sessions = state.sessions.lock().unwrap();
    sessions.touch(&id);
    let e = sessions
        .entries
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))?;
    Ok(Json(
        json!({"id": id, "created_at": e.created_at, "version": e.version}),
    ))
}

async fn session_store(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let store = session.lock().unwrap().snapshot();
    Ok(Json(json!(store)))
}

#[derive(Deserialize)]
struct CallBody {
    function: String,
    #[serde(default)]
    bindings: serde_json::Map<String, Value>,
}

fn parse_bindings(raw: &serde_json::Map<String, Value>) -> ApiResult<Binding> {
    raw.iter()
        .map(|(k, v)| {
            BindingValue::from_json(v)
                .map(|b| (k.clone(), b))
                .ok_or_else(|| {
                    ApiError::bad_request(format!(
                        "binding `{k}` must be a number, a string or {{\"defined\": true}}"
                    ))
                })
        })
        .collect()
}

async fn session_call(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<CallBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let bindings = parse_bindings(&body.bindings)?;
    let session = state.session(&id)?;
    // The session lock serializes calls on one handle.
    let record = session
        .lock()
        .unwrap()
        .call_function(&body.function, &bindings);
    let status = if record.outcome.is_ok() {
        StatusCode::OK
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    Ok((status, Json(record.to_json())))
}

async fn session_reset(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let mut s = session.lock().unwrap();
    s.reset();
    Ok(Json(json!({"id": id, "store": s.snapshot()})))
}

async fn session_trace(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let trace = session.lock().unwrap().trace().to_vec();
    Ok(Json(json!(trace)))
}

fn proposal_view(p: &Proposal) -> Value {
    json!({
        "proposal_id": p.id,
        "status": p.status,
        "change": p.change.to_json(),
        "report": p.report,
    })
}

async fn propose(
    State(state): State<Arc<AppState>>,
    body: Result<Json<Value>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    state.require_consistent()?;
    let change = Change::from_json(&body).map_err(|e| match e {
        ChangeError::Malformed(m) => ApiError::bad_request(m),
        ChangeError::Syntax(diags) => {
            ApiError::bad_request("`decl` does not parse").with("diagnostics", json!(diags))
        }
    })?;
    let mut editor = state.editor.lock().unwrap();
    let editor = editor.as_mut().expect("consistent specs have an editor");
    Ok(Json(proposal_view(editor.propose(change))))
}

async fn proposal_detail(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let editor = state.editor.lock().unwrap();
    editor
        .as_ref()
        .and_then(|e| e.proposal(&id))
        .map(|p| Json(proposal_view(p)))
        .ok_or_else(|| ApiError::not_found(format!("no proposal `{id}`")))
}

fn edit_error(e: EditError, report: Option<&CheckReport>) -> ApiError {
    match e {
        EditError::UnknownProposal(_) => ApiError::not_found(e.to_string()),
        EditError::StaleProposal(_) => ApiError::new(StatusCode::CONFLICT, "stale", e.to_string()),
        EditError::NotConsistent(_) => {
            let code = report
                .and_then(|r| r.errors().next())
                .map(|d| d.code.as_str().to_string())
                .unwrap_or_else(|| "not-consistent".to_string());
            let err = ApiError::new(StatusCode::CONFLICT, code, e.to_string());
            match report {
                Some(r) => err.with("report", json!(r)),
                None => err,
            }
        }
        EditError::InconsistentBase(_) => {
            ApiError::new(StatusCode::CONFLICT, "check-only", e.to_string())
        }
    }
}

async fn commit(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let mut guard = state.editor.lock().unwrap();
    let editor = guard
        .as_mut()
        .ok_or_else(|| ApiError::not_found(format!("no proposal `{id}`")))?;
    let report = editor.proposal(&id).map(|p| p.report.clone());
    let spec = editor
        .commit(&id)
        .map_err(|e| edit_error(e, report.as_ref()))?
        .clone();
    let report = check_spec(&spec);
    let version = {
        let mut served = state.served.write().unwrap();
        served.version += 1;
        served.spec = Arc::new(spec);
        served.report = report;
        served.version
    };
    let dropped = {
        let mut sessions = state.sessions.lock().unwrap();
        let n = sessions.entries.len();
        sessions.entries.retain(|_, e| e.version == version);
        n - sessions.entries.len()
    };
    drop(guard);
    let served = state.served.read().unwrap();
    Ok(Json(json!({
        "proposal_id": id,
        "status": "committed",
        "version": version,
        "sessions_invalidated": dropped,
        "spec": format_spec(&served.spec),
    })))
}

async fn abandon(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let mut guard = state.editor.lock().unwrap();
    let editor = guard
        .as_mut()
        .ok_or_else(|| ApiError::not_found(format!("no proposal `{id}`")))?;
    editor.abandon(&id).map_err(|e| edit_error(e, None))?;
    Ok(Json(json!({"proposal_id": id, "status": "abandoned"})))
}
