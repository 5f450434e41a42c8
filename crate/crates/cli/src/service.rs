//! JSON-over-HTTP service. Every handler runs the same operations as the
//! command line through [`crate::ops`].

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use docsift::config::{Pipeline, RunConfig};
use docsift::eval::{evaluate_corpus, Corpus, EvalReport};
use docsift::imaging::DocumentFormat;
use docsift::text::{Document, ExtractedText};
use serde::{Deserialize, Serialize};

use crate::ops::{self, OpError, RetrieveItem};

pub const DEFAULT_DOC_TTL: Duration = Duration::from_secs(3600);
/// Uploads above this size are rejected with 413.
pub const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

pub struct ServiceOptions {
    pub doc_ttl: Duration,
    /// Allows `/evaluate`, which reads corpus files from the server's disk.
    pub local_trust: bool,
    /// JSONL request log destination; `None` disables logging.
    pub request_log: Option<Box<dyn Write + Send>>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            doc_ttl: DEFAULT_DOC_TTL,
            local_trust: false,
            request_log: None,
        }
    }
}

/// Uploaded documents keyed by id; entries expire `ttl` after upload.
struct DocStore {
    ttl: Duration,
    docs: Mutex<HashMap<String, (Arc<Document>, Instant)>>,
}

impl DocStore {
    fn insert(&self, doc: Document) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        let mut docs = self.docs.lock().expect("store lock");
        let now = Instant::now();
        docs.retain(|_, (_, at)| now.duration_since(*at) < self.ttl);
        docs.insert(id.clone(), (Arc::new(doc), now));
        id
    }

    fn get(&self, id: &str) -> Option<Arc<Document>> {
        let docs = self.docs.lock().expect("store lock");
        docs.get(id)
            .filter(|(_, at)| at.elapsed() < self.ttl)
            .map(|(d, _)| d.clone())
    }
}

struct AppState {
    pipeline: Arc<Pipeline>,
    store: DocStore,
    local_trust: bool,
    log: Option<Mutex<Box<dyn Write + Send>>>,
}

pub struct ApiError(pub OpError);

impl From<OpError> for ApiError {
    fn from(e: OpError) -> Self {
        Self(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let status = r.status().as_u16();
        Self(OpError::new("invalid_request", r.body_text(), ops::exit::INPUT, status))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0.envelope())).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn not_found(code: &str, message: impl Into<String>) -> ApiError {
    ApiError(OpError::new(code, message, ops::exit::INPUT, 404))
}

/// Runs a blocking core call off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, OpError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(OpError::new("internal", e.to_string(), ops::exit::ADAPTER, 500)))?
        .map_err(ApiError)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Uploaded {
    pub doc_id: String,
    pub format: DocumentFormat,
}

async fn upload(State(state): State<Arc<AppState>>, mut multipart: Multipart) -> ApiResult<Uploaded> {
    let bad = |m: String| ApiError(OpError::input("invalid_request", m));
    while let Some(field) = multipart.next_field().await.map_err(|e| bad(e.body_text()))? {
        if field.name() != Some("file") {
            continue;
        }
        let name = field.file_name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(|e| bad(e.body_text()))?;
        let doc = Document::from_bytes(name, bytes.to_vec()).map_err(OpError::from)?;
        let format = doc.format;
        let doc_id = state.store.insert(doc);
        return Ok(Json(Uploaded { doc_id, format }));
    }
    Err(bad("multipart field \"file\" is missing".into()))
}

/// A stored document or inline text; exactly one must be given.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractRequest {
    #[serde(default)]
    pub doc_id: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub config_overrides: Option<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieveRequest {
    #[serde(default)]
    pub doc_id: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
    pub fields: Vec<String>,
    #[serde(default)]
    pub config_overrides: Option<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub corpus_path: PathBuf,
    #[serde(default)]
    pub config_overrides: Option<serde_json::Value>,
}

impl AppState {
    fn document(&self, doc_id: Option<String>, text: Option<String>) -> Result<Arc<Document>, ApiError> {
        match (doc_id, text) {
            (Some(id), None) => self
                .store
                .get(&id)
                .ok_or_else(|| not_found("unknown_document", format!("no document {id:?}"))),
            (None, Some(text)) => Ok(Arc::new(Document::plain_text(text))),
            _ => Err(ApiError(OpError::input(
                "invalid_request",
                "exactly one of doc_id and text is required",
            ))),
        }
    }

    /// The shared pipeline, or a fresh one when the request overrides config.
    fn pipeline(&self, overrides: Option<serde_json::Value>) -> Result<Arc<Pipeline>, ApiError> {
        match overrides {
            None => Ok(self.pipeline.clone()),
            Some(patch) => {
                let config: RunConfig = ops::with_overrides(self.pipeline.config(), &patch)?;
                Ok(Arc::new(Pipeline::from_config(config).map_err(OpError::from)?))
            }
        }
    }
}

async fn extract_text(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ExtractRequest>, JsonRejection>,
) -> ApiResult<ExtractedText> {
    let Json(req) = body?;
    let doc = state.document(req.doc_id, req.text)?;
    let pipeline = state.pipeline(req.config_overrides)?;
    Ok(Json(blocking(move || ops::extract(&pipeline, &doc)).await?))
}

async fn retrieve(
    State(state): State<Arc<AppState>>,
    body: Result<Json<RetrieveRequest>, JsonRejection>,
) -> ApiResult<Vec<RetrieveItem>> {
    let Json(req) = body?;
    let doc = state.document(req.doc_id, req.text)?;
    let pipeline = state.pipeline(req.config_overrides)?;
    let fields = req.fields;
    if fields.is_empty() {
        return Err(ApiError(OpError::input("invalid_request", "fields must not be empty")));
    }
    Ok(Json(blocking(move || ops::retrieve(&pipeline, &doc, &fields)).await?))
}

async fn evaluate(
    State(state): State<Arc<AppState>>,
    body: Result<Json<EvaluateRequest>, JsonRejection>,
) -> ApiResult<EvalReport> {
    if !state.local_trust {
        return Err(ApiError(OpError::new(
            "forbidden",
            "evaluate reads server files and needs local-trust mode",
            ops::exit::INPUT,
            403,
        )));
    }
    let Json(req) = body?;
    let pipeline = state.pipeline(req.config_overrides)?;
    let report = blocking(move || {
        let corpus = Corpus::load(&req.corpus_path)?;
        let options = pipeline.config().evaluation;
        Ok(evaluate_corpus(&corpus, &pipeline, options)?)
    })
    .await?;
    Ok(Json(report))
}

async fn fallback() -> ApiError {
    not_found("not_found", "no such endpoint")
}

async fn log_requests(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    let method = req.method().to_string();
    let path = req.uri().path().to_string();
    let started = Instant::now();
    let response = next.run(req).await;
    if let Some(log) = &state.log {
        let ts_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let line = serde_json::json!({
            "ts_ms": ts_ms,
            "method": method,
            "path": path,
            "status": response.status().as_u16(),
            "duration_ms": started.elapsed().as_secs_f64() * 1000.0,
        });
        let mut out = log.lock().expect("log lock");
        // A broken log sink must not fail the request.
        let _ = writeln!(out, "{line}").and_then(|_| out.flush());
    }
    response
}

pub fn router(pipeline: Pipeline, options: ServiceOptions) -> Router {
    let state = Arc::new(AppState {
        pipeline: Arc::new(pipeline),
        store: DocStore {
            ttl: options.doc_ttl,
            docs: Mutex::new(HashMap::new()),
        },
        local_trust: options.local_trust,
        log: options.request_log.map(Mutex::new),
    });
    Router::new()
        .route("/health", get(health))
        .route("/documents", post(upload))
        .route("/extract-text", post(extract_text))
        .route("/retrieve", post(retrieve))
        .route("/evaluate", post(evaluate))
        .fallback(fallback)
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .layer(middleware::from_fn_with_state(state.clone(), log_requests))
        .with_state(state)
}

/// Binds and serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
