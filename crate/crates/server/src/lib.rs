//! HTTP API over a study table scored once at startup.
//!
//! | method | path            | body / query                                   |
//! |--------|-----------------|------------------------------------------------|
//! | GET    | `/api/studies`  |                                                |
//! | POST   | `/api/classify` | `{"negligible_threshold", "meaningful_threshold"?}` |
//! | GET    | `/api/plot.svg` | `?negligible_threshold=&meaningful_threshold=` |
//!
//! No endpoint samples. Thresholds are re-tested against the stored Ls%/Ms%.

use std::path::Path;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

use contra_core::analysis::{analyze, AnalysisError, AnalysisOptions};
use contra_core::contraplot::{render_contra_plot, ContraPlotSpec};
use contra_core::effectsize::{EffectSizeError, EffectSizeSummary};
use contra_core::ingest::{load_study_table, IngestError, StudySummary};
use contra_core::report::{classify, order_by, SortMode, SummaryRecord, Thresholds};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// One study as served: its table row, its scores, and whether the control
/// mean was too close to zero for a reliable relative effect.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionEntry {
    pub study: StudySummary,
    pub summary: EffectSizeSummary,
    pub gated: bool,
}

/// Everything the API serves. Built once, never mutated.
#[derive(Debug, Clone)]
pub struct SessionState {
    /// SHA-256 of the fixture bytes, hex encoded. Empty when nothing is loaded.
    pub fingerprint: String,
    pub fixture_name: Option<String>,
    pub k: usize,
    pub seed: u64,
    /// Center-out display order.
    pub entries: Vec<SessionEntry>,
}

impl SessionState {
    pub fn empty(k: usize, seed: u64) -> Self {
        SessionState {
            fingerprint: String::new(),
            fixture_name: None,
            k,
            seed,
            entries: Vec::new(),
        }
    }

    /// Scores `text` (a study table) with `k` draws per study.
    pub fn from_table(name: &str, text: &str, k: usize, seed: u64) -> Result<Self, LoadError> {
        let table = load_study_table(text)?;
        let results = analyze(
            &table.studies,
            &AnalysisOptions {
                k,
                seed,
                ..Default::default()
            },
        )?;
        let entries = order_by(results, SortMode::CenterOut, |r| &r.summary)
            .into_iter()
            .map(|r| SessionEntry {
                study: r.study,
                summary: r.summary,
                gated: r.gated,
            })
            .collect();
        Ok(SessionState {
            fingerprint: hex::encode(Sha256::digest(text.as_bytes())),
            fixture_name: Some(name.to_string()),
            k,
            seed,
            entries,
        })
    }

    pub fn load(path: &Path, k: usize, seed: u64) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_table(&name, &text, k, seed)
    }

    pub fn records(&self) -> Vec<SummaryRecord> {
        self.entries
            .iter()
            .map(|e| SummaryRecord::from_summary(&e.summary))
            .collect()
    }
}

#[derive(Debug, Serialize)]
struct StudyRecord<'a> {
    study: &'a StudySummary,
    summary: SummaryRecord,
    gated: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotQuery {
    pub negligible_threshold: Option<f64>,
    pub meaningful_threshold: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (
        status,
        Json(ErrorBody {
            error: message.into(),
        }),
    )
        .into_response()
}

impl From<EffectSizeError> for ApiError {
    fn from(e: EffectSizeError) -> Self {
        ApiError(StatusCode::BAD_REQUEST, e.to_string())
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        error(self.0, self.1)
    }
}

async fn get_studies(State(state): State<Arc<SessionState>>) -> Response {
    let records: Vec<StudyRecord> = state
        .entries
        .iter()
        .map(|e| StudyRecord {
            study: &e.study,
            summary: SummaryRecord::from_summary(&e.summary),
            gated: e.gated,
        })
        .collect();
    Json(records).into_response()
}

async fn post_classify(
    State(state): State<Arc<SessionState>>,
    Json(t): Json<Thresholds>,
) -> Result<Json<Vec<SummaryRecord>>, ApiError> {
    t.validate()?;
    let decided = classify(
        &state.records(),
        Some(t.negligible_threshold),
        t.meaningful_threshold,
    )
    .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok(Json(decided))
}

async fn get_plot(
    State(state): State<Arc<SessionState>>,
    Query(q): Query<PlotQuery>,
) -> Result<Response, ApiError> {
    Thresholds {
        negligible_threshold: q.negligible_threshold.unwrap_or(1.0),
        meaningful_threshold: q.meaningful_threshold,
    }
    .validate()?;
    if state.entries.is_empty() {
        return Err(ApiError(StatusCode::NOT_FOUND, "no studies loaded".into()));
    }
    let mut spec = ContraPlotSpec::new(
        state
            .entries
            .iter()
            .map(|e| (e.study.clone(), e.summary.clone()))
            .collect(),
    );
    spec.negligible_threshold = q.negligible_threshold;
    spec.meaningful_threshold = q.meaningful_threshold;
    if let Some(name) = &state.fixture_name {
        spec.title = format!("{name}: relative difference in means");
    }
    let svg = render_contra_plot(&spec)
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

/// Routes over `state`. `cors_origins` are the browser origins allowed to call the API.
pub fn router(state: Arc<SessionState>, cors_origins: &[HeaderValue]) -> Router {
    let app = Router::new()
        .route("/api/studies", get(get_studies))
        .route("/api/classify", post(post_classify))
        .route("/api/plot.svg", get(get_plot))
        .with_state(state);
    if cors_origins.is_empty() {
        app
    } else {
        app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(cors_origins.iter().cloned()))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        )
    }
}
