//! HTTP service backing the web UI.
//!
//! The model and pipeline configuration are built once and shared
//! read-only between requests; image analysis runs on the blocking pool.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use carp_core::classify::CardLabel;
use carp_core::pipeline::{analyze, AnalysisReport, PipelineConfig, Recommendation};
use carp_core::{ImageRgb, KnnModel};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::advice::{recommend_tokens, AdviceError};

/// Largest accepted upload.
pub const MAX_UPLOAD: usize = 32 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    model: Arc<KnnModel>,
    config: Arc<PipelineConfig>,
}

impl AppState {
    pub fn new(model: KnnModel, config: PipelineConfig) -> Self {
        Self {
            model: Arc::new(model),
            config: Arc::new(config),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal() -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/analyze", post(analyze_image))
        .route("/api/recommend", post(recommend_move))
        .route("/api/labels", get(labels))
        .route("/api/health", get(health))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(
    addr: SocketAddr,
    model: KnnModel,
    config: PipelineConfig,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let app = router(AppState::new(model, config), static_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health(State(st): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "model": { "examples": st.model.len(), "k": st.model.k() },
    }))
}

async fn labels() -> Json<Vec<&'static str>> {
    let mut v: Vec<&str> = CardLabel::ALL.iter().map(|l| l.as_str()).collect();
    v.sort_unstable();
    Json(v)
}

/// A rank token given as a string (`"Q"`) or a bare number (`7`).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Token {
    Text(String),
    Number(u32),
}

impl Token {
    fn text(&self) -> String {
        match self {
            Token::Text(s) => s.clone(),
            Token::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RecommendRequest {
    player: Vec<Token>,
    dealer: Token,
}

async fn recommend_move(body: Bytes) -> Result<Json<Recommendation>, ApiError> {
    let req: RecommendRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed request: {e}")))?;
    let player: Vec<String> = req.player.iter().map(Token::text).collect();
    match recommend_tokens(&player, &req.dealer.text()) {
        Ok(m) => Ok(Json(Recommendation::new(m))),
        Err(e @ AdviceError::BadToken(_)) => Err(ApiError::bad_request(e.to_string())),
        Err(e @ AdviceError::InvalidHand(_)) => Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())),
    }
}

async fn analyze_image(State(st): State<AppState>, req: Request) -> Result<Json<AnalysisReport>, ApiError> {
    let content_type = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_ascii_lowercase();
    let bytes = if content_type.starts_with("multipart/form-data") {
        let mut mp = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        let mut found = None;
        while let Some(field) = mp.next_field().await.map_err(|e| ApiError::bad_request(e.body_text()))? {
            let is_image = matches!(field.name(), Some("image") | Some("file"));
            let data = field.bytes().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
            if is_image || found.is_none() {
                found = Some(data);
                if is_image {
                    break;
                }
            }
        }
        found.ok_or_else(|| ApiError::bad_request("multipart body has no image field"))?
    } else if content_type.starts_with("image/png") || content_type.starts_with("image/jpeg") {
        axum::body::to_bytes(req.into_body(), MAX_UPLOAD)
            .await
            .map_err(|_| ApiError::bad_request("could not read request body"))?
    } else {
        return Err(ApiError::bad_request(
            "send multipart/form-data or a raw image/png or image/jpeg body",
        ));
    };
    let model = st.model.clone();
    let config = st.config.clone();
    let result = tokio::task::spawn_blocking(move || {
        let img = ImageRgb::decode(&bytes).map_err(|e| ApiError::bad_request(format!("cannot decode image: {e}")))?;
        let analysis = analyze(&img, &model, &config).map_err(|_| ApiError::internal())?;
        Ok::<_, ApiError>(analysis.report(img.width(), img.height()))
    })
    .await
    .map_err(|_| ApiError::internal())?;
    result.map(Json)
}
