//! Read-only local HTTP service over one loaded scene.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use cortex_atlas::connect::{read_tsf, seed_correlation, Seed, TimeSeriesField};
use cortex_atlas::mesh::RegionId;
use cortex_atlas::scene::{to_json_bytes, Scene};
use tower_http::services::ServeDir;

use crate::ServeArgs;

const PLACEHOLDER: &str = "<!doctype html><title>cortex-atlas</title>\
<p>No viewer assets configured. Start with <code>--assets DIR</code>; the scene is at <a href=\"/api/scene\">/api/scene</a>.</p>";

pub struct AppState {
    pub scene: Scene,
    scene_json: Vec<u8>,
    /// Rows over the scene vertices.
    time_series: Option<TimeSeriesField>,
    labels: Option<Vec<RegionId>>,
}

impl AppState {
    pub fn new(scene: Scene, time_series: Option<TimeSeriesField>) -> anyhow::Result<Self> {
        scene.validate()?;
        let time_series = time_series.map(|ts| scene.restrict_time_series(&ts)).transpose()?;
        let labels = scene.concatenated_labels().ok();
        let scene_json = scene.to_json_bytes()?;
        Ok(AppState { scene, scene_json, time_series, labels })
    }

    pub fn load(scene: &Path, tsf: Option<&Path>) -> anyhow::Result<Self> {
        let s = Scene::load(scene).with_context(|| format!("loading scene {}", scene.display()))?;
        let ts = tsf.map(|p| read_tsf(p).with_context(|| format!("loading {}", p.display()))).transpose()?;
        Self::new(s, ts)
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.1 }).to_string();
        (self.0, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn json(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

fn param<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>, ApiError> {
    q.get(key)
        .map(|v| v.parse().map_err(|_| bad_request(format!("'{key}' must be a non-negative integer, got '{v}'"))))
        .transpose()
}

async fn scene(State(st): State<Arc<AppState>>) -> Response {
    json(st.scene_json.clone())
}

async fn correlation(State(st): State<Arc<AppState>>, Query(q): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let seed = match (param::<usize>(&q, "vertex")?, param::<RegionId>(&q, "region")?) {
        (Some(v), None) => Seed::Vertex(v),
        (None, Some(r)) => Seed::Region(r),
        _ => return Err(bad_request("give exactly one of 'vertex' or 'region'")),
    };
    if st.time_series.is_none() {
        return Err(ApiError(StatusCode::NOT_FOUND, "no time series loaded; start the service with --tsf".into()));
    }
    match seed {
        Seed::Vertex(v) if v >= st.scene.total_vertices() => {
            return Err(bad_request(format!("unknown vertex {v}; the scene has {} vertices", st.scene.total_vertices())))
        }
        Seed::Region(r) if !st.scene.regions().contains_key(&r) => return Err(bad_request(format!("unknown region {r}"))),
        _ => {}
    }
    let st2 = st.clone();
    let field = tokio::task::spawn_blocking(move || {
        let ts = st2.time_series.as_ref().expect("checked above");
        seed_correlation(ts, seed, st2.labels.as_deref())
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| bad_request(e.to_string()))?;
    let bytes = to_json_bytes(&field.values).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(json(bytes))
}

async fn bundles(State(st): State<Arc<AppState>>, Query(q): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let (Some(a), Some(b)) = (param::<RegionId>(&q, "region_a")?, param::<RegionId>(&q, "region_b")?) else {
        return Err(bad_request("'region_a' and 'region_b' are required"));
    };
    let subset = st.scene.bundles_between(a, b);
    let bytes = to_json_bytes(&subset).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(json(bytes))
}

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER)
}

pub fn router(state: AppState, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/scene", get(scene))
        .route("/api/correlation", get(correlation))
        .route("/api/bundles", get(bundles))
        .with_state(Arc::new(state));
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.route("/", get(placeholder)),
    }
}

pub fn run_blocking(a: &ServeArgs) -> anyhow::Result<()> {
    let state = AppState::load(&a.scene, a.tsf.as_deref())?;
    if let Some(dir) = &a.assets {
        anyhow::ensure!(dir.is_dir(), "assets directory {} does not exist", dir.display());
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().with_context(|| format!("bad address {}:{}", a.host, a.port))?;
    let app = router(state, a.assets.clone());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        log::info!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
