//! HTTP API over the ranking and optimization library.
//!
//! Three endpoints, all JSON:
//!
//! - `GET /api/dataset` — the loaded indicator matrix.
//! - `POST /api/rank` — `{weights, mode}` → ranking rows.
//! - `POST /api/optimize` — `{entity, mode, order, direction}` → optimal weights.
//!
//! The dataset is loaded once and shared read-only; every solve runs on the
//! blocking pool so slow requests never stall the others.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rankopt::dataset::DatasetJson;
use rankopt::optimizer::{self, Direction, OptimizationSpec, Order, Solution, SolveStatus};
use rankopt::ranking::{ranking_table, WeightMode, WeightVector};
use rankopt::IndicatorMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_SOLVE_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Clone)]
pub struct AppState {
    data: Option<Arc<IndicatorMatrix>>,
    solve_timeout: Duration,
    node_budget: Option<u64>,
}

impl AppState {
    pub fn new(data: IndicatorMatrix) -> Self {
        Self {
            data: Some(Arc::new(data)),
            solve_timeout: DEFAULT_SOLVE_TIMEOUT,
            node_budget: None,
        }
    }

    /// A server with nothing loaded; every endpoint answers 503.
    pub fn empty() -> Self {
        Self {
            data: None,
            solve_timeout: DEFAULT_SOLVE_TIMEOUT,
            node_budget: None,
        }
    }

    pub fn with_solve_timeout(mut self, timeout: Duration) -> Self {
        self.solve_timeout = timeout;
        self
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = Some(budget);
        self
    }

    fn dataset(&self) -> Result<Arc<IndicatorMatrix>, ApiError> {
        self.data.clone().ok_or_else(|| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "no_dataset",
                "no dataset loaded",
            )
        })
    }
}

/// Error body: `{code, message}`, plus the best incumbent on a timeout.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub incumbent: Option<Box<OptimizeResponse>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            incumbent: None,
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    incumbent: Option<&'a OptimizeResponse>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: &self.message,
            incumbent: self.incumbent.as_deref(),
        };
        (self.status, Json(body)).into_response()
    }
}

/// Malformed JSON is a 400; well-formed JSON of the wrong shape is a 422.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ApiError::unprocessable(e.to_string()),
        _ => ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankRequest {
    pub weights: Vec<f64>,
    /// Defaults to integer when every weight is a whole number.
    pub mode: Option<WeightMode>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct RankRow {
    pub entity: String,
    pub ci: f64,
    pub rank: usize,
    pub equal_weights_rank: usize,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OrderField {
    Number(u64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OptimizeRequest {
    entity: String,
    #[serde(default)]
    mode: Option<WeightMode>,
    #[serde(default)]
    order: Option<OrderField>,
    #[serde(default)]
    direction: Option<Direction>,
    #[serde(default)]
    w_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct OptimizeStats {
    pub nodes: u64,
    pub lp_solves: u64,
}

/// Optimization result. Wall time is left out so identical requests give
/// byte-identical bodies.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct OptimizeResponse {
    pub entity: String,
    pub mode: WeightMode,
    pub order: u8,
    pub direction: Direction,
    pub top_rank: usize,
    pub distance: Option<f64>,
    pub weights: Vec<f64>,
    pub normalized_weights: Vec<f64>,
    pub proven: bool,
    pub stats: OptimizeStats,
}

impl OptimizeResponse {
    fn from_solution(data: &IndicatorMatrix, s: &Solution) -> Self {
        Self {
            entity: data.entity_names()[s.target].clone(),
            mode: s.mode,
            order: match s.order {
                Order::First => 1,
                Order::Second => 2,
            },
            direction: s.direction,
            top_rank: s.rank,
            distance: s.d_star,
            weights: s.weights.raw().to_vec(),
            normalized_weights: s.weights.normalized().to_vec(),
            proven: s.is_proven(),
            stats: OptimizeStats {
                nodes: s.stats.nodes,
                lp_solves: s.stats.lp_solves,
            },
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/dataset", get(get_dataset))
        .route("/api/rank", post(post_rank))
        .route("/api/optimize", post(post_optimize))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn get_dataset(State(state): State<AppState>) -> Result<Json<DatasetJson>, ApiError> {
    Ok(Json(state.dataset()?.to_json()))
}

async fn post_rank(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<Vec<RankRow>>, ApiError> {
    let data = state.dataset()?;
    let req: RankRequest = parse_body(&body)?;
    Ok(Json(rank_rows(&data, &req)?))
}

pub fn rank_rows(data: &IndicatorMatrix, req: &RankRequest) -> Result<Vec<RankRow>, ApiError> {
    if req.weights.len() != data.num_dimensions() {
        return Err(ApiError::unprocessable(format!(
            "expected {} weights, got {}",
            data.num_dimensions(),
            req.weights.len()
        )));
    }
    let mode = req
        .mode
        .unwrap_or(if req.weights.iter().all(|w| w.fract() == 0.0) {
            WeightMode::Integer
        } else {
            WeightMode::Continuous
        });
    let weights = WeightVector::from_values(mode, &req.weights)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let table =
        ranking_table(data, &weights).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let equal = ranking_table(data, &WeightVector::equal_weights(data.num_dimensions()))
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    Ok(table
        .entries
        .iter()
        .map(|e| RankRow {
            entity: e.name.clone(),
            ci: e.ci,
            rank: e.rank,
            equal_weights_rank: equal.rank_of(e.entity).expect("same entities"),
        })
        .collect())
}

fn parse_order(field: Option<OrderField>) -> Result<Order, ApiError> {
    match field {
        None => Ok(Order::Second),
        Some(OrderField::Number(1)) => Ok(Order::First),
        Some(OrderField::Number(2)) => Ok(Order::Second),
        Some(OrderField::Number(n)) => Err(ApiError::unprocessable(format!(
            "order must be 1 or 2, got {n}"
        ))),
        Some(OrderField::Text(s)) => s.parse().map_err(ApiError::unprocessable),
    }
}

async fn post_optimize(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<OptimizeResponse>, ApiError> {
    let data = state.dataset()?;
    let req: OptimizeRequest = parse_body(&body)?;
    let target = data.find_entity(&req.entity).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_entity",
            format!("no entity named `{}`", req.entity),
        )
    })?;
    let mut spec = OptimizationSpec::new(target)
        .with_mode(req.mode.unwrap_or(WeightMode::Integer))
        .with_order(parse_order(req.order)?)
        .with_direction(req.direction.unwrap_or(Direction::Best))
        .with_w_min(req.w_min.unwrap_or(0.0))
        .with_time_limit(state.solve_timeout);
    if let Some(budget) = state.node_budget {
        spec = spec.with_node_budget(budget);
    }

    let shared = Arc::clone(&data);
    let solution = tokio::task::spawn_blocking(move || optimizer::solve(&shared, &spec))
        .await
        .map_err(|e| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "solver_failed",
                e.to_string(),
            )
        })?
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;

    let response = OptimizeResponse::from_solution(&data, &solution);
    if solution.status == SolveStatus::TimeLimit {
        return Err(ApiError {
            incumbent: Some(Box::new(response)),
            ..ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "timeout",
                format!(
                    "solve exceeded {:?}; returning the best incumbent",
                    state.solve_timeout
                ),
            )
        });
    }
    Ok(Json(response))
}
