//! HTTP interface over the selection pipeline and the federation layer.
//!
//! | Route | Purpose |
//! |---|---|
//! | `POST /rank` | full selection run ([`rank_for_repositories`]) |
//! | `POST /normalize` | normalization only ([`normalize_data`]) |
//! | `GET /repositories/services?endpoint=&domain=[&kind=]` | one repository's services |
//! | `GET /algorithms` | normalizer and ranker catalog |
//!
//! Errors are JSON [`ApiError`] bodies. Response bodies are rendered with
//! [`crate::render_json`], so a `/rank` body is byte-identical to
//! `qos-select rank --json` on the same inputs.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};

use crate::federation::{FederationError, FetchError, RepositoryOutcome, RepositoryProxy};
use crate::model::{Polarity, QoSMatrix, RepositoryDescriptor, RepositoryKind, RequirementVector};
use crate::normalize::{normalize_data, NormalizedMatrix, NormalizedRequirements, NormalizerId};
use crate::pipeline::{rank_for_repositories, SelectionError, SelectionRequest};
use crate::rank::RankerId;

/// Environment variable holding the bind address of `qos-select serve`.
pub const ADDR_ENV: &str = "QOS_SELECT_ADDR";
/// Environment variable pointing at a JSON list of pre-registered repositories.
pub const REPOSITORIES_ENV: &str = "QOS_SELECT_REPOSITORIES";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiErrorCode {
    InvalidRequest,
    InvalidData,
    UnknownEndpoint,
    RepositoryUnavailable,
    NoSourcesAvailable,
    Internal,
}

impl ApiErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            Self::InvalidRequest => StatusCode::BAD_REQUEST,
            Self::InvalidData => StatusCode::UNPROCESSABLE_ENTITY,
            Self::UnknownEndpoint => StatusCode::NOT_FOUND,
            Self::RepositoryUnavailable | Self::NoSourcesAvailable => StatusCode::BAD_GATEWAY,
            Self::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApiError {
    pub code: ApiErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_repository_details: Option<Vec<RepositoryOutcome>>,
}

impl ApiError {
    pub fn new(code: ApiErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            per_repository_details: None,
        }
    }
}

impl From<SelectionError> for ApiError {
    fn from(e: SelectionError) -> Self {
        match e {
            SelectionError::InvalidRequest(m) => Self::new(ApiErrorCode::InvalidRequest, m),
            SelectionError::Federation(FederationError::NoRepositories) => {
                Self::new(ApiErrorCode::InvalidRequest, "repository list is empty")
            }
            SelectionError::Federation(FederationError::NoSourcesAvailable { failures }) => Self {
                code: ApiErrorCode::NoSourcesAvailable,
                message: "no QoS sources available".into(),
                per_repository_details: Some(failures),
            },
            SelectionError::Normalize(e) => Self::new(ApiErrorCode::InvalidData, e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.code.status(), &self)
    }
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        crate::render_json(body),
    )
        .into_response()
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(ApiErrorCode::InvalidRequest, e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmInfo {
    pub id: u8,
    pub name: String,
    pub formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Catalog {
    pub normalizers: Vec<AlgorithmInfo>,
    pub rankers: Vec<AlgorithmInfo>,
}

pub fn catalog() -> Catalog {
    Catalog {
        normalizers: NormalizerId::ALL
            .iter()
            .map(|n| AlgorithmInfo {
                id: n.id(),
                name: n.name().into(),
                formula: n.formula().into(),
                polarity: None,
            })
            .collect(),
        rankers: RankerId::ALL
            .iter()
            .map(|r| AlgorithmInfo {
                id: r.id(),
                name: r.name().into(),
                formula: r.formula().into(),
                polarity: Some(r.polarity()),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizeRequest {
    pub matrix: QoSMatrix,
    pub requirements: RequirementVector,
    pub normalizer: NormalizerId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizeResponse {
    pub matrix: NormalizedMatrix,
    pub requirements: NormalizedRequirements,
}

#[derive(Clone)]
pub struct ApiState {
    repositories: Arc<Vec<RepositoryDescriptor>>,
    proxy: Arc<dyn RepositoryProxy>,
}

impl ApiState {
    /// `repositories` are the pre-registered ones, looked up by endpoint in
    /// `GET /repositories/services`.
    pub fn new(repositories: Vec<RepositoryDescriptor>, proxy: Arc<dyn RepositoryProxy>) -> Self {
        Self {
            repositories: Arc::new(repositories),
            proxy,
        }
    }
}

async fn rank(State(state): State<ApiState>, body: Bytes) -> Result<Response, ApiError> {
    let request: SelectionRequest = parse_body(&body)?;
    let proxy = Arc::clone(&state.proxy);
    let result = tokio::task::spawn_blocking(move || rank_for_repositories(&request, &*proxy))
        .await
        .map_err(|e| ApiError::new(ApiErrorCode::Internal, e.to_string()))??;
    Ok(json_response(StatusCode::OK, &result))
}

async fn normalize(body: Bytes) -> Result<Response, ApiError> {
    let request: NormalizeRequest = parse_body(&body)?;
    if let Some(v) = request.matrix.validate().first() {
        return Err(ApiError::new(ApiErrorCode::InvalidData, v.to_string()));
    }
    let (matrix, requirements) =
        normalize_data(&request.matrix, &request.requirements, request.normalizer)
            .map_err(|e| ApiError::new(ApiErrorCode::InvalidData, e.to_string()))?;
    Ok(json_response(
        StatusCode::OK,
        &NormalizeResponse {
            matrix,
            requirements,
        },
    ))
}

#[derive(Debug, Deserialize)]
struct RepositoryQuery {
    endpoint: String,
    domain: String,
    kind: Option<RepositoryKind>,
}

async fn repository_services(
    State(state): State<ApiState>,
    Query(query): Query<RepositoryQuery>,
) -> Result<Response, ApiError> {
    let registered = state
        .repositories
        .iter()
        .find(|r| r.endpoint == query.endpoint);
    let repository = match (registered, query.kind) {
        (Some(r), _) => r.clone(),
        (None, Some(kind)) => {
            RepositoryDescriptor::new(query.endpoint.clone(), query.endpoint.clone(), kind)
        }
        (None, None) => {
            return Err(ApiError::new(
                ApiErrorCode::UnknownEndpoint,
                format!("endpoint `{}` is not registered", query.endpoint),
            ))
        }
    };
    let proxy = Arc::clone(&state.proxy);
    let domain = query.domain;
    let records =
        tokio::task::spawn_blocking(move || proxy.services_in_domain(&repository, &domain))
            .await
            .map_err(|e| ApiError::new(ApiErrorCode::Internal, e.to_string()))?
            .map_err(|e: FetchError| {
                ApiError::new(ApiErrorCode::RepositoryUnavailable, e.to_string())
            })?;
    Ok(json_response(StatusCode::OK, &records))
}

async fn algorithms() -> Response {
    json_response(StatusCode::OK, &catalog())
}

pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/rank", post(rank))
        .route("/normalize", post(normalize))
        .route("/repositories/services", get(repository_services))
        .route("/algorithms", get(algorithms))
        .with_state(state)
}

/// Reads a JSON list of repository descriptors.
pub fn load_repositories(path: &std::path::Path) -> anyhow::Result<Vec<RepositoryDescriptor>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
