//! HTTP binding of the orchestration service.
//!
//! The publication/discovery resources follow the documented URIs
//! bit-exactly (`GET /domains`, `POST /fognodes?fromuri=`,
//! `DELETE /fognodes?fromuri=`); the remaining routes are service plumbing
//! for nodes, applications and migrations. Subscribers receive node events
//! as `POST {subscriberuri}` callbacks with a JSON body.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use fogpaas::appgraph::parse_application_descriptor;
use fogpaas::infra::{
    InfraError, LinkRecord, NodeEvent, NodeRecord, NotificationTransport, Repository,
};
use fogpaas::migration::{MigrationReason, MigrationRequest};
use fogpaas::nodesim::{SimConfig, SimWorld};
use fogpaas::orchestrator::{
    Orchestrator, OrchestratorConfig, OrchestratorError, PlacementDirective,
};

/// Every documented (method, path) pair served by [`router`]. Paths with
/// `{..}` placeholders take an id; the fognodes routes take `?fromuri=`.
pub const DOCUMENTED_ROUTES: &[(&str, &str)] = &[
    ("GET", "/domains"),
    ("POST", "/fognodes"),
    ("DELETE", "/fognodes"),
    ("POST", "/nodes"),
    ("DELETE", "/nodes/{id}"),
    ("GET", "/infrastructure"),
    ("POST", "/applications"),
    ("GET", "/applications/{id}"),
    ("DELETE", "/applications/{id}"),
    ("POST", "/applications/{id}/migrations"),
    ("GET", "/migrations/{id}"),
];

pub struct AppState {
    pub orchestrator: Arc<Orchestrator>,
}

/// Build the repository (optionally journal-backed), the simulated world
/// and the orchestrator.
pub fn build_state(
    sim_config: SimConfig,
    journal: Option<PathBuf>,
) -> anyhow::Result<Arc<AppState>> {
    let repo = Arc::new(match journal {
        Some(path) => Repository::open(path)?,
        None => Repository::new(),
    });
    let mut world = SimWorld::new(sim_config);
    world.sync_infrastructure(&repo.snapshot());
    let orchestrator = Arc::new(Orchestrator::new(
        repo,
        world,
        OrchestratorConfig::default(),
    ));
    Ok(Arc::new(AppState { orchestrator }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/domains", get(get_domains))
        .route("/fognodes", post(subscribe).delete(unsubscribe))
        .route("/nodes", post(publish_node))
        .route("/nodes/{id}", delete(remove_node))
        .route("/infrastructure", get(get_infrastructure))
        .route("/applications", post(post_application))
        .route(
            "/applications/{id}",
            get(get_application).delete(delete_application),
        )
        .route("/applications/{id}/migrations", post(post_migration))
        .route("/migrations/{id}", get(get_migration))
        .with_state(state)
}

/// Push queued node events to subscriber URIs in the background.
pub fn spawn_notification_pump(state: Arc<AppState>, period: Duration) {
    tokio::spawn(async move {
        let client = reqwest::Client::new();
        loop {
            let orchestrator = Arc::clone(&state.orchestrator);
            // collect and deliver without holding repository locks across awaits
            let pending: Vec<(String, NodeEvent)> = {
                struct Collect<'a>(&'a parking_lot::Mutex<Vec<(String, NodeEvent)>>);
                impl NotificationTransport for Collect<'_> {
                    fn deliver(&self, uri: &str, event: &NodeEvent) -> Result<(), String> {
                        self.0.lock().push((uri.to_string(), event.clone()));
                        Ok(())
                    }
                }
                let sink = parking_lot::Mutex::new(Vec::new());
                orchestrator
                    .repository()
                    .pump_notifications(&Collect(&sink));
                sink.into_inner()
            };
            for (uri, event) in pending {
                // at-least-once: a failed callback is dropped here but the
                // subscriber can re-sync via GET /infrastructure
                let _ = client.post(&uri).json(&event).send().await;
            }
            tokio::time::sleep(period).await;
        }
    });
}

type ApiError = (StatusCode, Json<serde_json::Value>);

fn orch_error(e: OrchestratorError) -> ApiError {
    let status = match &e {
        OrchestratorError::InvalidDescriptor(_) => StatusCode::BAD_REQUEST,
        OrchestratorError::PlacementFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
        OrchestratorError::UnknownApplication(_)
        | OrchestratorError::UnknownMigration(_)
        | OrchestratorError::MigrationRejected(_) => StatusCode::NOT_FOUND,
        OrchestratorError::NotRunning { .. } => StatusCode::CONFLICT,
        OrchestratorError::MigrationFailed { .. } => StatusCode::CONFLICT,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    let name = match &e {
        OrchestratorError::InvalidDescriptor(_) => "InvalidDescriptor",
        OrchestratorError::PlacementFailed(_) => "PlacementFailed",
        OrchestratorError::DeploymentFailed(_) => "DeploymentFailed",
        OrchestratorError::ChainingFailed(_) => "ChainingFailed",
        OrchestratorError::UnknownApplication(_) => "UnknownApplication",
        OrchestratorError::UnknownMigration(_) => "UnknownMigration",
        OrchestratorError::NotRunning { .. } => "NotRunning",
        OrchestratorError::MigrationFailed { .. } => "MigrationFailed",
        OrchestratorError::MigrationRejected(_) => "MigrationRejected",
        OrchestratorError::NonTerminal => "NonTerminal",
    };
    (
        status,
        Json(json!({ "error": name, "detail": e.to_string() })),
    )
}

fn infra_error(e: InfraError) -> ApiError {
    let status = match &e {
        InfraError::DuplicateNode(_) | InfraError::DuplicateSubscription(_) => StatusCode::CONFLICT,
        InfraError::UnknownNode(_) | InfraError::UnknownSubscription(_) => StatusCode::NOT_FOUND,
        InfraError::DanglingLink(..)
        | InfraError::InvalidNode { .. }
        | InfraError::InvalidLink { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        InfraError::Journal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, Json(json!({ "error": e.to_string() })))
}

async fn get_domains(State(state): State<Arc<AppState>>) -> Response {
    Json(state.orchestrator.repository().list_domains()).into_response()
}

fn from_uri(params: &BTreeMap<String, String>) -> Result<&str, ApiError> {
    params.get("fromuri").map(String::as_str).ok_or((
        StatusCode::BAD_REQUEST,
        Json(json!({ "error": "missing required query parameter fromuri" })),
    ))
}

async fn subscribe(
    State(state): State<Arc<AppState>>,
    Query(params): Query<BTreeMap<String, String>>,
) -> Response {
    match from_uri(&params) {
        Ok(uri) => match state.orchestrator.repository().subscribe(uri) {
            Ok(sub) => (StatusCode::CREATED, Json(json!(sub))).into_response(),
            Err(e) => infra_error(e).into_response(),
        },
        Err(e) => e.into_response(),
    }
}

async fn unsubscribe(
    State(state): State<Arc<AppState>>,
    Query(params): Query<BTreeMap<String, String>>,
) -> Response {
    match from_uri(&params) {
        Ok(uri) => match state.orchestrator.repository().unsubscribe(uri) {
            Ok(()) => StatusCode::NO_CONTENT.into_response(),
            Err(e) => infra_error(e).into_response(),
        },
        Err(e) => e.into_response(),
    }
}

#[derive(Debug, Deserialize)]
struct PublishBody {
    node: NodeRecord,
    #[serde(default)]
    links: Vec<LinkRecord>,
}

async fn publish_node(
    State(state): State<Arc<AppState>>,
    Json(body): Json<PublishBody>,
) -> Response {
    let node_id = body.node.id.clone();
    match state
        .orchestrator
        .repository()
        .publish_node(body.node, body.links)
    {
        Ok(()) => {
            // the simulator learns of new nodes with the next discovery
            // snapshot; sync eagerly so injections can target them at once
            let snapshot = state.orchestrator.repository().snapshot();
            state.orchestrator.world().sync_infrastructure(&snapshot);
            (StatusCode::CREATED, Json(json!({ "id": node_id }))).into_response()
        }
        Err(e) => infra_error(e).into_response(),
    }
}

async fn remove_node(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.orchestrator.repository().remove_node(&id) {
        Ok(()) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => infra_error(e).into_response(),
    }
}

async fn get_infrastructure(State(state): State<Arc<AppState>>) -> Response {
    Json(state.orchestrator.repository().snapshot()).into_response()
}

async fn post_application(State(state): State<Arc<AppState>>, body: String) -> Response {
    let descriptor = match parse_application_descriptor(&body) {
        Ok(d) => d,
        Err(e) => {
            return (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": "InvalidDescriptor", "detail": e.to_string() })),
            )
                .into_response()
        }
    };
    match state
        .orchestrator
        .handle_deploy(descriptor, PlacementDirective::Auto)
    {
        Ok(record) => (
            StatusCode::ACCEPTED,
            Json(json!({ "id": record.id, "status": record.status })),
        )
            .into_response(),
        Err(e) => orch_error(e).into_response(),
    }
}

async fn get_application(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.orchestrator.application_status(&id) {
        Ok(record) => Json(record).into_response(),
        Err(e) => orch_error(e).into_response(),
    }
}

async fn delete_application(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Response {
    match state.orchestrator.teardown(&id) {
        Ok(_) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => orch_error(e).into_response(),
    }
}

#[derive(Debug, Deserialize)]
struct MigrateBody {
    component: String,
    #[serde(default = "manual")]
    reason: MigrationReason,
    #[serde(default)]
    hint: Option<String>,
}

fn manual() -> MigrationReason {
    MigrationReason::Manual
}

async fn post_migration(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<MigrateBody>,
) -> Response {
    let request = MigrationRequest {
        app: id,
        component: body.component,
        reason: body.reason,
        hint: body.hint,
    };
    match state.orchestrator.handle_migrate(request) {
        Ok(record) => (
            StatusCode::ACCEPTED,
            Json(json!({ "id": record.id, "status": record.status })),
        )
            .into_response(),
        Err(OrchestratorError::MigrationFailed { id, reason }) => (
            StatusCode::CONFLICT,
            Json(json!({ "error": "MigrationFailed", "id": id, "detail": reason })),
        )
            .into_response(),
        Err(e) => orch_error(e).into_response(),
    }
}

async fn get_migration(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.orchestrator.migration_status(&id) {
        Ok(record) => Json(record).into_response(),
        Err(e) => orch_error(e).into_response(),
    }
}
