//! Stateless checking service. Logics are loaded once at startup; every
//! request is answered from the request body and that fixed table alone.

pub mod check;
pub mod wire;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use thiserror::Error;
use tower_http::cors::{Any, CorsLayer};

use substep_core::analysis::Diagnostic;
use substep_core::kernel::{register_logic, LogicError, LogicTable};
use substep_core::snm::RuleId;

pub use check::{load_program, SNM};
use wire::*;

pub const DEFAULT_STEP_LIMIT_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{message}")]
    Unprocessable {
        message: String,
        diagnostics: Vec<Diagnostic>,
    },
}

impl ServiceError {
    pub fn unprocessable(message: String) -> ServiceError {
        ServiceError::Unprocessable {
            message,
            diagnostics: Vec::new(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let (error, diagnostics) = match self {
            ServiceError::BadRequest(_) => ("bad-request", vec![]),
            ServiceError::NotFound(_) => ("not-found", vec![]),
            ServiceError::Unprocessable { diagnostics, .. } => ("unprocessable", diagnostics.clone()),
        };
        ErrorBody {
            schema: SCHEMA,
            error,
            message: self.to_string(),
            diagnostics,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Logic { path: PathBuf, source: LogicError },
}

/// The immutable state every handler reads.
#[derive(Clone, Debug)]
pub struct Service {
    pub logics: LogicTable,
    /// Upper bound on the step limit a request may ask for.
    pub step_limit_cap: usize,
}

impl Default for Service {
    fn default() -> Self {
        Service {
            logics: LogicTable::builtin(),
            step_limit_cap: DEFAULT_STEP_LIMIT_CAP,
        }
    }
}

impl Service {
    /// Built-in logics plus every `*.logic` document in `dir`.
    pub fn load(dir: Option<&Path>) -> Result<Service, LoadError> {
        let mut service = Service::default();
        let Some(dir) = dir else { return Ok(service) };
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| LoadError::Io { path, source }
        };
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "logic"))
            .collect();
        files.sort();
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(io(&path))?;
            let logic = register_logic(&text).map_err(|source| LoadError::Logic {
                path: path.clone(),
                source,
            })?;
            service.logics.insert(logic);
        }
        Ok(service)
    }

    pub fn list_logics(&self) -> LogicList {
        let mut logics: Vec<LogicSummary> = self
            .logics
            .iter()
            .map(|l| LogicSummary {
                name: l.name.clone(),
                version: l.version.clone(),
                kind: "kernel",
            })
            .collect();
        logics.push(LogicSummary {
            name: SNM.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            kind: "machine",
        });
        logics.sort_by(|a, b| a.name.cmp(&b.name));
        LogicList { schema: SCHEMA, logics }
    }

    /// Sorts, relations and rules of a logic, or the machine's rule catalog.
    pub fn get_logic(&self, name: &str) -> Result<serde_json::Value, ServiceError> {
        if name == SNM {
            let rules: Vec<MachineRule> = RuleId::ALL.into_iter().map(MachineRule::from).collect();
            return Ok(json!({
                "schema": SCHEMA,
                "name": SNM,
                "version": env!("CARGO_PKG_VERSION"),
                "kind": "machine",
                "rules": rules,
            }));
        }
        let logic = self
            .logics
            .get(name)
            .ok_or_else(|| ServiceError::NotFound(format!("no logic named '{name}'")))?;
        let mut v = serde_json::to_value(logic).expect("logics serialize");
        v["schema"] = json!(SCHEMA);
        v["kind"] = json!("kernel");
        Ok(v)
    }

    /// Parses a raw body and checks it.
    pub fn check_body(&self, body: &[u8]) -> Result<CheckResponse, ServiceError> {
        let req: CheckRequest =
            serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("malformed request: {e}")))?;
        self.check(&req)
    }
}

async fn list_logics(State(s): State<Arc<Service>>) -> Json<LogicList> {
    Json(s.list_logics())
}

async fn get_logic(State(s): State<Arc<Service>>, UrlPath(name): UrlPath<String>) -> Result<Json<serde_json::Value>, ServiceError> {
    s.get_logic(&name).map(Json)
}

async fn check(State(s): State<Arc<Service>>, body: Bytes) -> Result<Json<CheckResponse>, ServiceError> {
    s.check_body(&body).map(Json)
}

pub fn router(service: Service) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    Router::new()
        .route("/logics", get(list_logics))
        .route("/logics/{name}", get(get_logic))
        .route("/check", post(check))
        .layer(cors)
        .with_state(Arc::new(service))
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, service: Service) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
