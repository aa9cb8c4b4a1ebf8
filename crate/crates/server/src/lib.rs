//! JSON-over-HTTP front end for [`actorsnote_core::Service`].

pub mod error;
pub mod hosted;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use actorsnote_core::ingest::CommandExtractor;
use actorsnote_core::llm::{Gateway, GatewayError, GatewaySettings, ProviderKind, TemplateError, TemplateSet};
use actorsnote_core::{RandomIds, Service, Store, StoreError, SystemClock};

pub use error::{ApiError, ERROR_CODES};
pub use hosted::HostedProvider;
pub use routes::router;

pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_STORE_PATH: &str = "actorsnote-store.jsonl";
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 10 * 1024 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error("opening store: {0}")]
    Store(#[from] StoreError),
}

/// Process configuration, read from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub bind_addr: SocketAddr,
    pub store_path: PathBuf,
    pub max_upload_bytes: usize,
    /// Guards operator endpoints (upload, analyze, export, first setup) when set.
    pub admin_token: Option<String>,
    /// Command that turns PDF bytes on stdin into text on stdout.
    pub extractor_cmd: Option<String>,
    pub template_dir: Option<PathBuf>,
    pub gateway: GatewaySettings,
}

impl ServerConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Reads `BIND_ADDR`, `STORE_PATH`, `MAX_UPLOAD_BYTES`, `ADMIN_TOKEN`,
    /// `EXTRACTOR_CMD`, `TEMPLATE_DIR` and the `GATEWAY_*` variables.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let nonempty = |k: &str| get(k).filter(|v| !v.trim().is_empty());
        let bind = nonempty("BIND_ADDR").unwrap_or_else(|| DEFAULT_BIND_ADDR.into());
        let bind_addr = bind.parse().map_err(|e| ConfigError::Invalid {
            key: "BIND_ADDR",
            message: format!("'{bind}': {e}"),
        })?;
        let max_upload_bytes = match nonempty("MAX_UPLOAD_BYTES") {
            None => DEFAULT_MAX_UPLOAD_BYTES,
            Some(v) => v.trim().parse().map_err(|_| ConfigError::Invalid {
                key: "MAX_UPLOAD_BYTES",
                message: format!("'{v}' is not a byte count"),
            })?,
        };
        Ok(Self {
            bind_addr,
            store_path: nonempty("STORE_PATH").unwrap_or_else(|| DEFAULT_STORE_PATH.into()).into(),
            max_upload_bytes,
            admin_token: nonempty("ADMIN_TOKEN"),
            extractor_cmd: nonempty("EXTRACTOR_CMD"),
            template_dir: nonempty("TEMPLATE_DIR").map(PathBuf::from),
            gateway: GatewaySettings::from_lookup(&get)?,
        })
    }

    pub fn provider_kind(&self) -> ProviderKind {
        self.gateway.provider_kind()
    }
}

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<Service>,
    pub admin_token: Option<String>,
    pub max_upload_bytes: usize,
}

impl AppState {
    pub fn new(service: Service) -> Self {
        Self {
            service: Arc::new(service),
            admin_token: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
        }
    }
}

pub fn gateway_for(settings: &GatewaySettings) -> Gateway {
    match (settings.provider_kind(), &settings.api_key) {
        (ProviderKind::Hosted, Some(key)) => Gateway::new(Arc::new(HostedProvider::new(&settings.base_url, key))),
        _ => Gateway::mock(),
    }
}

/// Opens the store and wires the service as configured.
pub fn build_state(cfg: &ServerConfig) -> Result<AppState, ConfigError> {
    let store = Arc::new(Store::open(&cfg.store_path)?);
    let mut service = Service::new(
        store,
        gateway_for(&cfg.gateway),
        cfg.gateway.clone(),
        Arc::new(SystemClock),
        Arc::new(RandomIds),
    );
    if let Some(dir) = &cfg.template_dir {
        service = service.with_templates(TemplateSet::load_dir(dir)?);
    }
    if let Some(extractor) = cfg.extractor_cmd.as_deref().and_then(CommandExtractor::from_command_line) {
        service = service.with_extractor(Arc::new(extractor));
    }
    Ok(AppState {
        service: Arc::new(service),
        admin_token: cfg.admin_token.clone(),
        max_upload_bytes: cfg.max_upload_bytes,
    })
}

/// Binds and serves until ctrl-c.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
