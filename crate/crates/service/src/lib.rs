//! HTTP service in which a person plays the explainee against the automated
//! explainer. Sessions live in memory and, given a data directory, in an
//! append-only log that is replayed on restart.

pub mod api;
pub mod error;
pub mod scenario;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;

pub use error::ServiceError;
pub use scenario::{Scenario, ScenarioSpec};
pub use session::{Session, SessionConfig};
pub use store::Store;

#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    pub session: SessionConfig,
    pub data_dir: Option<PathBuf>,
}

pub fn router(config: ServiceConfig) -> Result<Router, ServiceError> {
    let store = Store::open(config.session, config.data_dir)?;
    Ok(api::router(Arc::new(store)))
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> Result<(), ServiceError> {
    let app = router(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, app).await?;
    Ok(())
}
