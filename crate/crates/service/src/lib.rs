//! Session service over the sizing engine: HTTP commands, a WebSocket event
//! stream per session, flat run directories, and the `armsizer` CLI.

pub mod api;
pub mod cli;
pub mod events;
pub mod runs;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use armsizer::sizing::ActuatorCatalog;
use uuid::Uuid;

pub use api::router;
pub use session::{JogCommand, Session, StateSnapshot};

pub struct AppState {
    pub sessions: RwLock<HashMap<Uuid, Arc<Session>>>,
    pub runs: RwLock<HashMap<Uuid, runs::SharedRun>>,
    /// Parent of the per-run directories.
    pub data_dir: PathBuf,
    /// Catalog used when a run request does not bring its own.
    pub catalog: ActuatorCatalog,
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>, catalog: ActuatorCatalog) -> Arc<Self> {
        Arc::new(Self {
            sessions: RwLock::default(),
            runs: RwLock::default(),
            data_dir: data_dir.into(),
            catalog,
        })
    }
}

/// Bind and serve until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
