//! HTTP service and command-line driver around `lemmagraph-core`.

pub mod api;
pub mod app;
pub mod cli;
pub mod config;
pub mod error;
pub mod extract;

use std::sync::Arc;

pub use app::{App, StartupError};
pub use config::{load_config, Config};

/// Bind the configured address and serve until interrupted.
pub async fn serve(config: Config) -> Result<(), StartupError> {
    let addr = std::net::SocketAddr::new(config.server.bind, config.server.port);
    let app = Arc::new(tokio::task::spawn_blocking(move || App::open(config)).await.expect("open task")?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| StartupError::Bind { addr, source })?;
    serve_on(listener, app).await
}

/// Serve on an already bound listener.
pub async fn serve_on(listener: tokio::net::TcpListener, app: Arc<App>) -> Result<(), StartupError> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!("listening on http://{addr}");
    }
    axum::serve(listener, api::router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(StartupError::Serve)
}
