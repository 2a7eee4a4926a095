//! Planner service: persistent job queue, worker pool, HTTP API and CLI.

pub mod api;
pub mod cli;
pub mod config;
pub mod store;
pub mod worker;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;

use cuttlefish_core::ingest::{
    downsample_to_hourly, parse_tariff_csv, synthetic_agile_week, IngestError,
};
use cuttlefish_core::DynamicTariff;
use tokio::sync::oneshot;

pub use config::ServiceConfig;
use store::{JobStore, StoreError};
use worker::WorkerPool;

/// Seed of the synthetic week served when no tariff file is configured.
pub const DEFAULT_TARIFF_SEED: u64 = 2019;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("tariff: {0}")]
    Tariff(#[from] IngestError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub fn load_tariff(path: Option<&Path>) -> Result<DynamicTariff, ServiceError> {
    let series = match path {
        Some(p) => parse_tariff_csv(&std::fs::read(p)?)?,
        None => synthetic_agile_week(DEFAULT_TARIFF_SEED),
    };
    Ok(downsample_to_hourly(&series)?)
}

/// A running API server plus its worker pool.
pub struct Service {
    addr: SocketAddr,
    store: Arc<JobStore>,
    stop: Option<oneshot::Sender<()>>,
    server: Option<JoinHandle<std::io::Result<()>>>,
    pool: Option<WorkerPool>,
}

impl Service {
    /// Opens the store, starts the workers and binds the listener.
    /// With `stop_on_signal`, Ctrl-C also shuts the server down.
    pub fn start(config: &ServiceConfig, stop_on_signal: bool) -> Result<Service, ServiceError> {
        config.validate().map_err(ServiceError::Config)?;
        let store = Arc::new(match &config.store_path {
            Some(p) => JobStore::open(p)?,
            None => JobStore::in_memory(),
        });
        let tariff = load_tariff(config.tariff_path.as_deref())?;
        let listener = std::net::TcpListener::bind(config.listen_addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let pool = WorkerPool::start(
            store.clone(),
            config.worker_count,
            config.budget,
            config.lease(),
            config.reap_interval,
        );
        let app = api::router(Arc::new(api::AppState {
            store: store.clone(),
            tariff,
        }));
        let (tx, rx) = oneshot::channel::<()>();
        let server = std::thread::Builder::new().name("http".into()).spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                let shutdown = async move {
                    if stop_on_signal {
                        tokio::select! {
                            _ = rx => {}
                            _ = tokio::signal::ctrl_c() => tracing::info!("interrupt received, shutting down"),
                        }
                    } else {
                        let _ = rx.await;
                    }
                };
                axum::serve(listener, app).with_graceful_shutdown(shutdown).await
            })
        })?;
        tracing::info!(%addr, workers = config.worker_count, "service listening");
        Ok(Service {
            addr,
            store,
            stop: Some(tx),
            server: Some(server),
            pool: Some(pool),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn store(&self) -> &Arc<JobStore> {
        &self.store
    }

    /// Blocks until the HTTP server exits (for example on Ctrl-C), then stops the workers.
    pub fn wait(mut self) -> std::io::Result<()> {
        let result = self
            .server
            .take()
            .map(|h| h.join().unwrap_or(Ok(())))
            .unwrap_or(Ok(()));
        self.finish();
        result
    }

    pub fn shutdown(mut self) {
        self.finish();
    }

    fn finish(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(h) = self.server.take() {
            let _ = h.join();
        }
        if let Some(pool) = self.pool.take() {
            pool.shutdown();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.finish();
    }
}
