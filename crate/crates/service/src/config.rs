use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use cuttlefish_core::planner::SearchBudget;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub worker_count: usize,
    pub budget: SearchBudget,
    /// Journal file; `None` keeps jobs in memory only.
    pub store_path: Option<PathBuf>,
    pub listen_addr: SocketAddr,
    /// How long a claim stays valid; defaults to the runtime budget plus a minute.
    pub lease_timeout: Option<Duration>,
    /// Half-hourly CSV served by `GET /tariff`; a synthetic week when unset.
    pub tariff_path: Option<PathBuf>,
    pub reap_interval: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            worker_count: 12,
            budget: SearchBudget::default(),
            store_path: None,
            listen_addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            lease_timeout: None,
            tariff_path: None,
            reap_interval: Duration::from_secs(1),
        }
    }
}

impl ServiceConfig {
    pub fn lease(&self) -> Duration {
        self.lease_timeout.unwrap_or(
            self.budget
                .max_runtime
                .saturating_add(Duration::from_secs(60)),
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.worker_count == 0 {
            return Err("worker count must be at least 1".into());
        }
        if self.budget.max_runtime.is_zero() || self.budget.max_visited_states == 0 {
            return Err("search budgets must be positive".into());
        }
        Ok(())
    }
}
