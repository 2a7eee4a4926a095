//! Worker threads: claim a job, solve it under the budget, record the result.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use cuttlefish_core::explain::{explanation_from, ExplanationJson};
use cuttlefish_core::planner::{astar_solve, SearchBudget, SolveOutcome};

use crate::store::{now_ms, Claim, JobStore, StoreError};

const IDLE_WAIT: Duration = Duration::from_millis(200);
const STORE_RETRIES: u32 = 5;

pub struct WorkerPool {
    stop: Arc<AtomicBool>,
    store: Arc<JobStore>,
    threads: Vec<JoinHandle<()>>,
}

impl WorkerPool {
    pub fn start(
        store: Arc<JobStore>,
        workers: usize,
        budget: SearchBudget,
        lease: Duration,
        reap_every: Duration,
    ) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let mut threads = Vec::with_capacity(workers + 1);
        for i in 0..workers {
            let (store, stop) = (store.clone(), stop.clone());
            let name = format!("worker-{i}");
            threads.push(
                thread::Builder::new()
                    .name(name.clone())
                    .spawn(move || worker_loop(&name, &store, &stop, budget, lease))
                    .expect("spawn worker thread"),
            );
        }
        let (s, st) = (store.clone(), stop.clone());
        threads.push(
            thread::Builder::new()
                .name("reaper".into())
                .spawn(move || {
                    while !st.load(Ordering::Relaxed) {
                        if let Err(e) = s.reap_expired(now_ms()) {
                            tracing::error!(error = %e, "lease reaper failed");
                        }
                        thread::park_timeout(reap_every);
                    }
                })
                .expect("spawn reaper thread"),
        );
        WorkerPool {
            stop,
            store,
            threads,
        }
    }

    /// Stops claiming new work and waits for in-flight solves to finish.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        self.store.wake_all();
        for t in &self.threads {
            t.thread().unpark();
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

fn with_retry<T>(
    what: &str,
    mut op: impl FnMut() -> Result<T, StoreError>,
) -> Result<T, StoreError> {
    let mut delay = Duration::from_millis(50);
    let mut attempt = 1;
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(e) if attempt < STORE_RETRIES => {
                tracing::warn!(error = %e, attempt, "{what} failed, retrying");
                thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs the solve for one claim. Panics are caught and reported as errors.
pub fn run_claim(
    claim: &Claim,
    budget: SearchBudget,
) -> Result<(SolveOutcome, Option<ExplanationJson>), String> {
    let result = catch_unwind(AssertUnwindSafe(|| astar_solve(&claim.problem, budget)));
    let outcome = match result {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => return Err(e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            return Err(format!("solver panicked: {msg}"));
        }
    };
    let explanation = claim.question.as_ref().map(|q| {
        ExplanationJson::from(&explanation_from(q.original_plan.clone(), outcome.clone()))
    });
    Ok((outcome, explanation))
}

fn worker_loop(
    name: &str,
    store: &JobStore,
    stop: &AtomicBool,
    budget: SearchBudget,
    lease: Duration,
) {
    while !stop.load(Ordering::Relaxed) {
        let claim = match with_retry("claim", || store.claim_wait(name, lease, IDLE_WAIT)) {
            Ok(Some(c)) => c,
            Ok(None) => continue,
            Err(e) => {
                tracing::error!(worker = name, error = %e, "store unavailable");
                thread::sleep(IDLE_WAIT);
                continue;
            }
        };
        tracing::info!(worker = name, job = %claim.job_id, "claimed");
        let recorded = match run_claim(&claim, budget) {
            Ok((outcome, explanation)) => with_retry("complete", || {
                store.complete(
                    &claim.job_id,
                    claim.token,
                    outcome.clone(),
                    explanation.clone(),
                )
            }),
            Err(reason) => {
                tracing::error!(worker = name, job = %claim.job_id, %reason, "solve failed");
                with_retry("abandon", || {
                    store.abandon(&claim.job_id, claim.token, &reason)
                })
            }
        };
        match recorded {
            Ok(true) => {}
            Ok(false) => {
                tracing::warn!(worker = name, job = %claim.job_id, "lease lost; result discarded")
            }
            // the lease will expire and the reaper will requeue the job
            Err(e) => {
                tracing::error!(worker = name, job = %claim.job_id, error = %e, "could not record result")
            }
        }
    }
}
