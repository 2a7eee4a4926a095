//! Persistent job store.
//!
//! Jobs live in memory behind one mutex; every state change is appended to a
//! JSON-lines journal and synced before the call returns. On open the journal
//! is replayed (last record per id wins), compacted, and any job left
//! running by a previous process is queued again.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use cuttlefish_core::explain::{ExplanationJson, RequirementAddition};
use cuttlefish_core::planner::SolveOutcome;
use cuttlefish_core::{HomeModel, Plan};
use serde::{Deserialize, Serialize};

/// A job is marked failed once this many claims have ended without a result.
pub const MAX_ATTEMPTS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Problem,
    Question,
}

/// The base plan and additions a question job compares against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionContext {
    pub base_problem_hash: String,
    pub additions: Vec<RequirementAddition>,
    pub original_plan: Plan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub worker: String,
    pub token: u64,
    pub expires_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: JobKind,
    /// The model to solve; for questions, the restricted model.
    pub problem: HomeModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionContext>,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<SolveOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<ExplanationJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lease: Option<Lease>,
    /// Enqueue order, used for queue positions.
    pub seq: u64,
    pub enqueued_at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at_ms: Option<u64>,
}

/// What a worker receives when it claims a job.
#[derive(Debug, Clone)]
pub struct Claim {
    pub job_id: String,
    pub token: u64,
    pub problem: HomeModel,
    pub question: Option<QuestionContext>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StoreStats {
    pub queued: usize,
    pub running: usize,
    pub done: usize,
    pub failed: usize,
    /// Highest number of simultaneously running jobs seen by this process.
    pub max_running: usize,
    /// Claims handed out by this process.
    pub claims: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("journal i/o: {0}")]
    Io(#[from] io::Error),
    #[error("journal line {line} is corrupt: {message}")]
    Corrupt { line: usize, message: String },
}

struct Inner {
    jobs: HashMap<String, Job>,
    journal: Option<File>,
    next_seq: u64,
    next_token: u64,
    running: usize,
    max_running: usize,
    claims: u64,
}

pub struct JobStore {
    inner: Mutex<Inner>,
    available: Condvar,
    path: Option<PathBuf>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl JobStore {
    /// A store that keeps nothing on disk.
    pub fn in_memory() -> Self {
        JobStore::from_jobs(HashMap::new(), None, None)
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut jobs: HashMap<String, Job> = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Job>(&line) {
                    Ok(job) => {
                        jobs.insert(job.id.clone(), job);
                    }
                    // a torn final write from a crash is dropped; anything else is corruption
                    Err(e) if e.is_eof() => {
                        tracing::warn!(line = i + 1, "ignoring truncated journal record")
                    }
                    Err(e) => {
                        return Err(StoreError::Corrupt {
                            line: i + 1,
                            message: e.to_string(),
                        })
                    }
                }
            }
        }
        for job in jobs.values_mut() {
            if job.status == JobStatus::Running {
                job.status = JobStatus::Queued;
                job.lease = None;
            }
        }
        compact(&path, &jobs)?;
        let journal = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(JobStore::from_jobs(jobs, Some(journal), Some(path)))
    }

    fn from_jobs(jobs: HashMap<String, Job>, journal: Option<File>, path: Option<PathBuf>) -> Self {
        let next_seq = jobs.values().map(|j| j.seq + 1).max().unwrap_or(0);
        JobStore {
            inner: Mutex::new(Inner {
                jobs,
                journal,
                next_seq,
                next_token: 1,
                running: 0,
                max_running: 0,
                claims: 0,
            }),
            available: Condvar::new(),
            path,
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // a panic while holding the lock cannot leave a half-applied change:
        // every mutation is journaled before the in-memory map is updated
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Adds a queued job unless one with the same id exists.
    /// Returns the stored job and whether it was created by this call.
    pub fn submit(
        &self,
        id: String,
        kind: JobKind,
        problem: HomeModel,
        question: Option<QuestionContext>,
    ) -> Result<(Job, bool), StoreError> {
        let mut inner = self.lock();
        if let Some(existing) = inner.jobs.get(&id) {
            return Ok((existing.clone(), false));
        }
        let job = Job {
            id: id.clone(),
            kind,
            problem,
            question,
            status: JobStatus::Queued,
            outcome: None,
            explanation: None,
            error: None,
            attempts: 0,
            lease: None,
            seq: inner.next_seq,
            enqueued_at_ms: now_ms(),
            started_at_ms: None,
            finished_at_ms: None,
        };
        inner.persist(&job)?;
        inner.next_seq += 1;
        inner.jobs.insert(id, job.clone());
        drop(inner);
        self.available.notify_one();
        Ok((job, true))
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.lock().jobs.get(id).cloned()
    }

    /// Zero-based position among queued jobs, oldest first.
    pub fn queue_position(&self, id: &str) -> Option<usize> {
        let inner = self.lock();
        let job = inner
            .jobs
            .get(id)
            .filter(|j| j.status == JobStatus::Queued)?;
        Some(
            inner
                .jobs
                .values()
                .filter(|j| j.status == JobStatus::Queued && j.seq < job.seq)
                .count(),
        )
    }

    pub fn len(&self) -> usize {
        self.lock().jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> StoreStats {
        let inner = self.lock();
        let count = |s| inner.jobs.values().filter(|j| j.status == s).count();
        StoreStats {
            queued: count(JobStatus::Queued),
            running: count(JobStatus::Running),
            done: count(JobStatus::Done),
            failed: count(JobStatus::Failed),
            max_running: inner.max_running,
            claims: inner.claims,
        }
    }

    /// Atomically moves the oldest queued job to running under a fresh lease.
    pub fn claim(&self, worker: &str, lease: Duration) -> Result<Option<Claim>, StoreError> {
        let mut inner = self.lock();
        inner.claim(worker, lease)
    }

    /// Like [`JobStore::claim`] but waits up to `wait` for work to arrive.
    pub fn claim_wait(
        &self,
        worker: &str,
        lease: Duration,
        wait: Duration,
    ) -> Result<Option<Claim>, StoreError> {
        let mut inner = self.lock();
        if let Some(c) = inner.claim(worker, lease)? {
            return Ok(Some(c));
        }
        let (mut inner, _) = self
            .available
            .wait_timeout(inner, wait)
            .unwrap_or_else(|e| e.into_inner());
        inner.claim(worker, lease)
    }

    /// Wakes every thread blocked in [`JobStore::claim_wait`].
    pub fn wake_all(&self) {
        self.available.notify_all();
    }

    /// Records a result. Only the current lease holder may complete a job;
    /// returns `false` if the lease was lost (expired and reclaimed).
    pub fn complete(
        &self,
        id: &str,
        token: u64,
        outcome: SolveOutcome,
        explanation: Option<ExplanationJson>,
    ) -> Result<bool, StoreError> {
        let mut inner = self.lock();
        let Some(job) = inner.holding(id, token) else {
            return Ok(false);
        };
        let mut job = job.clone();
        job.status = JobStatus::Done;
        job.outcome = Some(outcome);
        job.explanation = explanation;
        job.lease = None;
        job.finished_at_ms = Some(now_ms());
        inner.persist(&job)?;
        inner.running -= 1;
        inner.jobs.insert(id.to_owned(), job);
        Ok(true)
    }

    /// Gives a claimed job back after a failed attempt: queued again, or
    /// failed for good once it has used up its attempts.
    pub fn abandon(&self, id: &str, token: u64, reason: &str) -> Result<bool, StoreError> {
        let mut inner = self.lock();
        let Some(job) = inner.holding(id, token) else {
            return Ok(false);
        };
        let job = job.clone();
        inner.release(job, reason)?;
        drop(inner);
        self.available.notify_one();
        Ok(true)
    }

    /// Releases every lease that expired before `now_ms`. Returns how many.
    pub fn reap_expired(&self, now_ms: u64) -> Result<usize, StoreError> {
        let mut inner = self.lock();
        let expired: Vec<Job> = inner
            .jobs
            .values()
            .filter(|j| {
                j.status == JobStatus::Running
                    && j.lease.as_ref().is_some_and(|l| l.expires_at_ms <= now_ms)
            })
            .cloned()
            .collect();
        let n = expired.len();
        for job in expired {
            tracing::warn!(job = %job.id, attempts = job.attempts, "lease expired");
            inner.release(job, "lease expired before a result was recorded")?;
        }
        drop(inner);
        if n > 0 {
            self.available.notify_all();
        }
        Ok(n)
    }
}

impl Inner {
    fn persist(&mut self, job: &Job) -> Result<(), StoreError> {
        if let Some(f) = self.journal.as_mut() {
            let mut line = serde_json::to_vec(job).expect("jobs serialize");
            line.push(b'\n');
            f.write_all(&line)?;
            f.sync_data()?;
        }
        Ok(())
    }

    fn claim(&mut self, worker: &str, lease: Duration) -> Result<Option<Claim>, StoreError> {
        let Some(next) = self
            .jobs
            .values()
            .filter(|j| j.status == JobStatus::Queued)
            .min_by_key(|j| j.seq)
        else {
            return Ok(None);
        };
        let mut job = next.clone();
        let token = self.next_token;
        let now = now_ms();
        job.status = JobStatus::Running;
        job.attempts += 1;
        job.started_at_ms = Some(now);
        job.lease = Some(Lease {
            worker: worker.to_owned(),
            token,
            expires_at_ms: now.saturating_add(lease.as_millis() as u64),
        });
        self.persist(&job)?;
        self.next_token += 1;
        self.claims += 1;
        self.running += 1;
        self.max_running = self.max_running.max(self.running);
        let claim = Claim {
            job_id: job.id.clone(),
            token,
            problem: job.problem.clone(),
            question: job.question.clone(),
        };
        self.jobs.insert(job.id.clone(), job);
        Ok(Some(claim))
    }

    fn holding(&self, id: &str, token: u64) -> Option<&Job> {
        self.jobs.get(id).filter(|j| {
            j.status == JobStatus::Running && j.lease.as_ref().is_some_and(|l| l.token == token)
        })
    }

    fn release(&mut self, mut job: Job, reason: &str) -> Result<(), StoreError> {
        job.lease = None;
        if job.attempts >= MAX_ATTEMPTS {
            job.status = JobStatus::Failed;
            job.error = Some(format!("{reason} (after {} attempts)", job.attempts));
            job.finished_at_ms = Some(now_ms());
        } else {
            job.status = JobStatus::Queued;
            job.error = Some(reason.to_owned());
        }
        self.persist(&job)?;
        self.running -= 1;
        self.jobs.insert(job.id.clone(), job);
        Ok(())
    }
}

fn compact(path: &Path, jobs: &HashMap<String, Job>) -> Result<(), StoreError> {
    let tmp = path.with_extension("compact.tmp");
    {
        let mut f = File::create(&tmp)?;
        let mut ordered: Vec<&Job> = jobs.values().collect();
        ordered.sort_by_key(|j| j.seq);
        for job in ordered {
            let mut line = serde_json::to_vec(job).expect("jobs serialize");
            line.push(b'\n');
            f.write_all(&line)?;
        }
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cuttlefish_core::planner::{SolveStats, SolveStatus};
    use cuttlefish_core::scenarios::worked_example;

    fn outcome() -> SolveOutcome {
        SolveOutcome::failed(SolveStatus::Unsolvable, SolveStats::default())
    }

    #[test]
    fn submit_is_idempotent() {
        let s = JobStore::in_memory();
        let (a, created) = s
            .submit("x".into(), JobKind::Problem, worked_example(), None)
            .unwrap();
        assert!(created);
        let (b, created) = s
            .submit("x".into(), JobKind::Problem, worked_example(), None)
            .unwrap();
        assert!(!created);
        assert_eq!(a, b);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn claims_are_fifo_and_exclusive() {
        let s = JobStore::in_memory();
        for id in ["a", "b"] {
            s.submit(id.into(), JobKind::Problem, worked_example(), None)
                .unwrap();
        }
        assert_eq!(s.queue_position("b"), Some(1));
        let c1 = s.claim("w1", Duration::from_secs(60)).unwrap().unwrap();
        let c2 = s.claim("w2", Duration::from_secs(60)).unwrap().unwrap();
        assert_eq!((c1.job_id.as_str(), c2.job_id.as_str()), ("a", "b"));
        assert!(s.claim("w3", Duration::from_secs(60)).unwrap().is_none());
        assert!(!s.complete("a", c2.token, outcome(), None).unwrap());
        assert!(s.complete("a", c1.token, outcome(), None).unwrap());
        assert!(!s.complete("a", c1.token, outcome(), None).unwrap());
        assert_eq!(s.stats().max_running, 2);
    }

    #[test]
    fn expired_leases_requeue_then_fail() {
        let s = JobStore::in_memory();
        s.submit("a".into(), JobKind::Problem, worked_example(), None)
            .unwrap();
        let c = s.claim("w", Duration::ZERO).unwrap().unwrap();
        assert_eq!(s.reap_expired(now_ms() + 1).unwrap(), 1);
        assert_eq!(s.get("a").unwrap().status, JobStatus::Queued);
        // the stale holder can no longer complete
        assert!(!s.complete("a", c.token, outcome(), None).unwrap());
        s.claim("w", Duration::ZERO).unwrap().unwrap();
        s.reap_expired(now_ms() + 1).unwrap();
        let job = s.get("a").unwrap();
        assert_eq!(job.status, JobStatus::Failed);
        assert!(job.error.unwrap().contains("after 2 attempts"));
    }

    #[test]
    fn journal_replays_and_requeues_running() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("jobs.jsonl");
        {
            let s = JobStore::open(&path).unwrap();
            s.submit("a".into(), JobKind::Problem, worked_example(), None)
                .unwrap();
            s.submit("b".into(), JobKind::Problem, worked_example(), None)
                .unwrap();
            let c = s.claim("w", Duration::from_secs(60)).unwrap().unwrap();
            s.complete(&c.job_id, c.token, outcome(), None).unwrap();
            s.claim("w", Duration::from_secs(60)).unwrap().unwrap();
        }
        let s = JobStore::open(&path).unwrap();
        assert_eq!(s.get("a").unwrap().status, JobStatus::Done);
        assert_eq!(s.get("b").unwrap().status, JobStatus::Queued);
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 2);
        let (_, created) = s
            .submit("c".into(), JobKind::Problem, worked_example(), None)
            .unwrap();
        assert!(created);
        assert_eq!(s.get("c").unwrap().seq, 2);
    }

    #[test]
    fn torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("jobs.jsonl");
        {
            let s = JobStore::open(&path).unwrap();
            s.submit("a".into(), JobKind::Problem, worked_example(), None)
                .unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"id\":\"b\",\"kind\"").unwrap();
        drop(f);
        let s = JobStore::open(&path).unwrap();
        assert_eq!(s.len(), 1);
    }
}
