use std::collections::HashMap;
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex, RwLock};

use mdp_core::coverage::{certify_cover, CoverStatus, CoverageVerdict};
use mdp_core::geom::{Domain, Point2};
use mdp_core::io::DomainFile;
use mdp_core::optimizer::{ConfigState, OptimizerParams};
use mdp_core::spanning::{kruskal_points, MstResult};
use mdp_core::Result;

/// Immutable view of a session at one revision.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub id: String,
    pub revision: u64,
    pub name: Option<String>,
    pub domain: Arc<Domain>,
    pub s: f64,
    pub centers: Vec<Point2>,
    /// `None` while there are no centers.
    pub mst: Option<MstResult>,
    pub verdict: CoverageVerdict,
    /// True once the verdict has been recomputed at the full tolerance.
    pub refined: bool,
}

/// Interactive tolerance used for synchronous recomputation.
pub fn interactive_tolerance(d: &Domain) -> f64 {
    1e-4 * d.diameter()
}

pub fn full_tolerance(d: &Domain) -> f64 {
    mdp_core::coverage::default_tolerance(d)
}

/// MST and verdict for a configuration. With no centers nothing is covered
/// and the first boundary vertex serves as witness.
pub fn evaluate(
    d: &Domain,
    centers: &[Point2],
    s: f64,
    tol: f64,
) -> Result<(Option<MstResult>, CoverageVerdict)> {
    if centers.is_empty() {
        let verdict = CoverageVerdict {
            status: CoverStatus::Uncovered,
            witness: Some(d.boundary()[0]),
            margin: f64::INFINITY,
            tolerance: tol,
            cells: 0,
        };
        return Ok((None, verdict));
    }
    let verdict = certify_cover(d, centers, s, tol)?;
    Ok((Some(kruskal_points(centers)), verdict))
}

pub struct SessionEntry {
    /// Held for the whole of a mutation; tokio's mutex is FIFO-fair, so
    /// mutations apply in arrival order.
    pub writer: tokio::sync::Mutex<()>,
    snap: RwLock<Arc<Snapshot>>,
}

impl SessionEntry {
    pub fn new(snap: Snapshot) -> Self {
        SessionEntry {
            writer: tokio::sync::Mutex::new(()),
            snap: RwLock::new(Arc::new(snap)),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snap.read().expect("snapshot lock").clone()
    }

    pub fn publish(&self, snap: Snapshot) {
        *self.snap.write().expect("snapshot lock") = Arc::new(snap);
    }

    /// Replaces the verdict only if the session is still at `revision`.
    pub fn refine(&self, revision: u64, verdict: CoverageVerdict) {
        let mut guard = self.snap.write().expect("snapshot lock");
        if guard.revision == revision {
            let mut next = (**guard).clone();
            next.verdict = verdict;
            next.refined = true;
            *guard = Arc::new(next);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
    Cancelled,
    Accepted,
}

#[derive(Debug)]
pub struct JobProgress {
    pub status: JobStatus,
    pub per_restart: Vec<usize>,
    /// Best objective seen so far; never increases.
    pub best: f64,
    pub result: Option<ConfigState>,
    pub error: Option<String>,
}

pub struct Job {
    pub id: String,
    pub session_id: String,
    pub base_revision: u64,
    pub params: OptimizerParams,
    pub cancel: AtomicBool,
    pub progress: Mutex<JobProgress>,
}

impl Job {
    pub fn new(
        id: String,
        session_id: String,
        base_revision: u64,
        params: OptimizerParams,
    ) -> Self {
        let restarts = params.restarts;
        Job {
            id,
            session_id,
            base_revision,
            params,
            cancel: AtomicBool::new(false),
            progress: Mutex::new(JobProgress {
                status: JobStatus::Running,
                per_restart: vec![0; restarts],
                best: f64::INFINITY,
                result: None,
                error: None,
            }),
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.params.iterations * self.params.restarts
    }
}

#[derive(Default)]
pub struct Registry {
    pub sessions: RwLock<HashMap<String, Arc<SessionEntry>>>,
    pub jobs: RwLock<HashMap<String, Arc<Job>>>,
}

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub default_domain: Option<Arc<DomainFile>>,
}

impl AppState {
    pub fn new(default_domain: Option<DomainFile>) -> Self {
        AppState {
            registry: Arc::new(Registry::default()),
            default_domain: default_domain.map(Arc::new),
        }
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionEntry>> {
        self.registry
            .sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
    }

    pub fn insert_session(&self, entry: Arc<SessionEntry>) {
        let id = entry.snapshot().id.clone();
        self.registry
            .sessions
            .write()
            .expect("registry lock")
            .insert(id, entry);
    }

    pub fn job(&self, id: &str) -> Option<Arc<Job>> {
        self.registry
            .jobs
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
    }

    pub fn insert_job(&self, job: Arc<Job>) {
        self.registry
            .jobs
            .write()
            .expect("registry lock")
            .insert(job.id.clone(), job);
    }

    pub fn session_count(&self) -> usize {
        self.registry.sessions.read().expect("registry lock").len()
    }
}
