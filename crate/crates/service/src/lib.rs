//! HTTP+JSON session API: load a domain, place MST vertices, vary `s`, read
//! the certified coverage verdict, run the optimizer in the background and
//! export the result.

mod error;
mod state;

use std::sync::atomic::Ordering;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mdp_core::coverage::CoverStatus;
use mdp_core::geom::{Domain, Point2};
use mdp_core::io::{
    detect_format, load_domain_file, load_scenario, render_svg, save_scenario, DomainFile,
    DomainSource, Overlay, ScenarioFile, SvgOptions, DOMAIN_FORMAT, SCENARIO_FORMAT,
};
use mdp_core::optimizer::{local_search_with, OptimizerParams, Progress, SearchControl};
use mdp_core::spanning::find_duplicate;
use mdp_core::Error as CoreError;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

pub use error::ApiError;
use state::{evaluate, full_tolerance, interactive_tolerance, Job, SessionEntry};
pub use state::{AppState, JobStatus, Snapshot};

pub const SESSION_FORMAT: &str = "mdp-session";
pub const JOB_FORMAT: &str = "mdp-job";
pub const API_VERSION: u32 = 1;

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/domain", get(default_domain))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/ops", post(mutate))
        .route("/sessions/{id}/optimize", post(optimize))
        .route("/sessions/{id}/export", get(export))
        .route("/jobs/{id}", get(poll_job))
        .route("/jobs/{id}/accept", post(accept_job))
        .route("/jobs/{id}/cancel", post(cancel_job))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn domain_json(name: &Option<String>, d: &Domain) -> Value {
    json!({ "name": name, "boundary": d.boundary(), "holes": d.holes() })
}

pub fn snapshot_json(s: &Snapshot) -> Value {
    let (length, edges) = match &s.mst {
        Some(m) => (m.length, m.tree.edges().to_vec()),
        None => (0.0, Vec::new()),
    };
    json!({
        "format": SESSION_FORMAT,
        "version": API_VERSION,
        "id": s.id,
        "revision": s.revision,
        "domain": domain_json(&s.name, &s.domain),
        "s": s.s,
        "centers": s.centers,
        "mst": { "length": length, "edges": edges },
        "verdict": {
            "status": s.verdict.status,
            "witness": s.verdict.witness,
            "margin": finite_or_null(s.verdict.margin),
            "tolerance": s.verdict.tolerance,
            "refined": s.refined,
        },
    })
}

fn parse_body<T: serde::de::DeserializeOwned>(text: &str) -> ApiResult<T> {
    serde_json::from_str(text).map_err(|e| {
        ApiError::bad_request("parse_error", e.to_string())
            .with_detail(json!({ "line": e.line(), "column": e.column() }))
    })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))
}

/// Builds the next snapshot at the interactive tolerance and schedules the
/// full-tolerance pass.
async fn recompute(
    entry: &Arc<SessionEntry>,
    prev: &Snapshot,
    centers: Vec<Point2>,
    s: f64,
) -> ApiResult<Snapshot> {
    let domain = prev.domain.clone();
    let pts = centers.clone();
    let (mst, verdict) =
        blocking(move || evaluate(&domain, &pts, s, interactive_tolerance(&domain))).await??;
    let snap = Snapshot {
        revision: prev.revision + 1,
        centers,
        s,
        mst,
        verdict,
        refined: false,
        ..prev.clone()
    };
    publish(entry, snap.clone());
    Ok(snap)
}

fn publish(entry: &Arc<SessionEntry>, snap: Snapshot) {
    // Decisive verdicts are final; only Unknown gets a finer pass.
    let refine = snap.refined || snap.verdict.status != CoverStatus::Unknown;
    let revision = snap.revision;
    let domain = snap.domain.clone();
    let centers = snap.centers.clone();
    let s = snap.s;
    entry.publish(Snapshot {
        refined: refine,
        ..snap
    });
    if refine {
        return;
    }
    let entry = entry.clone();
    tokio::spawn(async move {
        let tol = full_tolerance(&domain);
        let res = tokio::task::spawn_blocking(move || evaluate(&domain, &centers, s, tol)).await;
        if let Ok(Ok((_, verdict))) = res {
            entry.refine(revision, verdict);
        }
    });
}

async fn health(State(st): State<AppState>) -> Json<Value> {
    Json(json!({ "status": "ok", "version": API_VERSION, "sessions": st.session_count() }))
}

async fn default_domain(State(st): State<AppState>) -> ApiResult<Response> {
    let f = st
        .default_domain
        .as_ref()
        .ok_or_else(|| ApiError::not_found("domain", "default"))?;
    Ok(json_text(StatusCode::OK, mdp_core::io::save_domain(f)))
}

fn json_text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

#[derive(Debug, Deserialize)]
struct CreateQuery {
    s: Option<f64>,
}

/// Body: a domain document, a scenario with an inline domain, or nothing to
/// use the server's default domain. `?s=` overrides the radius.
async fn create_session(
    State(st): State<AppState>,
    Query(q): Query<CreateQuery>,
    body: String,
) -> ApiResult<Response> {
    let (file, s, centers) = if body.trim().is_empty() {
        let f = st.default_domain.as_deref().cloned().ok_or_else(|| {
            ApiError::bad_request("invalid_input", "no domain given and no default domain")
        })?;
        (f, None, Vec::new())
    } else {
        match detect_format(&body)?.as_str() {
            DOMAIN_FORMAT => (load_domain_file(&body)?, None, Vec::new()),
            SCENARIO_FORMAT => {
                let sc = load_scenario(&body)?;
                let DomainSource::Inline(f) = sc.domain else {
                    return Err(ApiError::bad_request(
                        "invalid_input",
                        "scenario must inline its domain",
                    ));
                };
                (f, Some(sc.s), sc.centers)
            }
            other => {
                return Err(ApiError::bad_request(
                    "invalid_input",
                    format!("expected {DOMAIN_FORMAT} or {SCENARIO_FORMAT}, got {other}"),
                ))
            }
        }
    };
    let s = q.s.or(s).unwrap_or(0.05 * file.domain.diameter());
    check_radius(s)?;
    check_centers(&centers)?;
    let domain = Arc::new(file.domain);
    let d2 = domain.clone();
    let pts = centers.clone();
    let (mst, verdict) =
        blocking(move || evaluate(&d2, &pts, s, interactive_tolerance(&d2))).await??;
    let snap = Snapshot {
        id: uuid::Uuid::new_v4().to_string(),
        revision: 0,
        name: file.name,
        domain,
        s,
        centers,
        mst,
        verdict,
        refined: false,
    };
    let entry = Arc::new(SessionEntry::new(snap.clone()));
    publish(&entry, snap);
    let body = snapshot_json(&entry.snapshot());
    st.insert_session(entry);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

fn session(st: &AppState, id: &str) -> ApiResult<Arc<SessionEntry>> {
    st.session(id)
        .ok_or_else(|| ApiError::not_found("session", id))
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    Ok(Json(snapshot_json(&session(&st, &id)?.snapshot())))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
enum Op {
    AddVertex {
        p: Point2,
        revision: Option<u64>,
    },
    RemoveVertex {
        index: usize,
        revision: Option<u64>,
    },
    MoveVertex {
        index: usize,
        p: Point2,
        revision: Option<u64>,
    },
    SetRadius {
        s: f64,
        revision: Option<u64>,
    },
}

impl Op {
    fn revision(&self) -> Option<u64> {
        match *self {
            Op::AddVertex { revision, .. }
            | Op::RemoveVertex { revision, .. }
            | Op::MoveVertex { revision, .. }
            | Op::SetRadius { revision, .. } => revision,
        }
    }
}

fn check_radius(s: f64) -> ApiResult<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(ApiError::bad_request(
            "invalid_op",
            "s must be positive and finite",
        ))
    }
}

fn check_point(p: Point2) -> ApiResult<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(ApiError::bad_request(
            "invalid_op",
            "vertex coordinates must be finite",
        ))
    }
}

fn check_centers(c: &[Point2]) -> ApiResult<()> {
    for &p in c {
        check_point(p)?;
    }
    match find_duplicate(c) {
        Some((i, j)) => Err(CoreError::DegeneratePointSet(i, j).into()),
        None => Ok(()),
    }
}

fn check_index(i: usize, len: usize) -> ApiResult<()> {
    if i < len {
        Ok(())
    } else {
        Err(ApiError::bad_request(
            "invalid_op",
            format!("vertex index {i} out of range for {len} vertices"),
        )
        .with_detail(json!({ "index": i, "len": len })))
    }
}

fn stale(cur: &Snapshot, given: u64) -> ApiError {
    ApiError::conflict(
        format!("revision {given} is stale; session is at {}", cur.revision),
        snapshot_json(cur),
    )
}

/// Applies one mutation. Mutations on a session run one at a time in
/// arrival order; each bumps the revision.
async fn mutate(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<Value>> {
    let entry = session(&st, &id)?;
    let op: Op = parse_body(&body)?;
    let _writer = entry.writer.lock().await;
    let cur = entry.snapshot();
    if let Some(r) = op.revision() {
        if r != cur.revision {
            return Err(stale(&cur, r));
        }
    }
    let mut centers = cur.centers.clone();
    let mut s = cur.s;
    match op {
        Op::AddVertex { p, .. } => {
            check_point(p)?;
            centers.push(p);
        }
        Op::RemoveVertex { index, .. } => {
            check_index(index, centers.len())?;
            centers.remove(index);
        }
        Op::MoveVertex { index, p, .. } => {
            check_index(index, centers.len())?;
            check_point(p)?;
            centers[index] = p;
        }
        Op::SetRadius { s: r, .. } => {
            check_radius(r)?;
            s = r;
        }
    }
    check_centers(&centers)?;
    let snap = recompute(&entry, &cur, centers, s).await?;
    Ok(Json(snapshot_json(&snap)))
}

fn job_json(job: &Job) -> Value {
    let g = job.progress.lock().expect("job lock");
    let done: usize = g.per_restart.iter().sum();
    let result = g.result.as_ref().map(|r| {
        json!({
            "centers": r.centers.points(),
            "objective": finite_or_null(r.objective),
            "mst_length": r.mst.length,
            "status": r.verdict.status,
        })
    });
    json!({
        "format": JOB_FORMAT,
        "version": API_VERSION,
        "id": job.id,
        "session_id": job.session_id,
        "base_revision": job.base_revision,
        "status": g.status,
        "iterations_done": done,
        "iterations_total": job.total_iterations(),
        "best_objective": finite_or_null(g.best),
        "result": result,
        "error": g.error,
    })
}

/// Body: optimizer parameters (all optional). Starts a background search
/// from the session's domain and radius; returns the job document.
async fn optimize(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Response> {
    let entry = session(&st, &id)?;
    let params: OptimizerParams = if body.trim().is_empty() {
        OptimizerParams::default()
    } else {
        parse_body(&body)?
    };
    params.validate()?;
    let snap = entry.snapshot();
    let job = Arc::new(Job::new(
        uuid::Uuid::new_v4().to_string(),
        snap.id.clone(),
        snap.revision,
        params,
    ));
    st.insert_job(job.clone());
    let worker = job.clone();
    let domain = snap.domain.clone();
    let s = snap.s;
    tokio::task::spawn_blocking(move || run_job(&worker, &domain, s));
    Ok((StatusCode::ACCEPTED, Json(job_json(&job))).into_response())
}

fn run_job(job: &Job, domain: &Domain, s: f64) {
    let progress = |p: Progress| {
        let mut g = job.progress.lock().expect("job lock");
        g.per_restart[p.restart] = g.per_restart[p.restart].max(p.iteration);
        g.best = g.best.min(p.best);
    };
    let ctl = SearchControl {
        cancel: Some(&job.cancel),
        progress: Some(&progress),
    };
    let res = local_search_with(domain, s, &job.params, &ctl);
    let mut g = job.progress.lock().expect("job lock");
    match res {
        Ok(state) => {
            g.best = g.best.min(state.objective);
            g.per_restart.fill(job.params.iterations);
            g.result = Some(state);
            g.status = JobStatus::Done;
        }
        Err(CoreError::Cancelled) => g.status = JobStatus::Cancelled,
        Err(e) => {
            g.error = Some(e.to_string());
            g.status = JobStatus::Failed;
        }
    }
}

fn job(st: &AppState, id: &str) -> ApiResult<Arc<Job>> {
    st.job(id).ok_or_else(|| ApiError::not_found("job", id))
}

async fn poll_job(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let job = job(&st, &id)?;
    Ok(Json(job_json(&job)))
}

async fn cancel_job(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let job = job(&st, &id)?;
    let status = job.progress.lock().expect("job lock").status;
    if status != JobStatus::Running {
        return Err(ApiError::conflict("job is not running", job_json(&job)));
    }
    job.cancel.store(true, Ordering::Relaxed);
    Ok((StatusCode::ACCEPTED, Json(job_json(&job))).into_response())
}

/// Swaps the job's centers into its session at a new revision. Refused when
/// the session moved on since the job started.
async fn accept_job(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let job = job(&st, &id)?;
    let entry = session(&st, &job.session_id)?;
    let _writer = entry.writer.lock().await;
    let cur = entry.snapshot();
    let centers = {
        let g = job.progress.lock().expect("job lock");
        match (&g.status, &g.result) {
            (JobStatus::Done, Some(r)) => r.centers.points().to_vec(),
            _ => {
                return Err(ApiError::conflict(
                    format!("job is {:?}", g.status).to_lowercase(),
                    Value::Null,
                ))
            }
        }
    };
    if cur.revision != job.base_revision {
        return Err(stale(&cur, job.base_revision));
    }
    let snap = recompute(&entry, &cur, centers, cur.s).await?;
    job.progress.lock().expect("job lock").status = JobStatus::Accepted;
    Ok(Json(snapshot_json(&snap)))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    kind: Option<String>,
}

/// The session at its current revision as an SVG picture or a scenario
/// document. The revision is echoed in the `x-revision` header.
async fn export(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let snap = session(&st, &id)?.snapshot();
    let revision = snap.revision.to_string();
    match q.kind.as_deref().unwrap_or("scenario") {
        "scenario" => {
            let doc = save_scenario(&ScenarioFile {
                domain: DomainSource::Inline(DomainFile {
                    name: snap.name.clone(),
                    domain: (*snap.domain).clone(),
                }),
                s: snap.s,
                centers: snap.centers.clone(),
                optimizer: None,
            });
            Ok((
                [
                    (header::CONTENT_TYPE, "application/json"),
                    (
                        header::HeaderName::from_static("x-revision"),
                        revision.as_str(),
                    ),
                ],
                doc,
            )
                .into_response())
        }
        "svg" => {
            let overlay = Overlay::Centers {
                centers: &snap.centers,
                s: snap.s,
                // the witness may change when an Unknown verdict is refined
                verdict: None,
            };
            let svg = render_svg(&snap.domain, overlay, &SvgOptions::default());
            Ok((
                [
                    (header::CONTENT_TYPE, "image/svg+xml"),
                    (
                        header::HeaderName::from_static("x-revision"),
                        revision.as_str(),
                    ),
                ],
                svg,
            )
                .into_response())
        }
        other => Err(ApiError::bad_request(
            "invalid_input",
            format!("unknown export kind {other}; expected svg or scenario"),
        )),
    }
}
