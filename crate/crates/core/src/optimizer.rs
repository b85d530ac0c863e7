//! Search for short spanning trees over ball-center configurations that
//! cover a domain.
//!
//! Every state the annealer visits is certified `Covered`, so any reported
//! objective is a valid upper bound on the spanning length of the domain.

use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{certify_cover, certify_cover_in_disk, CoverStatus, CoverageVerdict, Region};
use crate::error::{Error, Result};
use crate::geom::{Domain, Point2, Tree};
use crate::skeleton::{axis_segment, prong_centers_for_tree, shorten_covering_tree};
use crate::spanning::{
    angle_at, fermat_point, kruskal_mst, kruskal_points, CenterSet, MstResult, DUPLICATE_EPS,
};

/// Shrink factor applied to `s` for the lattice covering radius.
const HEX_MARGIN: f64 = 1e-3;
const HEX_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    pub n_max: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Initial perturbation standard deviation as a fraction of `s`.
    pub step_scale: f64,
    pub cooling: f64,
    /// Initial temperature as a fraction of `s`.
    pub temperature: f64,
    /// Certification tolerance; `None` means `1e-4 × diameter`.
    pub coverage_tol: Option<f64>,
    /// Independent annealing chains.
    pub restarts: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            n_max: 30,
            iterations: 5000,
            seed: 0,
            step_scale: 0.25,
            cooling: 0.999,
            temperature: 0.05,
            coverage_tol: None,
            restarts: 1,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_max == 0 {
            return bad("n_max must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return bad("step_scale must be positive");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling must lie in (0, 1)");
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if let Some(t) = self.coverage_tol {
            if !(t.is_finite() && t > 0.0) {
                return bad("coverage_tol must be positive");
            }
        }
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        Ok(())
    }

    pub fn tolerance_for(&self, d: &Domain) -> f64 {
        self.coverage_tol.unwrap_or(1e-4 * d.diameter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigState {
    pub centers: CenterSet,
    pub mst: MstResult,
    pub verdict: CoverageVerdict,
    pub objective: f64,
}

impl ConfigState {
    /// Certifies `centers` against `d` and evaluates the objective.
    pub fn evaluate(d: &Domain, centers: CenterSet, tol: f64) -> Result<ConfigState> {
        let verdict = certify_cover(d, &centers, centers.radius(), tol)?;
        let mst = kruskal_points(centers.points());
        let objective = if verdict.is_covered() {
            mst.length
        } else {
            f64::INFINITY
        };
        Ok(ConfigState {
            centers,
            mst,
            verdict,
            objective,
        })
    }

    pub fn is_feasible(&self) -> bool {
        self.objective.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoveKind {
    Perturb {
        index: usize,
        offset: Point2,
    },
    Remove {
        index: usize,
    },
    /// Inserts the Fermat point of the MST corner `a - v - b`.
    AddFermat {
        triple: [usize; 3],
    },
    /// Inserts the midpoint of MST edge `edge`.
    SplitEdge {
        edge: usize,
    },
}

fn hex_lattice(d: &Domain, s: f64, rho: f64) -> Vec<Point2> {
    let a = rho * 3f64.sqrt();
    let row = 1.5 * rho;
    let bb = d.bbox().expand(s);
    let c = d.bbox().center();
    let edges = d.edges();
    let j0 = ((bb.min.y - c.y) / row).floor() as i64 - 1;
    let j1 = ((bb.max.y - c.y) / row).ceil() as i64 + 1;
    let i0 = ((bb.min.x - c.x) / a).floor() as i64 - 1;
    let i1 = ((bb.max.x - c.x) / a).ceil() as i64 + 1;
    let mut out = Vec::new();
    for j in j0..=j1 {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * a } else { 0.0 };
        for i in i0..=i1 {
            let p = Point2::new(c.x + i as f64 * a + shift, c.y + j as f64 * row);
            let near = d.contains(p)
                || edges
                    .iter()
                    .any(|e| crate::geom::dist_point_segment(p, e) < s);
            if near {
                out.push(p);
            }
        }
    }
    out
}

/// Hexagonal lattice cover of `d`, anchored at the domain's bounding-box
/// center and certified at tolerance `1e-4 × diameter`.
pub fn init_hex_cover(d: &Domain, s: f64) -> Result<CenterSet> {
    init_hex_cover_tol(d, s, 1e-4 * d.diameter())
}

pub fn init_hex_cover_tol(d: &Domain, s: f64, tol: f64) -> Result<CenterSet> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter("s must be positive".into()));
    }
    let mut rho = s * (1.0 - HEX_MARGIN);
    let mut last = String::new();
    for _ in 0..=HEX_RETRIES {
        let pts = hex_lattice(d, s, rho);
        if !pts.is_empty() {
            let x = CenterSet::new(pts, s)?;
            let v = certify_cover(d, &x, s, tol)?;
            if v.is_covered() {
                return Ok(x);
            }
            last = format!("lattice verdict {:?} (margin {:.3e})", v.status, v.margin);
        } else {
            last = "empty lattice".into();
        }
        rho *= 0.9;
    }
    Err(Error::InitialCover(last))
}

/// Removal of `centers[idx]` can only uncover points that lay within `s`
/// of it, so the check is confined to that disk.
fn removal_keeps_cover(d: &Domain, pts: &[Point2], idx: usize, s: f64, tol: f64) -> bool {
    if pts.len() <= 1 {
        return false;
    }
    let c = pts[idx];
    let rest: Vec<Point2> = pts
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .map(|(_, &p)| p)
        .collect();
    matches!(
        certify_cover_in_disk(&Region::Domain(d), &rest, s, tol, c, s).map(|v| v.status),
        Ok(CoverStatus::Covered)
    )
}

/// Greedily drops centers whose removal keeps the cover certified. Leaves of
/// the current MST are tried first, longest incident edge first.
pub fn prune_redundant(x: &CenterSet, d: &Domain, tol: f64) -> CenterSet {
    let s = x.radius();
    let mut pts = x.points().to_vec();
    'outer: loop {
        if pts.len() <= 1 {
            break;
        }
        let mst = kruskal_points(&pts);
        let deg = mst.tree.degrees();
        let mut longest = vec![0.0f64; pts.len()];
        for &(i, j) in mst.tree.edges() {
            let l = pts[i].dist(pts[j]);
            longest[i] = longest[i].max(l);
            longest[j] = longest[j].max(l);
        }
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| {
            deg[a]
                .cmp(&deg[b])
                .then(longest[b].total_cmp(&longest[a]))
                .then(a.cmp(&b))
        });
        for i in order {
            if removal_keeps_cover(d, &pts, i, s, tol) {
                pts.remove(i);
                continue 'outer;
            }
        }
        break;
    }
    CenterSet::new(pts, s).expect("subset of a valid center set")
}

/// Skeleton trees are fitted at `s·(1 + SKELETON_INFLATE)`: a tree touching
/// the boundary at exactly distance `s` cannot be certified, while prong
/// covers keep a positive margin around `B(tree, s)`.
const SKELETON_INFLATE: f64 = 1e-3;

/// Prong covers of covering trees: the trimmed principal-axis segment and
/// the shortened MST of `x`. Returns the shortest one that fits in `n_max`
/// centers and certifies.
pub fn skeleton_cover(d: &Domain, x: &CenterSet, n_max: usize, tol: f64) -> Option<CenterSet> {
    let s = x.radius();
    let st = s * (1.0 + SKELETON_INFLATE);
    let mut trees = Vec::new();
    if let Some(seg) = axis_segment(d, st, tol) {
        trees.push(if seg.is_degenerate() {
            Tree::single(seg.a)
        } else {
            Tree::new(vec![seg.a, seg.b], vec![(0, 1)]).expect("two distinct points")
        });
    }
    trees.push(shorten_covering_tree(d, &kruskal_mst(x).tree, st, tol));
    let mut best: Option<(f64, CenterSet)> = None;
    for tree in trees {
        let Some(pts) = prong_centers_for_tree(&tree, s, n_max) else {
            continue;
        };
        let Ok(cs) = CenterSet::new(pts, s) else {
            continue;
        };
        let cand = prune_redundant(&cs, d, tol);
        if !certify_cover(d, &cand, s, tol).is_ok_and(|v| v.is_covered()) {
            continue;
        }
        let len = kruskal_mst(&cand).length;
        if best.as_ref().is_none_or(|b| len < b.0) {
            best = Some((len, cand));
        }
    }
    best.map(|b| b.1)
}

/// The shorter of the pruned hexagonal cover and its skeleton prong cover;
/// configurations above `n_max` centers lose to any that fit.
pub fn initial_configuration(d: &Domain, s: f64, n_max: usize, tol: f64) -> Result<CenterSet> {
    let hex = prune_redundant(&init_hex_cover_tol(d, s, tol)?, d, tol);
    let Some(sk) = skeleton_cover(d, &hex, n_max, tol) else {
        return Ok(hex);
    };
    let key = |x: &CenterSet| (x.len() > n_max, kruskal_mst(x).length);
    if key(&sk) < key(&hex) {
        Ok(sk)
    } else {
        Ok(hex)
    }
}

struct Chain<'a> {
    d: &'a Domain,
    s: f64,
    tol: f64,
    n_max: usize,
    pts: Vec<Point2>,
    mst: MstResult,
}

impl<'a> Chain<'a> {
    fn propose(&self, rng: &mut ChaCha8Rng, sigma: f64) -> Option<MoveKind> {
        let n = self.pts.len();
        let r: f64 = rng.random();
        let can_add = n < self.n_max;
        if r < 0.6 || n == 1 && !can_add {
            let index = rng.random_range(0..n);
            let offset = if n > 1 && rng.random_bool(0.5) {
                // pull towards a random tree neighbour
                let nb: Vec<usize> = self
                    .mst
                    .tree
                    .edges()
                    .iter()
                    .filter_map(|&(a, b)| {
                        if a == index {
                            Some(b)
                        } else if b == index {
                            Some(a)
                        } else {
                            None
                        }
                    })
                    .collect();
                let j = nb[rng.random_range(0..nb.len())];
                let t: f64 = rng.random_range(0.0..0.5);
                (self.pts[j] - self.pts[index]) * t
            } else {
                let g = Normal::new(0.0, sigma).expect("finite sigma");
                Point2::new(g.sample(rng), g.sample(rng))
            };
            return Some(MoveKind::Perturb { index, offset });
        }
        if r < 0.75 || !can_add {
            if n <= 1 {
                return None;
            }
            return Some(MoveKind::Remove {
                index: rng.random_range(0..n),
            });
        }
        if n < 2 {
            return None;
        }
        let edges = self.mst.tree.edges();
        if r < 0.87 {
            return Some(MoveKind::SplitEdge {
                edge: rng.random_range(0..edges.len()),
            });
        }
        // corners of the tree with an interior angle below 120 degrees
        let v = rng.random_range(0..n);
        let nb: Vec<usize> = edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        if nb.len() < 2 {
            return None;
        }
        let i = rng.random_range(0..nb.len());
        let mut j = rng.random_range(0..nb.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (nb[i], nb[j]);
        if angle_at(self.pts[v], self.pts[a], self.pts[b]) >= 2.0 * std::f64::consts::FRAC_PI_3 {
            return None;
        }
        Some(MoveKind::AddFermat { triple: [a, v, b] })
    }

    /// The local disk check and a full-domain check can disagree within the
    /// tolerance band, so accepted states are re-certified on the whole domain.
    fn globally_covered(&self, pts: &[Point2], mv: MoveKind) -> bool {
        match mv {
            MoveKind::AddFermat { .. } | MoveKind::SplitEdge { .. } => true,
            _ => matches!(
                certify_cover(self.d, pts, self.s, self.tol).map(|v| v.status),
                Ok(CoverStatus::Covered)
            ),
        }
    }

    /// Applies a move to a copy of the points if the result stays covered.
    fn try_move(&self, mv: MoveKind) -> Option<Vec<Point2>> {
        let mut pts = self.pts.clone();
        match mv {
            MoveKind::Perturb { index, offset } => {
                let old = pts[index];
                let new = old + offset;
                if !new.is_finite() || pts.iter().any(|q| q.dist(new) <= DUPLICATE_EPS) {
                    return None;
                }
                pts[index] = new;
                let v = certify_cover_in_disk(
                    &Region::Domain(self.d),
                    &pts,
                    self.s,
                    self.tol,
                    old,
                    self.s,
                )
                .ok()?;
                if !v.is_covered() {
                    return None;
                }
            }
            MoveKind::Remove { index } => {
                if !removal_keeps_cover(self.d, &pts, index, self.s, self.tol) {
                    return None;
                }
                pts.remove(index);
            }
            MoveKind::AddFermat { triple: [a, v, b] } => {
                let f = fermat_point(pts[a], pts[v], pts[b]).ok()?;
                if pts.iter().any(|q| q.dist(f) <= DUPLICATE_EPS) {
                    return None;
                }
                pts.push(f);
            }
            MoveKind::SplitEdge { edge } => {
                let (i, j) = self.mst.tree.edges()[edge];
                let m = pts[i].lerp(pts[j], 0.5);
                if pts.iter().any(|q| q.dist(m) <= DUPLICATE_EPS) {
                    return None;
                }
                pts.push(m);
            }
        }
        Some(pts)
    }
}

/// Snapshot passed to [`SearchControl::progress`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub restart: usize,
    /// Iterations finished by this restart.
    pub iteration: usize,
    /// Best objective of this restart so far (`inf` while over `n_max`).
    pub best: f64,
}

/// Hooks for callers that run the search in the background.
#[derive(Clone, Copy, Default)]
pub struct SearchControl<'a> {
    /// Checked once per iteration; when set the search stops with
    /// [`Error::Cancelled`].
    pub cancel: Option<&'a AtomicBool>,
    /// Called on every improvement and every `PROGRESS_EVERY` iterations.
    pub progress: Option<&'a (dyn Fn(Progress) + Sync)>,
}

pub const PROGRESS_EVERY: usize = 100;

impl SearchControl<'_> {
    fn cancelled(&self) -> bool {
        self.cancel.is_some_and(|c| c.load(AtomicOrdering::Relaxed))
    }

    fn report(&self, p: Progress) {
        if let Some(f) = self.progress {
            f(p);
        }
    }
}

struct ChainRun<'a> {
    d: &'a Domain,
    s: f64,
    p: &'a OptimizerParams,
    tol: f64,
    init: &'a [Point2],
}

impl ChainRun<'_> {
    fn run(&self, stream: u64, ctl: &SearchControl<'_>) -> Option<(Vec<Point2>, f64)> {
        let p = self.p;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        rng.set_stream(stream);
        let mut chain = Chain {
            d: self.d,
            s: self.s,
            tol: self.tol,
            n_max: p.n_max,
            pts: self.init.to_vec(),
            mst: kruskal_points(self.init),
        };
        let mut best = (self.init.to_vec(), chain.mst.length);
        if self.init.len() > p.n_max {
            best.1 = f64::INFINITY;
        }
        let report = |iteration: usize, best: f64| {
            ctl.report(Progress {
                restart: stream as usize,
                iteration,
                best,
            })
        };
        report(0, best.1);
        let t0 = p.temperature * self.s;
        let mut temp = t0;
        for it in 0..p.iterations {
            if ctl.cancelled() {
                return None;
            }
            let sigma = p.step_scale * self.s * (temp / t0).sqrt().max(0.05);
            if let Some(mv) = chain.propose(&mut rng, sigma) {
                if let Some(pts) = chain.try_move(mv) {
                    let mst = kruskal_points(&pts);
                    let delta = mst.length - chain.mst.length;
                    let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp();
                    if accept && chain.globally_covered(&pts, mv) {
                        chain.pts = pts;
                        chain.mst = mst;
                        if chain.pts.len() <= p.n_max && chain.mst.length < best.1 {
                            best = (chain.pts.clone(), chain.mst.length);
                            report(it + 1, best.1);
                        }
                    }
                }
            }
            temp *= p.cooling;
            if (it + 1) % PROGRESS_EVERY == 0 {
                report(it + 1, best.1);
            }
        }
        Some(best)
    }
}

/// Simulated annealing over covering configurations with at most `n_max`
/// centers. Moves that break certified coverage are rejected. Restarts run
/// in parallel on independent streams of one ChaCha8 generator seeded with
/// `p.seed`; ties between restarts go to the lower index.
pub fn local_search(d: &Domain, s: f64, p: &OptimizerParams) -> Result<ConfigState> {
    local_search_with(d, s, p, &SearchControl::default())
}

pub fn local_search_with(
    d: &Domain,
    s: f64,
    p: &OptimizerParams,
    ctl: &SearchControl<'_>,
) -> Result<ConfigState> {
    p.validate()?;
    let tol = p.tolerance_for(d);
    let init = initial_configuration(d, s, p.n_max, tol)?;
    let run = ChainRun {
        d,
        s,
        p,
        tol,
        init: init.points(),
    };
    let results: Vec<Option<(Vec<Point2>, f64)>> = (0..p.restarts as u64)
        .into_par_iter()
        .map(|k| run.run(k, ctl))
        .collect();
    let mut best: (Vec<Point2>, f64) = (Vec::new(), f64::INFINITY);
    for r in results {
        let r = r.ok_or(Error::Cancelled)?;
        if r.1 < best.1 {
            best = r;
        }
    }
    if !best.1.is_finite() {
        return Err(Error::InitialCover(format!(
            "no covering configuration with at most {} centers found",
            p.n_max
        )));
    }
    let state = ConfigState::evaluate(d, CenterSet::new(best.0, s)?, tol)?;
    debug_assert!(state.is_feasible());
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub n: usize,
    /// Best objective found with `n_max = n`.
    pub raw: f64,
    /// Running minimum over all `n' <= n`.
    pub envelope: f64,
}

/// Runs [`local_search`] for each `n` and reports the nonincreasing
/// best-so-far envelope.
pub fn sigma_n_curve(
    d: &Domain,
    s: f64,
    n_values: &[usize],
    p: &OptimizerParams,
) -> Result<Vec<SigmaPoint>> {
    if n_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "n values must be sorted ascending".into(),
        ));
    }
    let mut out = Vec::with_capacity(n_values.len());
    let mut env = f64::INFINITY;
    for &n in n_values {
        let q = OptimizerParams {
            n_max: n,
            ..p.clone()
        };
        let raw = match local_search(d, s, &q) {
            Ok(st) => st.objective,
            Err(Error::InitialCover(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        env = env.min(raw);
        out.push(SigmaPoint {
            n,
            raw,
            envelope: env,
        });
    }
    Ok(out)
}
