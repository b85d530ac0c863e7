//! Euclidean minimum spanning trees and Fermat-point Steinerization.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point2, Tree};

/// Two centers closer than this are treated as the same point.
pub const DUPLICATE_EPS: f64 = 1e-12;

/// An insertion is kept only if it shortens the tree by more than this.
pub const STEINER_GAIN: f64 = 1e-10;

/// Ordered, duplicate-free set of ball centers sharing one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CenterSetRepr", into = "CenterSetRepr")]
pub struct CenterSet {
    points: Vec<Point2>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct CenterSetRepr {
    points: Vec<Point2>,
    radius: f64,
}

impl TryFrom<CenterSetRepr> for CenterSet {
    type Error = Error;
    fn try_from(r: CenterSetRepr) -> Result<Self> {
        CenterSet::new(r.points, r.radius)
    }
}

impl From<CenterSet> for CenterSetRepr {
    fn from(c: CenterSet) -> Self {
        CenterSetRepr {
            points: c.points,
            radius: c.radius,
        }
    }
}

/// First pair of points closer than [`DUPLICATE_EPS`], if any.
pub fn find_duplicate(points: &[Point2]) -> Option<(usize, usize)> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].dist(points[j]) <= DUPLICATE_EPS {
                return Some((i, j));
            }
        }
    }
    None
}

impl CenterSet {
    pub fn new(points: Vec<Point2>, radius: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radius must be > 0, got {radius}"
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("center set"));
        }
        if let Some((i, j)) = find_duplicate(&points) {
            return Err(Error::DegeneratePointSet(i, j));
        }
        Ok(CenterSet { points, radius })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        CenterSet::new(self.points.clone(), radius)
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }
}

/// Disjoint-set forest with union by rank and path compression.
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    /// Adds a fresh singleton element.
    pub fn push(&mut self) -> usize {
        let k = self.parent.len();
        self.parent.push(k);
        self.rank.push(0);
        self.components += 1;
        k
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MstResult {
    pub tree: Tree,
    pub length: f64,
    pub edge_count: usize,
}

impl MstResult {
    fn from_edges(points: &[Point2], edges: Vec<(usize, usize)>) -> Self {
        let length = edges
            .iter()
            .map(|&(i, j)| points[i].dist(points[j]))
            .fold(0.0, |a, b| a + b);
        let edge_count = edges.len();
        let tree = Tree::new(points.to_vec(), edges).expect("spanning edges form a tree");
        MstResult {
            tree,
            length,
            edge_count,
        }
    }
}

/// Kruskal over the complete Euclidean graph. Edges are ordered by length,
/// then by index pair, so ties resolve identically everywhere.
pub fn kruskal_points(points: &[Point2]) -> MstResult {
    let n = points.len();
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            cand.push((points[i].dist(points[j]), i, j));
        }
    }
    cand.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in cand {
        if uf.union(i, j) {
            edges.push((i, j));
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    MstResult::from_edges(points, edges)
}

pub fn kruskal_mst(x: &CenterSet) -> MstResult {
    kruskal_points(x.points())
}

/// MST over raw points, rejecting coincident ones.
pub fn mst_of_points(points: &[Point2]) -> Result<MstResult> {
    if points.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    if let Some((i, j)) = find_duplicate(points) {
        return Err(Error::DegeneratePointSet(i, j));
    }
    Ok(kruskal_points(points))
}

/// Exhaustive minimum over all labelled spanning trees, enumerated as
/// Prüfer sequences. Test oracle; at most 8 points.
pub fn brute_force_mst(x: &CenterSet) -> Result<MstResult> {
    let pts = x.points();
    let n = pts.len();
    if n > 8 {
        return Err(Error::TooManyPoints(n));
    }
    if n == 1 {
        return Ok(MstResult::from_edges(pts, Vec::new()));
    }
    if n == 2 {
        return Ok(MstResult::from_edges(pts, vec![(0, 1)]));
    }
    let mut seq = vec![0usize; n - 2];
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    loop {
        let edges = prufer_decode(&seq, n);
        let len: f64 = edges
            .iter()
            .map(|&(i, j)| pts[i].dist(pts[j]))
            .fold(0.0, |a, b| a + b);
        if best.as_ref().is_none_or(|(b, _)| len < *b) {
            best = Some((len, edges));
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == seq.len() {
                let (_, edges) = best.expect("at least one tree enumerated");
                return Ok(MstResult::from_edges(pts, edges));
            }
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
    }
}

fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &v in seq {
        let leaf = (0..n)
            .find(|&u| degree[u] == 1)
            .expect("Prüfer leaf exists");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Interior angle at `v` of the path `a - v - b`, in radians.
pub fn angle_at(v: Point2, a: Point2, b: Point2) -> f64 {
    let (da, db) = (a - v, b - v);
    da.cross(db).abs().atan2(da.dot(db))
}

const TWO_PI_THIRDS: f64 = 2.0 * PI / 3.0;

/// Point minimizing the summed distance to `a`, `b`, `c`.
///
/// A vertex whose interior angle is at least 120° is returned as-is. Otherwise
/// the Torricelli point is taken from its barycentric closed form and polished
/// with Weiszfeld steps.
pub fn fermat_point(a: Point2, b: Point2, c: Point2) -> Result<Point2> {
    if a == b && b == c {
        return Err(Error::CoincidentTriple);
    }
    // A doubled vertex carries weight 2 and wins outright.
    if a == b || a == c {
        return Ok(a);
    }
    if b == c {
        return Ok(b);
    }
    let (ang_a, ang_b, ang_c) = (angle_at(a, b, c), angle_at(b, a, c), angle_at(c, a, b));
    for (ang, v) in [(ang_a, a), (ang_b, b), (ang_c, c)] {
        if ang >= TWO_PI_THIRDS {
            return Ok(v);
        }
    }
    let (la, lb, lc) = (b.dist(c), a.dist(c), a.dist(b));
    let third = PI / 3.0;
    let wa = la / (ang_a + third).sin();
    let wb = lb / (ang_b + third).sin();
    let wc = lc / (ang_c + third).sin();
    let w = wa + wb + wc;
    let mut p = (a * wa + b * wb + c * wc) * (1.0 / w);
    for _ in 0..200 {
        let (da, db, dc) = (p.dist(a), p.dist(b), p.dist(c));
        if da == 0.0 || db == 0.0 || dc == 0.0 {
            break;
        }
        let next = (a * (1.0 / da) + b * (1.0 / db) + c * (1.0 / dc))
            * (1.0 / (1.0 / da + 1.0 / db + 1.0 / dc));
        let step = next.dist(p);
        p = next;
        if step <= 1e-12 * (1.0 + la.max(lb).max(lc)) {
            break;
        }
    }
    Ok(p)
}

/// Weiszfeld geometric median of `pts`, started from their centroid.
pub(crate) fn geometric_median(pts: &[Point2]) -> Point2 {
    let mut p = pts.iter().fold(Point2::ORIGIN, |acc, &q| acc + q) * (1.0 / pts.len() as f64);
    for _ in 0..500 {
        let mut num = Point2::ORIGIN;
        let mut den = 0.0;
        for &q in pts {
            let d = p.dist(q);
            if d == 0.0 {
                return q;
            }
            num = num + q * (1.0 / d);
            den += 1.0 / d;
        }
        let next = num * (1.0 / den);
        let step = next.dist(p);
        p = next;
        if step < 1e-14 {
            break;
        }
    }
    p
}

fn neighbors(tree: &Tree) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); tree.points().len()];
    for &(i, j) in tree.edges() {
        adj[i].push(j);
        adj[j].push(i);
    }
    adj
}

/// Adding `p` to `pts` if it is not a duplicate; returns the new MST.
fn try_with(pts: &[Point2], p: Point2) -> Option<(Vec<Point2>, MstResult)> {
    if pts.iter().any(|q| q.dist(p) <= DUPLICATE_EPS) {
        return None;
    }
    let mut next = pts.to_vec();
    next.push(p);
    let mst = kruskal_points(&next);
    Some((next, mst))
}

/// Improves the MST length by inserting Fermat points of MST corners whose
/// angle is below 120°.
///
/// Each round scans the corners of the MST it starts with, keeping every
/// insertion that shortens the tree by more than [`STEINER_GAIN`], then
/// relaxes the inserted points: those of degree two or less are dropped and
/// the rest are moved to the Fermat point (or geometric median) of their
/// neighbours while that keeps shortening the tree. Original centers are
/// never moved or removed, so the returned set starts with `x` in order.
pub fn steinerize(x: &CenterSet, rounds: usize) -> (CenterSet, MstResult) {
    let fixed = x.len();
    let mut pts = x.points().to_vec();
    let mut mst = kruskal_points(&pts);
    for _ in 0..rounds {
        let start_len = mst.length;
        let adj = neighbors(&mst.tree);
        let mut triples = Vec::new();
        for (v, nb) in adj.iter().enumerate() {
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    if angle_at(pts[v], pts[nb[i]], pts[nb[j]]) < TWO_PI_THIRDS {
                        triples.push((nb[i], v, nb[j]));
                    }
                }
            }
        }
        for (a, v, b) in triples {
            let Ok(f) = fermat_point(pts[a], pts[v], pts[b]) else {
                continue;
            };
            if let Some((next, next_mst)) = try_with(&pts, f) {
                if next_mst.length < mst.length - STEINER_GAIN {
                    pts = next;
                    mst = next_mst;
                }
            }
        }
        relax_steiner_points(fixed, &mut pts, &mut mst);
        if mst.length >= start_len - STEINER_GAIN {
            break;
        }
    }
    let centers = CenterSet::new(pts, x.radius()).expect("insertions avoid duplicates");
    (centers, mst)
}

fn relax_steiner_points(fixed: usize, pts: &mut Vec<Point2>, mst: &mut MstResult) {
    for _ in 0..20_000 {
        let before = mst.length;
        // drop inserted points of degree <= 2; removal never lengthens the MST
        loop {
            let deg = mst.tree.degrees();
            let Some(k) = (fixed..pts.len()).rev().find(|&k| deg[k] <= 2) else {
                break;
            };
            let mut next = pts.clone();
            next.remove(k);
            let next_mst = kruskal_points(&next);
            if next_mst.length <= mst.length {
                *pts = next;
                *mst = next_mst;
            } else {
                break;
            }
        }
        for k in fixed..pts.len() {
            let adj = neighbors(&mst.tree);
            let nb: Vec<Point2> = adj[k].iter().map(|&j| pts[j]).collect();
            if nb.len() < 3 {
                continue;
            }
            let target = if nb.len() == 3 {
                match fermat_point(nb[0], nb[1], nb[2]) {
                    Ok(t) => t,
                    Err(_) => continue,
                }
            } else {
                geometric_median(&nb)
            };
            if pts
                .iter()
                .enumerate()
                .any(|(j, q)| j != k && q.dist(target) <= DUPLICATE_EPS)
            {
                continue;
            }
            let mut next = pts.clone();
            next[k] = target;
            let next_mst = kruskal_points(&next);
            if next_mst.length < mst.length {
                *pts = next;
                *mst = next_mst;
            }
        }
        if mst.length >= before - 1e-15 {
            break;
        }
    }
}
