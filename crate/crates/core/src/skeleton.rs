//! Covering trees: shortening a tree `T` subject to `E ⊆ B(T, s)`, and
//! turning such a tree into a finite center set with segment prong covers.

use crate::constructive::{segment_prong_cover, SegmentProngParams};
use crate::coverage::{certify_cover, CoverStatus};
use crate::geom::{Domain, Point2, Segment, Tree};
use crate::spanning::{geometric_median, DUPLICATE_EPS};

const MAX_ROUNDS: usize = 60;
const REPAIRS: usize = 12;
/// Step fractions tried, largest first, when sliding a vertex.
const STEPS: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];

#[derive(Clone)]
struct Work {
    pts: Vec<Point2>,
    adj: Vec<Vec<usize>>,
    alive: Vec<bool>,
}

impl Work {
    fn from_tree(t: &Tree) -> Work {
        let n = t.points().len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in t.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        Work {
            pts: t.points().to_vec(),
            adj,
            alive: vec![true; n],
        }
    }

    fn to_tree(&self) -> Tree {
        let mut map = vec![usize::MAX; self.pts.len()];
        let mut pts = Vec::new();
        for (i, &p) in self.pts.iter().enumerate() {
            if self.alive[i] {
                map[i] = pts.len();
                pts.push(p);
            }
        }
        let mut edges = Vec::new();
        for (i, nb) in self.adj.iter().enumerate() {
            for &j in nb {
                if self.alive[i] && i < j {
                    edges.push((map[i], map[j]));
                }
            }
        }
        Tree::new(pts, edges).expect("tree edits preserve the tree property")
    }

    fn length(&self) -> f64 {
        let mut l = 0.0;
        for (i, nb) in self.adj.iter().enumerate() {
            for &j in nb {
                if i < j {
                    l += self.pts[i].dist(self.pts[j]);
                }
            }
        }
        l
    }

    fn live_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    fn unlink(&mut self, a: usize, b: usize) {
        self.adj[a].retain(|&x| x != b);
        self.adj[b].retain(|&x| x != a);
    }

    fn link(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    fn has_duplicate_of(&self, v: usize, p: Point2) -> bool {
        self.pts
            .iter()
            .enumerate()
            .any(|(i, q)| i != v && self.alive[i] && q.dist(p) <= DUPLICATE_EPS)
    }
}

struct Shortener<'a> {
    d: &'a Domain,
    s: f64,
    tol: f64,
}

impl Shortener<'_> {
    fn covers(&self, w: &Work) -> bool {
        let t = w.to_tree();
        matches!(
            certify_cover(self.d, &t, self.s, self.tol).map(|v| v.status),
            Ok(CoverStatus::Covered)
        )
    }

    /// Replaces `a - v - b` by `a - b`.
    fn splice(&self, w: &mut Work, v: usize) -> bool {
        if w.adj[v].len() != 2 {
            return false;
        }
        let (a, b) = (w.adj[v][0], w.adj[v][1]);
        let mut next = w.clone();
        next.unlink(v, a);
        next.unlink(v, b);
        next.link(a, b);
        next.alive[v] = false;
        if self.covers(&next) {
            *w = next;
            return true;
        }
        false
    }

    /// Drops a leaf, then repairs coverage by pulling the tree towards
    /// uncovered witnesses. Kept only if the result is shorter.
    fn drop_leaf(&self, w: &mut Work, v: usize) -> bool {
        if w.adj[v].len() != 1 || w.live_count() <= 1 {
            return false;
        }
        let before = w.length();
        let u = w.adj[v][0];
        let mut next = w.clone();
        next.unlink(v, u);
        next.alive[v] = false;
        for _ in 0..REPAIRS {
            let t = next.to_tree();
            let Ok(verdict) = certify_cover(self.d, &t, self.s, self.tol) else {
                return false;
            };
            match (verdict.status, verdict.witness) {
                (CoverStatus::Covered, _) => {
                    if next.length() < before {
                        *w = next;
                        return true;
                    }
                    return false;
                }
                (CoverStatus::Uncovered, Some(x)) => {
                    if !self.pull_towards(&mut next, x) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        false
    }

    /// Moves the vertex nearest (along the closest edge) to `x` so that `x`
    /// comes within `s` of the tree.
    fn pull_towards(&self, w: &mut Work, x: Point2) -> bool {
        let mut best: Option<(f64, usize, f64)> = None;
        for (i, nb) in w.adj.iter().enumerate() {
            for &j in nb {
                if !w.alive[i] || i > j {
                    continue;
                }
                let seg = Segment::new(w.pts[i], w.pts[j]);
                let c = seg.closest_point(x);
                let dist = c.dist(x);
                let len = seg.length();
                let t = if len > 0.0 {
                    w.pts[i].dist(c) / len
                } else {
                    0.0
                };
                let (v, weight) = if t <= 0.5 { (i, 1.0 - t) } else { (j, t) };
                if best.is_none_or(|b| dist < b.0) {
                    best = Some((dist, v, weight));
                }
            }
        }
        let Some((dist, v, weight)) = best else {
            return false;
        };
        let Some(dir) = (x - w.pts[v]).normalized() else {
            return false;
        };
        let step = (dist - self.s) / weight + 1e-3 * self.s;
        let p = w.pts[v] + dir * step;
        if w.has_duplicate_of(v, p) {
            return false;
        }
        w.pts[v] = p;
        true
    }

    /// Slides `v` towards `target` by the largest feasible step that
    /// shortens the tree.
    fn slide(&self, w: &mut Work, v: usize, target: Point2) -> bool {
        let before = w.length();
        let from = w.pts[v];
        for t in STEPS {
            let p = from.lerp(target, t);
            if w.has_duplicate_of(v, p) {
                continue;
            }
            let mut next = w.clone();
            next.pts[v] = p;
            if next.length() < before - 1e-12 * self.s && self.covers(&next) {
                *w = next;
                return true;
            }
        }
        false
    }

    fn round(&self, w: &mut Work) -> bool {
        let mut changed = false;
        for v in 0..w.pts.len() {
            if w.alive[v] && self.splice(w, v) {
                changed = true;
            }
        }
        for v in 0..w.pts.len() {
            if w.alive[v] && self.drop_leaf(w, v) {
                changed = true;
            }
        }
        for v in 0..w.pts.len() {
            if !w.alive[v] || w.adj[v].is_empty() {
                continue;
            }
            let nb: Vec<Point2> = w.adj[v].iter().map(|&j| w.pts[j]).collect();
            let target = if nb.len() == 1 {
                nb[0]
            } else {
                geometric_median(&nb)
            };
            if self.slide(w, v, target) {
                changed = true;
            }
        }
        changed
    }
}

/// Greedily shortens `tree` while `d ⊆ B(tree, s)` stays certified at
/// `tol`. Vertices of degree two are spliced out, leaves dropped or pulled
/// in, and the remaining vertices slid towards the geometric median of
/// their neighbours.
pub fn shorten_covering_tree(d: &Domain, tree: &Tree, s: f64, tol: f64) -> Tree {
    let sh = Shortener { d, s, tol };
    let mut w = Work::from_tree(tree);
    if !sh.covers(&w) {
        return tree.clone();
    }
    for _ in 0..MAX_ROUNDS {
        let before = w.length();
        let changed = sh.round(&mut w);
        if !changed || w.length() > before - 1e-9 * s {
            break;
        }
    }
    w.to_tree()
}

fn min_prong_n(length: f64, s: f64) -> usize {
    SegmentProngParams::min_n_exclusive(length, s).floor() as usize + 1
}

/// Centers whose `s`-balls cover `B(tree, s)`: one segment prong cover per
/// edge, with the per-edge `n` raised greedily (largest excess drop first)
/// while the total stays within `budget`. `None` when even the coarsest
/// covers exceed the budget.
pub fn prong_centers_for_tree(tree: &Tree, s: f64, budget: usize) -> Option<Vec<Point2>> {
    if tree.edges().is_empty() {
        return tree.points().first().map(|&p| vec![p]);
    }
    let segs: Vec<Segment> = tree.segments().collect();
    let mut ns: Vec<usize> = segs.iter().map(|g| min_prong_n(g.length(), s)).collect();
    let count = |ns: &[usize]| ns.iter().map(|&n| 2 * n + 4).sum::<usize>();
    if count(&ns) > budget {
        return None;
    }
    while count(&ns) + 2 <= budget {
        let gain = |k: usize, n: usize| {
            let l = segs[k].length();
            SegmentProngParams::new(l, s, n).excess()
                - SegmentProngParams::new(l, s, n + 1).excess()
        };
        let best = (0..segs.len())
            .max_by(|&a, &b| gain(a, ns[a]).total_cmp(&gain(b, ns[b])).then(b.cmp(&a)))
            .expect("nonempty");
        ns[best] += 1;
    }
    let mut out: Vec<Point2> = Vec::new();
    for (g, &n) in segs.iter().zip(&ns) {
        let cover = segment_prong_cover(g, s, n).ok()?;
        for &c in cover.centers.points() {
            if !out.iter().any(|q| q.dist(c) <= DUPLICATE_EPS) {
                out.push(c);
            }
        }
    }
    Some(out)
}

/// Area centroid and unit major axis of the domain (holes subtracted).
pub fn principal_axis(d: &Domain) -> (Point2, Point2) {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for ring in d.rings() {
        let n = ring.len();
        for i in 0..n {
            let (p, q) = (ring[i], ring[(i + 1) % n]);
            let w = p.cross(q);
            a += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            sxx += (p.x * p.x + p.x * q.x + q.x * q.x) * w;
            syy += (p.y * p.y + p.y * q.y + q.y * q.y) * w;
            sxy += (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y) * w;
        }
    }
    a *= 0.5;
    let c = Point2::new(cx / (6.0 * a), cy / (6.0 * a));
    // central second moments
    let ixx = sxx / 12.0 - a * c.x * c.x;
    let iyy = syy / 12.0 - a * c.y * c.y;
    let ixy = sxy / 24.0 - a * c.x * c.y;
    let theta = 0.5 * (2.0 * ixy).atan2(ixx - iyy);
    (c, Point2::new(theta.cos(), theta.sin()))
}

/// Shortest segment on the principal axis whose `s`-neighbourhood certifiably
/// contains the domain, found by bisecting each end inwards from the full
/// projection of the domain.
pub fn axis_segment(d: &Domain, s: f64, tol: f64) -> Option<Segment> {
    let (c, u) = principal_axis(d);
    let proj: Vec<f64> = d.vertices().map(|&p| (p - c).dot(u)).collect();
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let covers = |a: f64, b: f64| {
        let t = if b - a > 0.0 {
            Tree::new(vec![c + u * a, c + u * b], vec![(0, 1)]).ok()
        } else {
            Some(Tree::single(c + u * a))
        };
        t.is_some_and(|t| {
            matches!(
                certify_cover(d, &t, s, tol).map(|v| v.status),
                Ok(CoverStatus::Covered)
            )
        })
    };
    if !covers(lo, hi) {
        return None;
    }
    let (mut a, mut bad) = (lo, 0.5 * (lo + hi));
    if covers(bad, hi) {
        a = bad;
    } else {
        for _ in 0..30 {
            let m = 0.5 * (a + bad);
            if covers(m, hi) {
                a = m;
            } else {
                bad = m;
            }
        }
    }
    let (mut b, mut bad) = (hi, a);
    for _ in 0..30 {
        let m = 0.5 * (b + bad);
        if covers(a, m) {
            b = m;
        } else {
            bad = m;
        }
    }
    Some(Segment::new(c + u * a, c + u * b))
}
