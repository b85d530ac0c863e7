//! Explicit finite covers of curve neighbourhoods.
//!
//! Each builder returns ball centers `X` together with a connected set
//! `Γ*` through them that contains the base curve `Γ`, with
//! `B(X, s) ⊇ B(Γ, s)`. The excess `H¹(Γ*) − H¹(Γ)` is what drives the
//! σ = λ convergence argument, so it is reported alongside the geometry.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::coverage::{self, CoverStatus, CoverageVerdict, Region, Shape};
use crate::error::{Error, Result};
use crate::geom::{Domain, H1Length, Point2, Polyline, Segment, Tree};
use crate::spanning::{CenterSet, UnionFind, DUPLICATE_EPS};

/// Parameters of the `2n + 4` point cover of a segment neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentProngParams {
    pub length: f64,
    pub s: f64,
    pub n: usize,
    /// Prong length `(L / 2n)² / s`.
    pub delta_n: f64,
}

impl SegmentProngParams {
    pub fn new(length: f64, s: f64, n: usize) -> Self {
        let half_gap = length / (2.0 * n as f64);
        SegmentProngParams {
            length,
            s,
            n,
            delta_n: half_gap * half_gap / s,
        }
    }

    /// Raised balls still reach the spine: `δ_n < s − δ_n`.
    pub fn is_valid(&self) -> bool {
        self.delta_n < self.s - self.delta_n
    }

    /// `n` must exceed `L / (s √2)` for the cover to be valid.
    pub fn min_n_exclusive(length: f64, s: f64) -> f64 {
        length / (s * std::f64::consts::SQRT_2)
    }

    /// Closed-form excess `2 (n + 2) δ_n`.
    pub fn excess(&self) -> f64 {
        2.0 * (self.n as f64 + 2.0) * self.delta_n
    }

    /// Smallest gap between `s` and the distance from a point of the
    /// stadium boundary to its nearest center (attained halfway between two
    /// prongs).
    pub fn min_slack(&self) -> f64 {
        let (s, d) = (self.s, self.delta_n);
        s - (s * s - s * d + d * d).sqrt()
    }
}

/// One straight piece of a polyline cover, with the rectangle that holds it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPiece {
    pub spine: Segment,
    /// Rectangle width.
    pub mu: f64,
    /// Rectangle length, the spine length.
    pub rho: f64,
    pub n: usize,
    pub delta: f64,
}

impl RectPiece {
    /// Aspect ratio `mu / rho`.
    pub fn aspect(&self) -> f64 {
        self.mu / self.rho
    }

    /// Length of the piece with its prongs: spine, `2n + 2` vertical prongs
    /// of length `mu/2 + delta`, four horizontal prongs of length `mu/2`.
    pub fn prong_length(&self) -> f64 {
        self.rho + (2 * self.n + 2) as f64 * (0.5 * self.mu + self.delta) + 2.0 * self.mu
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProngCover {
    pub centers: CenterSet,
    pub connector: Tree,
    pub base: Polyline,
    pub base_length: f64,
    pub excess: f64,
    /// Per-piece bookkeeping; one piece for the segment builder.
    pub pieces: Vec<RectPiece>,
    /// The aspect bound `alpha` (polyline builder only).
    pub alpha: Option<f64>,
    /// The `n` shared by all pieces.
    pub n: usize,
}

impl ProngCover {
    pub fn connector_length(&self) -> f64 {
        self.connector.h1_length()
    }

    /// Lower bound on the slack with which the centers cover `B(base, s)`.
    fn slack_estimate(&self) -> f64 {
        let s = self.centers.radius();
        self.pieces
            .iter()
            .map(|p| {
                let h = 0.5 * p.mu + p.delta;
                let gap = p.rho / (2.0 * p.n as f64);
                s - (gap * gap + (s - h) * (s - h)).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Certifies `B(centers, s) ⊇ B(base, s)` against the exact
    /// neighbourhood of the base curve, tightening the tolerance while the
    /// answer is Unknown.
    pub fn self_certify(&self) -> Result<CoverageVerdict> {
        let s = self.centers.radius();
        let base_tree = polyline_tree(&self.base);
        let region = Region::neighborhood(Shape::Tree(&base_tree), s);
        let mut tol = (0.25 * self.slack_estimate()).max(1e-9 * s);
        let mut verdict = coverage::certify_cover_region(&region, &self.centers, s, tol)?;
        for _ in 0..4 {
            if verdict.status != CoverStatus::Unknown {
                break;
            }
            tol *= 0.25;
            verdict = coverage::certify_cover_region(&region, &self.centers, s, tol)?;
        }
        Ok(verdict)
    }

    pub fn certify_against(&self, d: &Domain) -> Result<CoverageVerdict> {
        let s = self.centers.radius();
        let tol = (0.25 * self.slack_estimate()).max(1e-9 * s);
        coverage::certify_cover(d, &self.centers, s, tol)
    }
}

pub(crate) fn polyline_tree(p: &Polyline) -> Tree {
    let n = p.vertices().len();
    Tree::new(
        p.vertices().to_vec(),
        (0..n - 1).map(|i| (i, i + 1)).collect(),
    )
    .expect("polyline path is a tree")
}

/// Accumulates a tree from segments, merging bit-identical endpoints.
/// An edge whose endpoints are already connected is dropped, which keeps the
/// union connected and acyclic.
#[derive(Default)]
struct TreeBuilder {
    points: Vec<Point2>,
    index: HashMap<(u64, u64), usize>,
    edges: Vec<(usize, usize)>,
    uf: UnionFind,
}

impl TreeBuilder {
    fn vertex(&mut self, p: Point2) -> usize {
        let key = (p.x.to_bits(), p.y.to_bits());
        *self.index.entry(key).or_insert_with(|| {
            self.points.push(p);
            self.uf.push();
            self.points.len() - 1
        })
    }

    fn edge(&mut self, a: Point2, b: Point2) {
        let (i, j) = (self.vertex(a), self.vertex(b));
        if self.uf.union(i, j) {
            self.edges.push((i, j));
        }
    }

    fn finish(self) -> Result<Tree> {
        Tree::new(self.points, self.edges)
    }
}

fn push_center(centers: &mut Vec<Point2>, p: Point2) {
    if !centers.iter().any(|q| q.dist(p) <= DUPLICATE_EPS) {
        centers.push(p);
    }
}

/// The `2n + 4` point cover of `B(seg, s)`: both end points pushed outward
/// by `δ_n` and every `x_k = kL/n` lifted to `±δ_n`.
pub fn segment_prong_cover(seg: &Segment, s: f64, n: usize) -> Result<ProngCover> {
    let length = seg.length();
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(
            "segment must have positive length".into(),
        ));
    }
    if !(s > 0.0) || n == 0 {
        return Err(Error::InvalidParameter("need s > 0 and n >= 1".into()));
    }
    let params = SegmentProngParams::new(length, s, n);
    if !params.is_valid() {
        let min_n = SegmentProngParams::min_n_exclusive(length, s);
        return Err(Error::ProngTooCoarse {
            delta: params.delta_n,
            min_n_exclusive: min_n,
            hint: min_n.floor() as usize + 1,
        });
    }
    let d = params.delta_n;
    let u = (seg.b - seg.a) * (1.0 / length);
    let v = u.perp();
    let at = |x: f64, y: f64| seg.a + u * x + v * y;
    let xs: Vec<f64> = (0..=n).map(|k| length * k as f64 / n as f64).collect();

    let mut centers = vec![at(-d, 0.0)];
    for &x in &xs {
        centers.push(at(x, d));
        centers.push(at(x, -d));
    }
    centers.push(at(length + d, 0.0));

    let mut tb = TreeBuilder::default();
    for &c in &centers {
        tb.vertex(c);
    }
    tb.edge(at(-d, 0.0), at(0.0, 0.0));
    for w in xs.windows(2) {
        tb.edge(at(w[0], 0.0), at(w[1], 0.0));
    }
    tb.edge(at(length, 0.0), at(length + d, 0.0));
    for &x in &xs {
        tb.edge(at(x, 0.0), at(x, d));
        tb.edge(at(x, 0.0), at(x, -d));
    }
    let connector = tb.finish()?;
    let excess = connector.h1_length() - length;
    Ok(ProngCover {
        centers: CenterSet::new(centers, s)?,
        connector,
        base: Polyline::new(vec![seg.a, seg.b])?,
        base_length: length,
        excess,
        pieces: vec![RectPiece {
            spine: *seg,
            mu: 0.0,
            rho: length,
            n,
            delta: d,
        }],
        alpha: None,
        n,
    })
}

/// Shared `(n, alpha)` for the rectangle construction: the smallest `n`
/// with `1/(s n) <= beta` and `alpha + beta < s`, where
/// `alpha = beta / (4n + 2)` so that `floor(beta / (4 alpha)) = n`.
pub fn rectangle_parameters(s: f64, beta: f64) -> (usize, f64) {
    let mut n = (1.0 / (s * beta)).ceil().max(1.0) as usize;
    while 1.0 / (s * n as f64) > beta {
        n += 1;
    }
    loop {
        let alpha = beta / (4 * n + 2) as f64;
        if alpha + beta < s && alpha / 2.0 < s {
            return (n, alpha);
        }
        n += 1;
    }
}

/// Rectangle/prong cover of `B(poly, s)`.
///
/// Every edge is cut into equal pieces of length `rho < 1`. Piece `i` sits in
/// a rectangle of width `mu = alpha rho / 2` and carries `2n + 2` vertical
/// prongs of length `mu/2 + delta` (with `delta = (rho / 2n)² / s`) and four
/// horizontal prongs of length `mu/2` at the rectangle corners. Prongs shared
/// by consecutive collinear pieces are merged. When prongs at a turn run
/// along the next edge the connector length counts them twice, so the
/// reported excess is an upper bound there.
pub fn polyline_prong_cover(poly: &Polyline, s: f64, beta: f64) -> Result<ProngCover> {
    let base_length = poly.h1_length();
    if !(base_length > 0.0) {
        return Err(Error::InvalidParameter(
            "polyline must have positive length".into(),
        ));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter("need s > 0".into()));
    }
    if !(beta > 0.0 && beta < s) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, s) = (0, {s}), got {beta}"
        )));
    }
    let (n, alpha) = rectangle_parameters(s, beta);

    let mut pieces = Vec::new();
    for edge in poly.segments() {
        let len = edge.length();
        let m = len.floor() as usize + 1;
        for j in 0..m {
            let a = edge.a.lerp(edge.b, j as f64 / m as f64);
            let b = if j + 1 == m {
                edge.b
            } else {
                edge.a.lerp(edge.b, (j + 1) as f64 / m as f64)
            };
            let rho = a.dist(b);
            let gap = rho / (2.0 * n as f64);
            pieces.push(RectPiece {
                spine: Segment::new(a, b),
                mu: 0.5 * alpha * rho,
                rho,
                n,
                delta: gap * gap / s,
            });
        }
    }

    let mut centers = Vec::new();
    let mut tb = TreeBuilder::default();
    for piece in &pieces {
        let Segment { a, b } = piece.spine;
        let u = (b - a) * (1.0 / piece.rho);
        let v = u.perp();
        let half = 0.5 * piece.mu;
        let lift = half + piece.delta;
        let bases: Vec<Point2> = (0..=n)
            .map(|k| {
                if k == n {
                    b
                } else {
                    a.lerp(b, k as f64 / n as f64)
                }
            })
            .collect();
        for w in bases.windows(2) {
            tb.edge(w[0], w[1]);
        }
        // tips in spine order, top before bottom, horizontal tips at the ends
        let mut local = Vec::with_capacity(2 * n + 6);
        for (k, &base) in bases.iter().enumerate() {
            for side in [1.0, -1.0] {
                let tip = base + v * (side * lift);
                if k == 0 || k == n {
                    let corner = base + v * (side * half);
                    let out = if k == 0 { -u } else { u };
                    let htip = corner + out * half;
                    tb.edge(base, corner);
                    tb.edge(corner, tip);
                    tb.edge(corner, htip);
                    if k == 0 {
                        local.push(htip);
                    }
                }
                local.push(tip);
            }
        }
        for side in [1.0, -1.0] {
            local.push(b + v * (side * half) + u * half);
        }
        for p in local {
            push_center(&mut centers, p);
        }
    }
    let connector = tb.finish()?;
    let excess = connector.h1_length() - base_length;
    Ok(ProngCover {
        centers: CenterSet::new(centers, s)?,
        connector,
        base: poly.clone(),
        base_length,
        excess,
        pieces,
        alpha: Some(alpha),
        n,
    })
}

/// Four axis-aligned spokes of length `2 · lip · xi` around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpokeSet {
    pub center: Point2,
    pub arm: f64,
    /// `(0, +arm), (0, -arm), (+arm, 0), (-arm, 0)` offsets from the center.
    pub tips: [Point2; 4],
    pub segments: Vec<Segment>,
    /// The enlargement `lip · xi` whose `s`-neighbourhood the tips cover.
    pub enlargement: f64,
}

/// Largest `lip · xi / s` for which four tips at distance `2 lip xi` cover
/// `B(center, lip xi + s)`: the diagonal direction is the worst case and
/// gives `a ≤ (2√2 − 2) / (5 − 2√2) · s`.
pub fn spoke_ratio_limit() -> f64 {
    let r2 = std::f64::consts::SQRT_2;
    (2.0 * r2 - 2.0) / (5.0 - 2.0 * r2)
}

impl SpokeSet {
    /// `H¹` of the spokes, `4 · arm = 8 · lip · xi`.
    pub fn total_length(&self) -> f64 {
        4.0 * self.arm
    }

    /// Distinct tips (a single point when `xi = 0`).
    pub fn centers(&self) -> Vec<Point2> {
        let mut out = Vec::with_capacity(4);
        for &t in &self.tips {
            push_center(&mut out, t);
        }
        out
    }

    /// Exact worst-case gap between `s` and the distance from the enlarged
    /// disk's boundary to the nearest tip.
    pub fn min_slack(&self, s: f64) -> f64 {
        let (a, r) = (self.enlargement, self.enlargement + s);
        let d2 = r * r - 2.0 * std::f64::consts::SQRT_2 * a * r + 4.0 * a * a;
        s - d2.max(0.0).sqrt()
    }

    /// Certifies that the tips' `s`-balls cover an inscribed `sides`-gon of
    /// `B(center, lip xi + s)`.
    pub fn certify(&self, s: f64, sides: usize) -> Result<CoverageVerdict> {
        let disk = Domain::regular_polygon(self.center, self.enlargement + s, sides)?;
        let tol = (0.25 * self.min_slack(s)).max(1e-9 * s);
        coverage::certify_cover(&disk, &self.centers(), s, tol)
    }
}

pub fn spoke_cover(center: Point2, lip: f64, xi: f64, s: f64) -> Result<SpokeSet> {
    if !(lip > 0.0) || !(xi >= 0.0) || !(s > 0.0) || !center.is_finite() {
        return Err(Error::InvalidParameter(
            "spoke cover needs lip > 0, xi >= 0, s > 0".into(),
        ));
    }
    let enlargement = lip * xi;
    let arm = 2.0 * enlargement;
    if arm >= s {
        return Err(Error::InvalidParameter(format!(
            "spokes need 2·lip·xi < s, got {arm} >= {s}"
        )));
    }
    if enlargement > spoke_ratio_limit() * s {
        return Err(Error::InvalidParameter(format!(
            "lip·xi = {enlargement} exceeds {:.5}·s; the four tips no longer cover the enlarged ball",
            spoke_ratio_limit()
        )));
    }
    let tips = [
        center + Point2::new(0.0, arm),
        center + Point2::new(0.0, -arm),
        center + Point2::new(arm, 0.0),
        center + Point2::new(-arm, 0.0),
    ];
    let segments = if arm > 0.0 {
        tips.iter().map(|&t| Segment::new(center, t)).collect()
    } else {
        Vec::new()
    };
    Ok(SpokeSet {
        center,
        arm,
        tips,
        segments,
        enlargement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spanning::{kruskal_mst, steinerize};

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn unit_segment() -> Segment {
        Segment::new(p(0.0, 0.0), p(1.0, 0.0))
    }

    #[test]
    fn segment_cover_closed_forms() {
        let c = segment_prong_cover(&unit_segment(), 0.25, 10).unwrap();
        assert!((c.pieces[0].delta - 0.01).abs() < 1e-15);
        assert!((c.excess - 0.24).abs() < 1e-12);
        assert_eq!(c.centers.len(), 24);
        assert!((c.connector_length() - 1.24).abs() < 1e-12);
        let c100 = segment_prong_cover(&unit_segment(), 0.25, 100).unwrap();
        assert!((c100.excess - 0.0204).abs() < 1e-12);
    }

    #[test]
    fn segment_cover_center_layout() {
        let c = segment_prong_cover(&unit_segment(), 0.25, 10).unwrap();
        let pts = c.centers.points();
        let d = c.pieces[0].delta;
        assert_eq!(pts[0], p(-d, 0.0));
        assert_eq!(pts[1], p(0.0, d));
        assert_eq!(pts[2], p(0.0, -d));
        assert_eq!(pts[3], p(0.1, d));
        assert_eq!(pts[23], p(1.0 + d, 0.0));
        // centers are connector vertices
        for q in pts {
            assert!(c.connector.points().contains(q));
        }
    }

    #[test]
    fn segment_cover_threshold() {
        // n must exceed 1 / (0.25 √2) ≈ 2.83
        let err = segment_prong_cover(&unit_segment(), 0.25, 2).unwrap_err();
        match err {
            Error::ProngTooCoarse {
                hint,
                min_n_exclusive,
                ..
            } => {
                assert_eq!(hint, 3);
                assert!((min_n_exclusive - 2.828427).abs() < 1e-6);
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(segment_prong_cover(&unit_segment(), 0.25, 3).is_ok());
        let degenerate = Segment::new(p(1.0, 1.0), p(1.0, 1.0));
        assert!(segment_prong_cover(&degenerate, 0.25, 10).is_err());
    }

    #[test]
    fn segment_excess_halves_roughly() {
        for n in [3usize, 5, 10, 40] {
            let a = SegmentProngParams::new(1.0, 0.25, n).excess();
            let b = SegmentProngParams::new(1.0, 0.25, 2 * n).excess();
            assert!(b < a);
        }
    }

    #[test]
    fn rotated_segment_cover_certifies() {
        let seg = Segment::new(p(0.3, -0.2), p(1.1, 0.4));
        let c = segment_prong_cover(&seg, 0.3, 8).unwrap();
        let expect = SegmentProngParams::new(1.0, 0.3, 8).excess();
        assert!((c.excess - expect).abs() < 1e-12);
        assert!(c.self_certify().unwrap().is_covered());
    }

    #[test]
    fn segment_mst_versus_connector() {
        let c = segment_prong_cover(&unit_segment(), 0.25, 10).unwrap();
        let mst = kruskal_mst(&c.centers).length;
        let d = c.pieces[0].delta;
        // top row carries L; interior columns use the 2δ vertical, each end tip
        // joins both lifted end points at δ√2
        let expect = 1.0 + 2.0 * d * (9.0 + 2.0 * std::f64::consts::SQRT_2);
        assert!((mst - expect).abs() < 1e-12);
        let (_, st) = steinerize(&c.centers, 2);
        assert!(st.length <= c.connector_length() + 1e-12);
        assert!(st.length >= 1.0);
        assert!(mst <= c.connector_length());
    }

    #[test]
    fn rectangle_parameters_respect_constraints() {
        for (s, beta) in [(0.5, 0.1), (0.5, 0.05), (0.3, 0.29), (2.0, 0.01)] {
            let (n, alpha) = rectangle_parameters(s, beta);
            assert!(1.0 / (s * n as f64) <= beta);
            assert_eq!((beta / (4.0 * alpha)).floor() as usize, n);
            assert!(alpha + beta < s);
            assert!((2 * n + 2) as f64 * alpha <= beta);
        }
    }

    #[test]
    fn polyline_single_edge() {
        let poly = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).unwrap();
        let c = polyline_prong_cover(&poly, 0.5, 0.1).unwrap();
        assert!(c.excess >= 0.0);
        assert!(c.excess <= 2.0 * 0.1 * 1.0);
        for piece in &c.pieces {
            assert!(piece.rho < 1.0);
            assert!(piece.aspect() < c.alpha.unwrap());
            assert!(piece.prong_length() <= piece.rho * (1.0 + 2.0 * 0.1));
        }
        assert!(c.self_certify().unwrap().is_covered());
    }

    #[test]
    fn polyline_right_angle() {
        let poly = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)]).unwrap();
        let c = polyline_prong_cover(&poly, 0.5, 0.05).unwrap();
        assert!(c.excess <= 2.0 * 0.05 * 2.0);
        assert!(c.self_certify().unwrap().is_covered());
        let coarse = polyline_prong_cover(&poly, 0.5, 0.1).unwrap();
        let fine = polyline_prong_cover(&poly, 0.5, 0.01).unwrap();
        assert!(fine.excess < coarse.excess);
    }

    #[test]
    fn polyline_rejects_bad_beta() {
        let poly = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).unwrap();
        assert!(polyline_prong_cover(&poly, 0.5, 0.5).is_err());
        assert!(polyline_prong_cover(&poly, 0.5, 0.0).is_err());
    }

    #[test]
    fn spoke_accounting() {
        let sp = spoke_cover(p(0.0, 0.0), 0.5, 0.02, 1.0).unwrap();
        assert_eq!(sp.total_length(), 8.0 * 0.5 * 0.02);
        let summed: f64 = sp.segments.iter().map(|s| s.length()).sum();
        assert!((summed - 0.08).abs() < 1e-15);
        assert!(sp.certify(1.0, 256).unwrap().is_covered());
    }

    #[test]
    fn spoke_degenerate_and_limits() {
        let sp = spoke_cover(p(1.0, 2.0), 3.0, 0.0, 1.0).unwrap();
        assert_eq!(sp.total_length(), 0.0);
        assert_eq!(sp.centers(), vec![p(1.0, 2.0)]);
        assert!(spoke_cover(p(0.0, 0.0), 1.0, 0.45, 1.0).is_err());
        assert!(spoke_cover(p(0.0, 0.0), 1.0, 0.6, 1.0).is_err());
        assert!(spoke_cover(p(0.0, 0.0), 1.0, 0.38, 1.0).is_ok());
    }

    #[test]
    fn spoke_limit_is_tight() {
        // just past the limit the diagonal boundary point escapes every tip
        let s = 1.0;
        let a = spoke_ratio_limit() * s * 1.02;
        let r = a + s;
        let q = Point2::new(r / 2f64.sqrt(), r / 2f64.sqrt());
        let tips = [
            p(0.0, 2.0 * a),
            p(0.0, -2.0 * a),
            p(2.0 * a, 0.0),
            p(-2.0 * a, 0.0),
        ];
        let nearest = tips.iter().map(|t| t.dist(q)).fold(f64::INFINITY, f64::min);
        assert!(nearest > s);
        let a = spoke_ratio_limit() * s * 0.98;
        let r = a + s;
        let q = Point2::new(r / 2f64.sqrt(), r / 2f64.sqrt());
        assert!(Point2::new(2.0 * a, 0.0).dist(q) < s);
    }
}
