//! Planar primitives: points, segments, polylines, trees, and polygonal
//! domains with holes.
//!
//! Distances are plain `f64` arithmetic. Membership and ring validation go
//! through exact orientation predicates so that the in/out answer for a
//! point on or near a domain edge never depends on round-off.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise rotation by `angle` radians about the origin.
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    /// Left-hand perpendicular.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Exact sign of the orientation of `(a, b, c)`: positive when the triple
/// turns counterclockwise, zero when collinear.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    let coord = |p: Point2| robust::Coord { x: p.x, y: p.y };
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Closed segment `[a, b]`. `a == b` is allowed and behaves as a point in
/// distance queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    pub fn closest_point(&self, p: Point2) -> Point2 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        self.a + d * t
    }

    /// True when `p` lies on the closed segment, decided exactly.
    pub fn contains(&self, p: Point2) -> bool {
        orient(self.a, self.b, p) == 0.0
            && p.x >= self.a.x.min(self.b.x)
            && p.x <= self.a.x.max(self.b.x)
            && p.y >= self.a.y.min(self.b.y)
            && p.y <= self.a.y.max(self.b.y)
    }

    /// Exact closed-segment intersection test (touching counts).
    pub fn intersects(&self, o: &Segment) -> bool {
        let d1 = orient(o.a, o.b, self.a);
        let d2 = orient(o.a, o.b, self.b);
        let d3 = orient(self.a, self.b, o.a);
        let d4 = orient(self.a, self.b, o.b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && o.contains(self.a))
            || (d2 == 0.0 && o.contains(self.b))
            || (d3 == 0.0 && self.contains(o.a))
            || (d4 == 0.0 && self.contains(o.b))
    }
}

pub fn dist_point_segment(p: Point2, s: &Segment) -> f64 {
    p.dist(s.closest_point(p))
}

/// Piecewise-linear curve through at least two distinct consecutive
/// vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polyline {
    vertices: Vec<Point2>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidParameter(
                "polyline needs at least 2 vertices".into(),
            ));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("polyline"));
        }
        if let Some(i) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "polyline vertices {i} and {} coincide",
                i + 1
            )));
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices.windows(2).map(|w| Segment::new(w[0], w[1]))
    }
}

impl TryFrom<Vec<Point2>> for Polyline {
    type Error = Error;
    fn try_from(v: Vec<Point2>) -> Result<Self> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Point2> {
    fn from(p: Polyline) -> Self {
        p.vertices
    }
}

/// Undirected acyclic, connected edge list over a point set.
///
/// The empty tree (no points) is representable so that callers can hold
/// "no tree yet"; distance queries on it fail with [`Error::EmptyGeometry`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct Tree {
    points: Vec<Point2>,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    points: Vec<Point2>,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<TreeRepr> for Tree {
    type Error = Error;
    fn try_from(r: TreeRepr) -> Result<Self> {
        Tree::new(r.points, r.edges)
    }
}

impl From<Tree> for TreeRepr {
    fn from(t: Tree) -> Self {
        TreeRepr {
            points: t.points,
            edges: t.edges,
        }
    }
}

impl Tree {
    pub fn new(points: Vec<Point2>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("tree"));
        }
        let n = points.len();
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &edges {
            if i >= n || j >= n {
                return Err(Error::InvalidTree(format!("edge ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::InvalidTree(format!("self loop at {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidTree(format!("duplicate edge ({i}, {j})")));
            }
        }
        if n > 1 && edges.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "{n} points need {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        if n <= 1 && !edges.is_empty() {
            return Err(Error::InvalidTree("edges on a single point".into()));
        }
        let mut uf = crate::spanning::UnionFind::new(n);
        for &(i, j) in &edges {
            if !uf.union(i, j) {
                return Err(Error::InvalidTree(format!(
                    "edge ({i}, {j}) closes a cycle"
                )));
            }
        }
        Ok(Tree { points, edges })
    }

    pub fn single(p: Point2) -> Self {
        Tree {
            points: vec![p],
            edges: Vec::new(),
        }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.edges
            .iter()
            .map(|&(i, j)| Segment::new(self.points[i], self.points[j]))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.points.len()];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Every edge as a (possibly degenerate) segment; a single-point tree
    /// yields one degenerate segment so distance queries see the point.
    pub(crate) fn distance_elements(&self) -> Vec<Segment> {
        if self.edges.is_empty() {
            self.points.iter().map(|&p| Segment::new(p, p)).collect()
        } else {
            self.segments().collect()
        }
    }
}

pub fn dist_point_tree(p: Point2, t: &Tree) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    Ok(t.distance_elements()
        .iter()
        .map(|s| dist_point_segment(p, s))
        .fold(f64::INFINITY, f64::min))
}

/// One-dimensional Hausdorff measure of an embedded piecewise-linear set.
pub trait H1Length {
    fn h1_length(&self) -> f64;
}

impl H1Length for Segment {
    fn h1_length(&self) -> f64 {
        self.length()
    }
}

impl H1Length for Polyline {
    fn h1_length(&self) -> f64 {
        self.segments().map(|s| s.length()).fold(0.0, |a, b| a + b)
    }
}

impl H1Length for Tree {
    fn h1_length(&self) -> f64 {
        self.segments().map(|s| s.length()).fold(0.0, |a, b| a + b)
    }
}

pub fn h1_length<T: H1Length + ?Sized>(t: &T) -> f64 {
    t.h1_length()
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[Point2], b: &[Point2]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    let directed = |from: &[Point2], to: &[Point2]| {
        from.iter()
            .map(|p| to.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub min: Point2,
    pub max: Point2,
}

impl Bbox {
    pub fn of_points<'a>(pts: impl IntoIterator<Item = &'a Point2>) -> Option<Bbox> {
        let mut it = pts.into_iter();
        let first = *it.next()?;
        let mut b = Bbox {
            min: first,
            max: first,
        };
        for p in it {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    pub fn expand(&self, r: f64) -> Bbox {
        Bbox {
            min: self.min - Point2::new(r, r),
            max: self.max + Point2::new(r, r),
        }
    }

    pub fn center(&self) -> Point2 {
        self.min.lerp(self.max, 0.5)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.min.dist(self.max)
    }
}

fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| ring[i].cross(ring[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

fn ring_edges(ring: &[Point2]) -> impl Iterator<Item = Segment> + '_ {
    let n = ring.len();
    (0..n).map(move |i| Segment::new(ring[i], ring[(i + 1) % n]))
}

/// Where a point sits relative to a closed ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RingSide {
    Inside,
    On,
    Outside,
}

fn ring_side(ring: &[Point2], p: Point2) -> RingSide {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let o = orient(a, b, p);
        if o == 0.0 && Segment::new(a, b).contains(p) {
            return RingSide::On;
        }
        if (a.y > p.y) != (b.y > p.y) {
            // Upward edge with p on its left, or downward edge with p on its
            // right, crosses the rightward ray from p.
            if (b.y > a.y && o > 0.0) || (b.y < a.y && o < 0.0) {
                inside = !inside;
            }
        }
    }
    if inside {
        RingSide::Inside
    } else {
        RingSide::Outside
    }
}

fn validate_ring(ring: &mut Vec<Point2>, index: usize) -> Result<()> {
    if ring.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("domain ring"));
    }
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::InvalidRing {
            ring: index,
            vertex: ring.len(),
            reason: "fewer than 3 vertices".into(),
        });
    }
    let n = ring.len();
    for i in 0..n {
        if ring[i] == ring[(i + 1) % n] {
            return Err(Error::InvalidRing {
                ring: index,
                vertex: (i + 1) % n,
                reason: "repeated vertex".into(),
            });
        }
    }
    for i in 0..n {
        let ei = Segment::new(ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            let ej = Segment::new(ring[j], ring[(j + 1) % n]);
            let adjacent_fwd = j == i + 1;
            let adjacent_wrap = i == 0 && j == n - 1;
            let bad = if adjacent_fwd {
                // Shared vertex ring[j]; folding back makes an endpoint land
                // on the other edge.
                ei.contains(ej.b) || ej.contains(ei.a)
            } else if adjacent_wrap {
                ej.contains(ei.b) || ei.contains(ej.a)
            } else {
                ei.intersects(&ej)
            };
            if bad {
                return Err(Error::SelfIntersection {
                    ring: index,
                    edge_a: i,
                    edge_b: j,
                });
            }
        }
    }
    if signed_area(ring) == 0.0 {
        return Err(Error::InvalidRing {
            ring: index,
            vertex: 0,
            reason: "zero area".into(),
        });
    }
    Ok(())
}

/// Compact region bounded by a simple polygon with disjoint polygonal holes.
/// Boundary is stored counterclockwise, holes clockwise, rings open (the
/// closing edge is implicit).
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    boundary: Vec<Point2>,
    holes: Vec<Vec<Point2>>,
}

impl Domain {
    pub fn new(mut boundary: Vec<Point2>, mut holes: Vec<Vec<Point2>>) -> Result<Self> {
        validate_ring(&mut boundary, 0)?;
        if signed_area(&boundary) < 0.0 {
            boundary.reverse();
        }
        for (k, hole) in holes.iter_mut().enumerate() {
            validate_ring(hole, k + 1)?;
            if signed_area(hole) > 0.0 {
                hole.reverse();
            }
        }
        for (k, hole) in holes.iter().enumerate() {
            for (v, &p) in hole.iter().enumerate() {
                if ring_side(&boundary, p) != RingSide::Inside {
                    return Err(Error::HoleOutside {
                        ring: k + 1,
                        hole: k,
                        vertex: v,
                    });
                }
            }
            for (v, e) in ring_edges(hole).enumerate() {
                if ring_edges(&boundary).any(|b| b.intersects(&e)) {
                    return Err(Error::HoleOutside {
                        ring: k + 1,
                        hole: k,
                        vertex: v,
                    });
                }
            }
        }
        for i in 0..holes.len() {
            for j in i + 1..holes.len() {
                let crossing =
                    ring_edges(&holes[i]).any(|a| ring_edges(&holes[j]).any(|b| a.intersects(&b)));
                let nested = ring_side(&holes[j], holes[i][0]) != RingSide::Outside
                    || ring_side(&holes[i], holes[j][0]) != RingSide::Outside;
                if crossing || nested {
                    return Err(Error::HolesOverlap(i, j));
                }
            }
        }
        Ok(Domain { boundary, holes })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Domain::new(
            vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
            Vec::new(),
        )
    }

    /// Regular `k`-gon inscribed in the circle of the given radius.
    pub fn regular_polygon(center: Point2, circumradius: f64, k: usize) -> Result<Self> {
        let ring = (0..k)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / k as f64;
                center + Point2::new(t.cos(), t.sin()) * circumradius
            })
            .collect();
        Domain::new(ring, Vec::new())
    }

    /// Inscribed polygonization of the closed `s`-neighborhood of a segment:
    /// a rectangle capped by two semicircles of `arcs` chords each.
    pub fn stadium(seg: &Segment, s: f64, arcs: usize) -> Result<Self> {
        let u = (seg.b - seg.a).normalized().ok_or_else(|| {
            Error::InvalidParameter("stadium needs a segment of positive length".into())
        })?;
        if !(s > 0.0) || arcs == 0 {
            return Err(Error::InvalidParameter(
                "stadium needs s > 0 and arcs >= 1".into(),
            ));
        }
        let v = u.perp();
        let mut ring = Vec::with_capacity(2 * arcs + 2);
        let cap = |c: Point2, start: f64, ring: &mut Vec<Point2>| {
            for k in 0..=arcs {
                let t = start + std::f64::consts::PI * k as f64 / arcs as f64;
                ring.push(c + (u * t.cos() + v * t.sin()) * s);
            }
        };
        cap(seg.b, -std::f64::consts::FRAC_PI_2, &mut ring);
        cap(seg.a, std::f64::consts::FRAC_PI_2, &mut ring);
        Domain::new(ring, Vec::new())
    }

    pub fn boundary(&self) -> &[Point2] {
        &self.boundary
    }

    pub fn holes(&self) -> &[Vec<Point2>] {
        &self.holes
    }

    /// Boundary first, then holes.
    pub fn rings(&self) -> impl Iterator<Item = &[Point2]> {
        std::iter::once(self.boundary.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    pub fn edges(&self) -> Vec<Segment> {
        self.rings().flat_map(ring_edges).collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Point2> {
        self.rings().flatten()
    }

    pub fn bbox(&self) -> Bbox {
        Bbox::of_points(&self.boundary).expect("validated ring is nonempty")
    }

    /// Largest distance between two points of the domain (attained at
    /// boundary vertices).
    pub fn diameter(&self) -> f64 {
        let b = &self.boundary;
        let mut d: f64 = 0.0;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                d = d.max(b[i].dist(b[j]));
            }
        }
        d
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.boundary) + self.holes.iter().map(|h| signed_area(h)).sum::<f64>()
    }

    /// Closed-set membership: boundary and hole edges belong to the domain,
    /// hole interiors do not.
    pub fn contains(&self, p: Point2) -> bool {
        match ring_side(&self.boundary, p) {
            RingSide::Outside => false,
            RingSide::On => true,
            RingSide::Inside => self
                .holes
                .iter()
                .all(|h| ring_side(h, p) != RingSide::Inside),
        }
    }

    /// Applies `f` to every vertex and revalidates.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Result<Domain> {
        Domain::new(
            self.boundary.iter().map(|&p| f(p)).collect(),
            self.holes
                .iter()
                .map(|h| h.iter().map(|&p| f(p)).collect())
                .collect(),
        )
    }
}

pub fn point_in_domain(p: Point2, d: &Domain) -> bool {
    d.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn segment_distance_cases() {
        let s = Segment::new(p(-1.0, 0.0), p(1.0, 0.0));
        assert_eq!(dist_point_segment(p(0.0, 1.0), &s), 1.0);
        assert_eq!(dist_point_segment(p(2.0, 0.0), &s), 1.0);
        let degenerate = Segment::new(p(0.0, 0.0), p(0.0, 0.0));
        assert_eq!(dist_point_segment(p(3.0, 4.0), &degenerate), 5.0);
    }

    #[test]
    fn tree_distance_cases() {
        let t = Tree::new(vec![p(-1.0, 0.0), p(1.0, 0.0)], vec![(0, 1)]).unwrap();
        assert_eq!(dist_point_tree(p(0.0, 2.0), &t).unwrap(), 2.0);
        assert_eq!(dist_point_tree(p(1.0, 0.0), &t).unwrap(), 0.0);
        assert_eq!(
            dist_point_tree(p(0.0, 0.0), &Tree::default()),
            Err(Error::EmptyGeometry)
        );
    }

    #[test]
    fn l_shape_distance_matches_dense_sampling() {
        let t = Tree::new(
            vec![p(0.0, 0.0), p(2.0, 0.0), p(0.0, 2.0)],
            vec![(0, 1), (0, 2)],
        )
        .unwrap();
        let q = p(1.0, 1.0);
        let mut oracle = f64::INFINITY;
        for seg in t.segments() {
            for k in 0..=20_000 {
                let x = seg.a.lerp(seg.b, k as f64 / 20_000.0);
                oracle = oracle.min(q.dist(x));
            }
        }
        assert!((oracle - 1.0).abs() < 1e-12);
        assert!((dist_point_tree(q, &t).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn lengths() {
        let path = Tree::new(
            vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)],
            vec![(0, 1), (1, 2), (2, 3)],
        )
        .unwrap();
        assert_eq!(h1_length(&path), 3.0);
        assert_eq!(h1_length(&Tree::single(p(2.0, 2.0))), 0.0);
    }

    #[test]
    fn hausdorff_cases() {
        assert_eq!(
            hausdorff_distance(&[p(0.0, 0.0)], &[p(3.0, 4.0)]).unwrap(),
            5.0
        );
        let a = [p(0.0, 0.0), p(1.0, 0.0)];
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        // pairs: (0,0)-(0,1)=1, (1,0)-(0,1)=sqrt2; directed a->b = sqrt2, b->a = 1
        let h = hausdorff_distance(&a, &[p(0.0, 1.0)]).unwrap();
        assert_eq!(h, 2f64.sqrt());
        assert_eq!(hausdorff_distance(&[], &a), Err(Error::EmptyGeometry));
    }

    #[test]
    fn tree_rejects_cycles_and_duplicates() {
        let pts = vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(Tree::new(pts.clone(), vec![(0, 1), (1, 0)]).is_err());
        assert!(Tree::new(pts.clone(), vec![(0, 1)]).is_err());
        assert!(Tree::new(pts, vec![(0, 1), (1, 2)]).is_ok());
    }

    fn square_with_hole() -> Domain {
        Domain::new(
            vec![p(0.0, 0.0), p(4.0, 0.0), p(4.0, 4.0), p(0.0, 4.0)],
            vec![vec![p(1.5, 1.5), p(2.5, 1.5), p(2.5, 2.5), p(1.5, 2.5)]],
        )
        .unwrap()
    }

    #[test]
    fn membership_closed_convention() {
        let d = square_with_hole();
        assert!(d.contains(p(0.5, 0.5)));
        assert!(!d.contains(p(2.0, 2.0)));
        assert!(d.contains(p(4.0, 2.0)));
        assert!(d.contains(p(0.0, 0.0)));
        assert!(d.contains(p(1.5, 2.0)));
        assert!(!d.contains(p(4.0 + 1e-15, 2.0)));
        assert!(!d.contains(p(-1.0, 2.0)));
        let tri = Domain::new(vec![p(0.0, 0.0), p(3.0, 0.0), p(0.0, 3.0)], vec![]).unwrap();
        assert!(tri.contains(p(1.0, 1.0)));
        // exactly on the hypotenuse, representable
        assert!(tri.contains(p(1.5, 1.5)));
        assert!(!tri.contains(p(1.5, 1.5 + 1e-15)));
    }

    #[test]
    fn orientation_is_normalized() {
        let d = square_with_hole();
        assert!(signed_area(d.boundary()) > 0.0);
        assert!(signed_area(&d.holes()[0]) < 0.0);
        assert_eq!(d.area(), 15.0);
    }

    #[test]
    fn bow_tie_rejected_with_crossing_edges() {
        let err = Domain::new(
            vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)],
            vec![],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::SelfIntersection {
                ring: 0,
                edge_a: 0,
                edge_b: 2
            }
        );
    }

    #[test]
    fn hole_validation() {
        let outer = vec![p(0.0, 0.0), p(4.0, 0.0), p(4.0, 4.0), p(0.0, 4.0)];
        let poking = vec![p(3.0, 1.0), p(5.0, 1.0), p(5.0, 2.0), p(3.0, 2.0)];
        assert!(matches!(
            Domain::new(outer.clone(), vec![poking]),
            Err(Error::HoleOutside { ring: 1, .. })
        ));
        let h1 = vec![p(1.0, 1.0), p(2.0, 1.0), p(2.0, 2.0), p(1.0, 2.0)];
        let h2 = vec![p(1.5, 1.5), p(3.0, 1.5), p(3.0, 3.0), p(1.5, 3.0)];
        assert_eq!(
            Domain::new(outer, vec![h1, h2]),
            Err(Error::HolesOverlap(0, 1))
        );
    }

    #[test]
    fn degenerate_rings_rejected() {
        assert!(matches!(
            Domain::new(vec![p(0.0, 0.0), p(1.0, 0.0)], vec![]),
            Err(Error::InvalidRing { ring: 0, .. })
        ));
        assert!(Domain::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)], vec![]).is_err());
        // closing vertex repeated is accepted and dropped
        let d = Domain::new(
            vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(0.0, 0.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(d.boundary().len(), 3);
    }

    #[test]
    fn stadium_shape() {
        let seg = Segment::new(p(0.0, 0.0), p(1.0, 0.0));
        let d = Domain::stadium(&seg, 0.25, 64).unwrap();
        assert_eq!(d.boundary().len(), 130);
        assert!(d.contains(p(-0.25 + 1e-12, 0.0)));
        assert!(d.contains(p(1.25 - 1e-12, 0.0)));
        assert!(!d.contains(p(1.25 + 1e-12, 0.0)));
        assert!(d.contains(p(0.5, 0.25)));
        assert!(!d.contains(p(0.5, 0.2500001)));
        let expect = 0.5 + 0.25f64.powi(2) * 64.0 * (std::f64::consts::PI / 64.0).sin();
        assert!((d.area() - expect).abs() < 1e-12);
    }
}
