//! Certified coverage decisions and certified sup-distance enclosures.
//!
//! Both procedures walk a quadtree over the region. A cell with center `c`
//! and half-diagonal `r` satisfies `dist(x, K) <= dist(c, K) + r` for every
//! `x` in the cell because distance to a set is 1-Lipschitz, so a cell is
//! settled once `dist(c, K) + r <= s`. Cells are dropped only when they are
//! provably disjoint from the region.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist_point_segment, Bbox, Domain, Point2, Segment, Tree};
use crate::spanning::CenterSet;

/// The set whose neighbourhood must cover the region.
#[derive(Debug, Clone, Copy)]
pub enum Shape<'a> {
    Points(&'a [Point2]),
    Tree(&'a Tree),
}

impl<'a> Shape<'a> {
    fn elements(&self) -> Vec<Segment> {
        match self {
            Shape::Points(p) => p.iter().map(|&q| Segment::new(q, q)).collect(),
            Shape::Tree(t) => t.distance_elements(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Shape::Points(p) => p.is_empty(),
            Shape::Tree(t) => t.is_empty(),
        }
    }

    /// Exact distance from `p` to the shape (`+inf` when empty).
    pub fn distance(&self, p: Point2) -> f64 {
        self.elements()
            .iter()
            .map(|e| dist_point_segment(p, e))
            .fold(f64::INFINITY, f64::min)
    }
}

impl<'a> From<&'a CenterSet> for Shape<'a> {
    fn from(c: &'a CenterSet) -> Self {
        Shape::Points(c.points())
    }
}

impl<'a> From<&'a [Point2]> for Shape<'a> {
    fn from(p: &'a [Point2]) -> Self {
        Shape::Points(p)
    }
}

impl<'a> From<&'a Vec<Point2>> for Shape<'a> {
    fn from(p: &'a Vec<Point2>) -> Self {
        Shape::Points(p)
    }
}

impl<'a> From<&'a Tree> for Shape<'a> {
    fn from(t: &'a Tree) -> Self {
        Shape::Tree(t)
    }
}

/// Compact set to be covered.
#[derive(Debug, Clone)]
pub enum Region<'a> {
    Domain(&'a Domain),
    /// Closed neighbourhood `B(elements, radius)` of a finite union of
    /// segments (points are degenerate segments).
    Neighborhood {
        elements: Vec<Segment>,
        radius: f64,
    },
}

impl<'a> Region<'a> {
    pub fn neighborhood(shape: Shape<'_>, radius: f64) -> Region<'static> {
        Region::Neighborhood {
            elements: shape.elements(),
            radius,
        }
    }

    fn bbox(&self) -> Bbox {
        match self {
            Region::Domain(d) => d.bbox(),
            Region::Neighborhood { elements, radius } => {
                Bbox::of_points(elements.iter().flat_map(|e| [&e.a, &e.b]))
                    .expect("nonempty neighbourhood")
                    .expand(*radius)
            }
        }
    }

    fn segments(&self) -> Vec<Segment> {
        match self {
            Region::Domain(d) => d.edges(),
            Region::Neighborhood { elements, .. } => elements.clone(),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Region::Domain(d) => d.contains(p),
            Region::Neighborhood { elements, radius } => {
                elements.iter().any(|e| dist_point_segment(p, e) <= *radius)
            }
        }
    }

    /// Representative points known to lie in the region.
    fn seeds(&self) -> Vec<Point2> {
        match self {
            Region::Domain(d) => d.vertices().copied().collect(),
            Region::Neighborhood { elements, .. } => {
                elements.iter().flat_map(|e| [e.a, e.b]).collect()
            }
        }
    }
}

impl<'a> From<&'a Domain> for Region<'a> {
    fn from(d: &'a Domain) -> Self {
        Region::Domain(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverStatus {
    Covered,
    Uncovered,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageVerdict {
    pub status: CoverStatus,
    /// A point of the region farther than `s` from the shape; present iff
    /// `status == Uncovered`.
    pub witness: Option<Point2>,
    /// Covered: certified slack `s - max upper bound`. Uncovered: excess
    /// `dist(witness) - s`. Unknown: the most negative unresolved slack.
    pub margin: f64,
    pub tolerance: f64,
    /// Quadtree cells examined.
    pub cells: usize,
}

impl CoverageVerdict {
    pub fn is_covered(&self) -> bool {
        self.status == CoverStatus::Covered
    }
}

/// Enclosure `[lo, hi]` of a supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistInterval {
    pub lo: f64,
    pub hi: f64,
}

impl DistInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Default certification tolerance for a domain: `1e-6 × diameter`.
pub fn default_tolerance(d: &Domain) -> f64 {
    1e-6 * d.diameter()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Placement {
    Outside,
    Inside,
    Mixed,
}

struct Cell {
    center: Point2,
    half: f64,
    shape_cand: Vec<u32>,
    region_cand: Vec<u32>,
}

impl Cell {
    fn radius(&self) -> f64 {
        self.half * std::f64::consts::SQRT_2
    }

    /// Children in NW, NE, SW, SE order.
    fn children(&self, shape_cand: &[u32], region_cand: &[u32]) -> [Cell; 4] {
        let h = self.half * 0.5;
        let c = self.center;
        [(-h, h), (h, h), (-h, -h), (h, -h)].map(|(dx, dy)| Cell {
            center: Point2::new(c.x + dx, c.y + dy),
            half: h,
            shape_cand: shape_cand.to_vec(),
            region_cand: region_cand.to_vec(),
        })
    }
}

struct Evaluator<'r, 'a> {
    region: &'r Region<'a>,
    region_segs: Vec<Segment>,
    shape: Vec<Segment>,
    clip: Option<(Point2, f64)>,
}

struct CellEval {
    placement: Placement,
    dist: f64,
    shape_next: Vec<u32>,
    region_next: Vec<u32>,
}

impl<'r, 'a> Evaluator<'r, 'a> {
    fn new(region: &'r Region<'a>, shape: Shape<'_>, clip: Option<(Point2, f64)>) -> Self {
        Evaluator {
            region,
            region_segs: region.segments(),
            shape: shape.elements(),
            clip,
        }
    }

    fn root(&self) -> Cell {
        let mut b = self.region.bbox();
        if let Some((c, rad)) = self.clip {
            b.min.x = b.min.x.max(c.x - rad);
            b.min.y = b.min.y.max(c.y - rad);
            b.max.x = b.max.x.min(c.x + rad);
            b.max.y = b.max.y.min(c.y + rad);
        }
        let half = 0.5 * b.width().max(b.height()).max(0.0);
        // A zero-size root still needs a positive radius to subdivide.
        let half = if half > 0.0 {
            half * (1.0 + 1e-9)
        } else {
            1e-300
        };
        Cell {
            center: b.center(),
            half,
            shape_cand: (0..self.shape.len() as u32).collect(),
            region_cand: (0..self.region_segs.len() as u32).collect(),
        }
    }

    fn shape_distance(&self, p: Point2) -> f64 {
        self.shape
            .iter()
            .map(|e| dist_point_segment(p, e))
            .fold(f64::INFINITY, f64::min)
    }

    fn eval(&self, cell: &Cell) -> CellEval {
        let c = cell.center;
        let r = cell.radius();

        if let Some((cc, rad)) = self.clip {
            if c.dist(cc) - r > rad {
                return CellEval {
                    placement: Placement::Outside,
                    dist: f64::INFINITY,
                    shape_next: Vec::new(),
                    region_next: Vec::new(),
                };
            }
        }

        let (placement, region_next) = match self.region {
            Region::Domain(d) => {
                let near: Vec<u32> = cell
                    .region_cand
                    .iter()
                    .copied()
                    .filter(|&k| dist_point_segment(c, &self.region_segs[k as usize]) <= r)
                    .collect();
                if near.is_empty() {
                    let p = if d.contains(c) {
                        Placement::Inside
                    } else {
                        Placement::Outside
                    };
                    (p, near)
                } else {
                    (Placement::Mixed, near)
                }
            }
            Region::Neighborhood { radius, .. } => {
                let (dmin, next) = nearest_filter(c, r, &cell.region_cand, &self.region_segs);
                let p = if dmin - r > *radius {
                    Placement::Outside
                } else if dmin + r <= *radius {
                    Placement::Inside
                } else {
                    Placement::Mixed
                };
                (p, next)
            }
        };
        if placement == Placement::Outside {
            return CellEval {
                placement,
                dist: f64::INFINITY,
                shape_next: Vec::new(),
                region_next: Vec::new(),
            };
        }
        let (dist, shape_next) = nearest_filter(c, r, &cell.shape_cand, &self.shape);
        CellEval {
            placement,
            dist,
            shape_next,
            region_next,
        }
    }

    /// A region point inside `cell` other than its center, for mixed cells
    /// whose center fell outside: the nearest point on a nearby region
    /// boundary element, accepted only if exact membership confirms it.
    fn boundary_probe(&self, cell: &Cell, region_next: &[u32]) -> Option<Point2> {
        let c = cell.center;
        let seg = region_next
            .iter()
            .map(|&k| &self.region_segs[k as usize])
            .min_by(|a, b| dist_point_segment(c, a).total_cmp(&dist_point_segment(c, b)))?;
        let q = match self.region {
            Region::Domain(_) => seg.closest_point(c),
            Region::Neighborhood { radius, .. } => {
                let foot = seg.closest_point(c);
                match (c - foot).normalized() {
                    Some(u) => foot + u * *radius,
                    None => foot,
                }
            }
        };
        let in_clip = self.clip.is_none_or(|(cc, rad)| q.dist(cc) <= rad);
        (in_clip && self.region.contains(q)).then_some(q)
    }
}

/// Minimum distance over candidates, plus the candidates that can still be
/// nearest for some point within `r` of `c`.
fn nearest_filter(c: Point2, r: f64, cand: &[u32], elems: &[Segment]) -> (f64, Vec<u32>) {
    let ds: Vec<f64> = cand
        .iter()
        .map(|&k| dist_point_segment(c, &elems[k as usize]))
        .collect();
    let dmin = ds.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = dmin + 2.0 * r;
    let next = cand
        .iter()
        .zip(&ds)
        .filter(|(_, &d)| d <= cut)
        .map(|(&k, _)| k)
        .collect();
    (dmin, next)
}

fn check_args(shape: &Shape<'_>, s: f64, tol: f64) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s must be > 0, got {s}")));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    Ok(())
}

/// Decides `E ⊆ B(shape, s)` for a polygonal domain.
pub fn certify_cover<'s>(
    d: &Domain,
    shape: impl Into<Shape<'s>>,
    s: f64,
    tol: f64,
) -> Result<CoverageVerdict> {
    certify_cover_region(&Region::Domain(d), shape, s, tol)
}

pub fn certify_cover_region<'s>(
    region: &Region<'_>,
    shape: impl Into<Shape<'s>>,
    s: f64,
    tol: f64,
) -> Result<CoverageVerdict> {
    run_certify(region, shape.into(), s, tol, None)
}

/// Like [`certify_cover_region`] but only for the part of the region inside
/// the closed disk `B(center, radius)`.
pub fn certify_cover_in_disk<'s>(
    region: &Region<'_>,
    shape: impl Into<Shape<'s>>,
    s: f64,
    tol: f64,
    center: Point2,
    radius: f64,
) -> Result<CoverageVerdict> {
    run_certify(region, shape.into(), s, tol, Some((center, radius)))
}

fn run_certify(
    region: &Region<'_>,
    shape: Shape<'_>,
    s: f64,
    tol: f64,
    clip: Option<(Point2, f64)>,
) -> Result<CoverageVerdict> {
    check_args(&shape, s, tol)?;
    let ev = Evaluator::new(region, shape, clip);
    let mut stack = vec![ev.root()];
    let mut cells = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut unknown_slack: Option<f64> = None;

    while let Some(cell) = stack.pop() {
        cells += 1;
        let e = ev.eval(&cell);
        if e.placement == Placement::Outside {
            continue;
        }
        let r = cell.radius();
        let slack = s - (e.dist + r);
        if slack >= 0.0 {
            min_slack = min_slack.min(slack);
            continue;
        }
        if e.dist > s {
            let in_clip = ev.clip.is_none_or(|(cc, rad)| cell.center.dist(cc) <= rad);
            if in_clip && (e.placement == Placement::Inside || region.contains(cell.center)) {
                return Ok(CoverageVerdict {
                    status: CoverStatus::Uncovered,
                    witness: Some(cell.center),
                    margin: e.dist - s,
                    tolerance: tol,
                    cells,
                });
            }
        }
        if e.placement == Placement::Mixed && e.dist + r > s {
            if let Some(q) = ev.boundary_probe(&cell, &e.region_next) {
                let dq = ev.shape_distance(q);
                if dq > s {
                    return Ok(CoverageVerdict {
                        status: CoverStatus::Uncovered,
                        witness: Some(q),
                        margin: dq - s,
                        tolerance: tol,
                        cells,
                    });
                }
            }
        }
        if 2.0 * r <= tol {
            unknown_slack = Some(unknown_slack.map_or(slack, |u: f64| u.min(slack)));
            continue;
        }
        let [nw, ne, sw, se] = cell.children(&e.shape_next, &e.region_next);
        stack.extend([se, sw, ne, nw]);
    }

    Ok(match unknown_slack {
        Some(u) => CoverageVerdict {
            status: CoverStatus::Unknown,
            witness: None,
            margin: u,
            tolerance: tol,
            cells,
        },
        None => CoverageVerdict {
            status: CoverStatus::Covered,
            witness: None,
            margin: if min_slack.is_finite() { min_slack } else { s },
            tolerance: tol,
            cells,
        },
    })
}

struct Queued {
    ub: f64,
    seq: usize,
    cell: Cell,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        self.ub.total_cmp(&o.ub).then(o.seq.cmp(&self.seq))
    }
}

/// Encloses `sup_{x ∈ E} dist(x, shape)` within `tol`.
pub fn max_distance<'s>(d: &Domain, shape: impl Into<Shape<'s>>, tol: f64) -> Result<DistInterval> {
    max_distance_region(&Region::Domain(d), shape, tol)
}

pub fn max_distance_region<'s>(
    region: &Region<'_>,
    shape: impl Into<Shape<'s>>,
    tol: f64,
) -> Result<DistInterval> {
    let shape = shape.into();
    check_args(&shape, 1.0, tol)?;
    let ev = Evaluator::new(region, shape, None);
    let mut lo = region
        .seeds()
        .into_iter()
        .map(|p| ev.shape_distance(p))
        .fold(0.0, f64::max);
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let root = ev.root();
    let min_radius = root.radius() * 1e-12;
    heap.push(Queued {
        ub: f64::INFINITY,
        seq,
        cell: root,
    });
    while let Some(Queued { ub, cell, .. }) = heap.pop() {
        if ub - lo <= tol {
            return Ok(DistInterval { lo, hi: ub.max(lo) });
        }
        let e = ev.eval(&cell);
        if e.placement == Placement::Outside {
            continue;
        }
        let r = cell.radius();
        if e.placement == Placement::Inside || region.contains(cell.center) {
            lo = lo.max(e.dist);
        } else if let Some(q) = ev.boundary_probe(&cell, &e.region_next) {
            lo = lo.max(ev.shape_distance(q));
        }
        let cell_ub = e.dist + r;
        if cell_ub <= lo {
            continue;
        }
        if r < min_radius {
            return Err(Error::ToleranceNotReached {
                tol,
                width: cell_ub - lo,
            });
        }
        for child in cell.children(&e.shape_next, &e.region_next) {
            seq += 1;
            heap.push(Queued {
                ub: cell_ub,
                seq,
                cell: child,
            });
        }
    }
    Ok(DistInterval { lo, hi: lo })
}

/// Smallest radius at which `shape` covers the region, enclosed within
/// `tol`; the same quantity as [`max_distance`].
pub fn min_cover_radius<'s>(
    d: &Domain,
    shape: impl Into<Shape<'s>>,
    tol: f64,
) -> Result<DistInterval> {
    max_distance(d, shape, tol)
}
