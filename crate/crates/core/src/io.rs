//! `.mdp.json` files and SVG rendering.
//!
//! All documents are JSON objects tagged with `format` and `version`. Saved
//! documents use one canonical layout (two-space indent, `[x, y]` pairs on
//! one line, shortest round-trip number formatting), so saving a loaded
//! document is a fixpoint.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constructive::ProngCover;
use crate::coverage::CoverageVerdict;
use crate::error::{Error, Result};
use crate::geom::{Bbox, Domain, Point2, Polyline, Segment, Tree};
use crate::optimizer::{ConfigState, OptimizerParams};
use crate::spanning::kruskal_points;

pub const VERSION: u32 = 1;
pub const DOMAIN_FORMAT: &str = "mdp-domain";
pub const SCENARIO_FORMAT: &str = "mdp-scenario";
pub const CENTERS_FORMAT: &str = "mdp-centers";
pub const TREE_FORMAT: &str = "mdp-tree";
pub const POLYLINE_FORMAT: &str = "mdp-polyline";

#[derive(Debug, Clone, PartialEq)]
pub struct DomainFile {
    pub name: Option<String>,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSource {
    Inline(DomainFile),
    /// Path relative to the scenario file.
    Path(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub domain: DomainSource,
    pub s: f64,
    pub centers: Vec<Point2>,
    pub optimizer: Option<OptimizerParams>,
}

/// Anything whose neighbourhood can be checked against a domain.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeFile {
    Centers {
        centers: Vec<Point2>,
        s: Option<f64>,
    },
    Tree(Tree),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainDoc {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    boundary: Vec<Point2>,
    #[serde(default)]
    holes: Vec<Vec<Point2>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DomainRef {
    Path(String),
    Inline(DomainDoc),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    format: String,
    version: u32,
    domain: DomainRef,
    s: f64,
    #[serde(default)]
    centers: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimizer: Option<OptimizerParams>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CentersDoc {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    centers: Vec<Point2>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    format: String,
    version: u32,
    points: Vec<Point2>,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolylineDoc {
    format: String,
    version: u32,
    vertices: Vec<Point2>,
}

/// 1-based line and column of the first occurrence of `needle`.
fn position_of(text: &str, needle: &str) -> (usize, usize) {
    let Some(at) = text.find(needle) else {
        return (1, 1);
    };
    let before = &text[..at];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_error(text: &str, key: &str, message: String) -> Error {
    let (line, column) = position_of(text, &format!("\"{key}\""));
    Error::Parse {
        line,
        column,
        message,
    }
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn check_header(text: &str, format: &str, version: u32, want: &str) -> Result<()> {
    if format != want {
        return Err(parse_error(
            text,
            "format",
            format!("expected format \"{want}\", found \"{format}\""),
        ));
    }
    if version != VERSION {
        return Err(parse_error(
            text,
            "version",
            format!("unsupported version {version} (expected {VERSION})"),
        ));
    }
    Ok(())
}

/// Peeks at the `format` tag without validating the rest.
pub fn detect_format(text: &str) -> Result<String> {
    #[derive(Deserialize)]
    struct Header {
        format: String,
    }
    Ok(parse_json::<Header>(text)?.format)
}

fn domain_from_doc(text: &str, doc: DomainDoc) -> Result<DomainFile> {
    check_header(text, &doc.format, doc.version, DOMAIN_FORMAT)?;
    let domain = Domain::new(doc.boundary, doc.holes)?;
    Ok(DomainFile {
        name: doc.name,
        domain,
    })
}

fn domain_to_doc(f: &DomainFile) -> DomainDoc {
    DomainDoc {
        format: DOMAIN_FORMAT.into(),
        version: VERSION,
        name: f.name.clone(),
        boundary: f.domain.boundary().to_vec(),
        holes: f.domain.holes().to_vec(),
    }
}

pub fn load_domain_file(text: &str) -> Result<DomainFile> {
    let doc: DomainDoc = parse_json(text)?;
    domain_from_doc(text, doc)
}

/// Parses and validates a domain document. Rings may be given open or
/// closed and in either orientation.
pub fn load_domain(text: &str) -> Result<Domain> {
    load_domain_file(text).map(|f| f.domain)
}

pub fn save_domain(f: &DomainFile) -> String {
    canonical(&serde_json::to_value(domain_to_doc(f)).expect("domain serializes"))
}

pub fn load_scenario(text: &str) -> Result<ScenarioFile> {
    let doc: ScenarioDoc = parse_json(text)?;
    check_header(text, &doc.format, doc.version, SCENARIO_FORMAT)?;
    let domain = match doc.domain {
        DomainRef::Path(p) => DomainSource::Path(p),
        DomainRef::Inline(d) => DomainSource::Inline(domain_from_doc(text, d)?),
    };
    if !(doc.s.is_finite() && doc.s > 0.0) {
        return Err(parse_error(text, "s", "s must be positive".into()));
    }
    if let Some(p) = &doc.optimizer {
        p.validate()?;
    }
    Ok(ScenarioFile {
        domain,
        s: doc.s,
        centers: doc.centers,
        optimizer: doc.optimizer,
    })
}

pub fn save_scenario(f: &ScenarioFile) -> String {
    let doc = ScenarioDoc {
        format: SCENARIO_FORMAT.into(),
        version: VERSION,
        domain: match &f.domain {
            DomainSource::Inline(d) => DomainRef::Inline(domain_to_doc(d)),
            DomainSource::Path(p) => DomainRef::Path(p.clone()),
        },
        s: f.s,
        centers: f.centers.clone(),
        optimizer: f.optimizer.clone(),
    };
    canonical(&serde_json::to_value(doc).expect("scenario serializes"))
}

impl ScenarioFile {
    /// The scenario's domain; path references resolve against `base_dir`.
    pub fn resolve_domain(&self, base_dir: &Path) -> Result<Domain> {
        match &self.domain {
            DomainSource::Inline(d) => Ok(d.domain.clone()),
            DomainSource::Path(p) => {
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                load_domain(&text)
            }
        }
    }
}

pub fn save_centers(centers: &[Point2], s: Option<f64>) -> String {
    let doc = CentersDoc {
        format: CENTERS_FORMAT.into(),
        version: VERSION,
        s,
        centers: centers.to_vec(),
    };
    canonical(&serde_json::to_value(doc).expect("centers serialize"))
}

pub fn save_tree(t: &Tree) -> String {
    let doc = TreeDoc {
        format: TREE_FORMAT.into(),
        version: VERSION,
        points: t.points().to_vec(),
        edges: t.edges().to_vec(),
    };
    canonical(&serde_json::to_value(doc).expect("tree serializes"))
}

pub fn save_polyline(p: &Polyline) -> String {
    let doc = PolylineDoc {
        format: POLYLINE_FORMAT.into(),
        version: VERSION,
        vertices: p.vertices().to_vec(),
    };
    canonical(&serde_json::to_value(doc).expect("polyline serializes"))
}

pub fn load_polyline(text: &str) -> Result<Polyline> {
    let doc: PolylineDoc = parse_json(text)?;
    check_header(text, &doc.format, doc.version, POLYLINE_FORMAT)?;
    Polyline::new(doc.vertices)
}

/// Reads a centers, tree, or scenario document (scenarios contribute their
/// centers and radius).
pub fn load_shape(text: &str) -> Result<ShapeFile> {
    let format = detect_format(text)?;
    match format.as_str() {
        CENTERS_FORMAT => {
            let doc: CentersDoc = parse_json(text)?;
            check_header(text, &doc.format, doc.version, CENTERS_FORMAT)?;
            Ok(ShapeFile::Centers {
                centers: doc.centers,
                s: doc.s,
            })
        }
        TREE_FORMAT => {
            let doc: TreeDoc = parse_json(text)?;
            check_header(text, &doc.format, doc.version, TREE_FORMAT)?;
            Ok(ShapeFile::Tree(Tree::new(doc.points, doc.edges)?))
        }
        SCENARIO_FORMAT => {
            let sc = load_scenario(text)?;
            Ok(ShapeFile::Centers {
                centers: sc.centers,
                s: Some(sc.s),
            })
        }
        other => Err(parse_error(
            text,
            "format",
            format!("expected a centers, tree, or scenario document, found \"{other}\""),
        )),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_canonical(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&x.to_string());
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad);
                write_canonical(out, x, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_canonical(out, x, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        _ => out.push_str(&v.to_string()),
    }
}

/// Canonical text of a JSON value, newline-terminated.
pub fn canonical(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(&mut out, v, 0);
    out.push('\n');
    out
}

/// Shortest decimal that parses back to exactly `x`.
pub fn format_number(x: f64) -> String {
    Value::from(x).to_string()
}

#[derive(Debug, Clone, Copy)]
pub enum Overlay<'a> {
    Empty,
    State(&'a ConfigState),
    Prongs(&'a ProngCover),
    Centers {
        centers: &'a [Point2],
        s: f64,
        verdict: Option<&'a CoverageVerdict>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    /// Output width in pixels; height follows the aspect ratio.
    pub width: u32,
    pub disk_opacity: f64,
    pub show_centers: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            width: 800,
            disk_opacity: 0.15,
            show_centers: true,
        }
    }
}

struct Layers {
    disks: Vec<Point2>,
    radius: f64,
    mst: Vec<Segment>,
    connector: Vec<Segment>,
    witness: Option<Point2>,
}

fn layers(o: &Overlay<'_>) -> Layers {
    let empty = Layers {
        disks: Vec::new(),
        radius: 0.0,
        mst: Vec::new(),
        connector: Vec::new(),
        witness: None,
    };
    match *o {
        Overlay::Empty => empty,
        Overlay::State(st) => Layers {
            disks: st.centers.points().to_vec(),
            radius: st.centers.radius(),
            mst: st.mst.tree.segments().collect(),
            witness: st.verdict.witness,
            ..empty
        },
        Overlay::Prongs(pc) => Layers {
            disks: pc.centers.points().to_vec(),
            radius: pc.centers.radius(),
            connector: pc.connector.segments().collect(),
            ..empty
        },
        Overlay::Centers {
            centers,
            s,
            verdict,
        } => Layers {
            disks: centers.to_vec(),
            radius: s,
            mst: kruskal_points(centers).tree.segments().collect(),
            witness: verdict.and_then(|v| v.witness),
            ..empty
        },
    }
}

fn ring_path(out: &mut String, ring: &[Point2]) {
    for (i, p) in ring.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(out, "{cmd}{} {} ", format_number(p.x), format_number(p.y));
    }
    out.push('Z');
}

/// Static SVG of a domain and an optional configuration. Layers, bottom to
/// top: domain (holes cut out by the even-odd rule), translucent `s`-disks,
/// prong connector, MST edges, centers, uncovered witness. Output depends
/// only on the inputs.
pub fn render_svg(d: &Domain, overlay: Overlay<'_>, opts: &SvgOptions) -> String {
    let l = layers(&overlay);
    let mut pts: Vec<Point2> = d.vertices().copied().collect();
    for &c in &l.disks {
        pts.push(c + Point2::new(l.radius, l.radius));
        pts.push(c - Point2::new(l.radius, l.radius));
    }
    pts.extend(l.connector.iter().flat_map(|s| [s.a, s.b]));
    pts.extend(l.witness);
    let raw = Bbox::of_points(&pts).expect("domain has vertices");
    let bb = raw.expand(0.02 * raw.diagonal());
    let (w, h) = (bb.width(), bb.height());
    let height = ((opts.width as f64) * h / w).round().max(1.0) as u32;
    let stroke = format_number(0.002 * bb.diagonal());
    let dot = format_number(0.004 * bb.diagonal());
    let n = format_number;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{height}\" viewBox=\"{} {} {} {}\">",
        opts.width,
        n(bb.min.x),
        n(-bb.max.y),
        n(w),
        n(h)
    );
    out.push_str("<g transform=\"scale(1 -1)\">\n");

    let mut dpath = String::new();
    for (i, ring) in d.rings().enumerate() {
        if i > 0 {
            dpath.push(' ');
        }
        ring_path(&mut dpath, ring);
    }
    let _ = writeln!(
        out,
        "<path class=\"domain\" d=\"{dpath}\" fill=\"#dfe8f2\" fill-rule=\"evenodd\" stroke=\"#34495e\" stroke-width=\"{stroke}\"/>"
    );

    if !l.disks.is_empty() {
        let _ = writeln!(
            out,
            "<g class=\"disks\" fill=\"#2e86de\" fill-opacity=\"{}\" stroke=\"#2e86de\" stroke-opacity=\"0.4\" stroke-width=\"{stroke}\">",
            n(opts.disk_opacity)
        );
        for c in &l.disks {
            let _ = writeln!(
                out,
                "<circle class=\"disk\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
                n(c.x),
                n(c.y),
                n(l.radius)
            );
        }
        out.push_str("</g>\n");
    }

    let segment_group = |out: &mut String, class: &str, color: &str, segs: &[Segment]| {
        if segs.is_empty() {
            return;
        }
        let _ = writeln!(
            out,
            "<g class=\"{class}\" stroke=\"{color}\" stroke-width=\"{stroke}\" stroke-linecap=\"round\">"
        );
        for s in segs {
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                n(s.a.x),
                n(s.a.y),
                n(s.b.x),
                n(s.b.y)
            );
        }
        out.push_str("</g>\n");
    };
    segment_group(&mut out, "connector", "#27ae60", &l.connector);
    segment_group(&mut out, "mst", "#c0392b", &l.mst);

    if opts.show_centers && !l.disks.is_empty() {
        out.push_str("<g class=\"centers\" fill=\"#1b2631\">\n");
        for c in &l.disks {
            let _ = writeln!(
                out,
                "<circle class=\"center\" cx=\"{}\" cy=\"{}\" r=\"{dot}\"/>",
                n(c.x),
                n(c.y)
            );
        }
        out.push_str("</g>\n");
    }
    if let Some(p) = l.witness {
        let _ = writeln!(
            out,
            "<circle class=\"witness\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#e67e22\" stroke-width=\"{stroke}\"/>",
            n(p.x),
            n(p.y),
            n(0.012 * bb.diagonal())
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
