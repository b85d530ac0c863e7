//! `mdp`: batch front end for the maximum-distance-problem toolkit.
//!
//! Reports go to stdout as `key: value` lines; a one-line human summary
//! goes to stderr. Exit codes: 0 success, 1 infeasible or uncovered,
//! 2 invalid input, 3 internal tolerance failure.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use mdp_core::constructive::{polyline_prong_cover, segment_prong_cover, ProngCover};
use mdp_core::coverage::{certify_cover, default_tolerance, CoverStatus, CoverageVerdict};
use mdp_core::geom::{Domain, Point2, Polyline, Segment};
use mdp_core::io::{
    detect_format, load_domain_file, load_polyline, load_scenario, load_shape, render_svg,
    save_centers, save_scenario, save_tree, DomainFile, DomainSource, Overlay, ScenarioFile,
    ShapeFile, SvgOptions, SCENARIO_FORMAT,
};
use mdp_core::optimizer::{local_search, OptimizerParams};
use mdp_core::spanning::{kruskal_mst, CenterSet};
use mdp_core::Error;

/// `println!` that ignores a closed stdout, so reports can be piped to `head`.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const INVALID: u8 = 2;
const INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "mdp", version, about = "Maximum-distance-problem toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify that the s-balls around a center set or tree cover a domain.
    Check(CheckArgs),
    /// Euclidean minimum spanning tree of a center set.
    Mst(MstArgs),
    /// Explicit prong cover of a segment or polyline neighbourhood.
    Prongs(ProngsArgs),
    /// Search for a short covering center set.
    Optimize(OptimizeArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Domain file; optional when --shape is a scenario.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Centers, tree, or scenario file.
    #[arg(long)]
    shape: PathBuf,
    /// Radius; defaults to the radius stored in the shape file.
    #[arg(long)]
    s: Option<f64>,
    /// Certification tolerance [default: 1e-6 x domain diameter].
    #[arg(long)]
    tol: Option<f64>,
    /// Also write an SVG picture here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct MstArgs {
    /// Centers or scenario file.
    #[arg(long)]
    centers: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("base").required(true).args(["segment", "polyline"])))]
#[command(group(ArgGroup::new("fineness").required(true).args(["n", "beta"])))]
struct ProngsArgs {
    /// Length of a horizontal segment starting at the origin.
    #[arg(long)]
    segment: Option<f64>,
    /// Polyline file.
    #[arg(long)]
    polyline: Option<PathBuf>,
    #[arg(long)]
    s: f64,
    /// Subdivisions per segment (segment only).
    #[arg(long)]
    n: Option<usize>,
    /// Length budget for the rectangle construction, in (0, s).
    #[arg(long)]
    beta: Option<f64>,
    /// Write PREFIX.centers.json, PREFIX.connector.json and PREFIX.svg.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Domain or scenario file.
    #[arg(long)]
    domain: PathBuf,
    /// Radius; defaults to the scenario's radius.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 30)]
    n_max: usize,
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent annealing chains; the best one wins.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Scenario file receiving the best configuration.
    #[arg(long, default_value = "best.mdp.json")]
    out: PathBuf,
    /// Also write an SVG picture here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Default domain for new sessions [default: bundled two-hole demo].
    #[arg(long)]
    domain: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Display) -> Self {
        Failure {
            code: INVALID,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ToleranceNotReached { .. } => INTERNAL,
            Error::InitialCover(_) => NEGATIVE,
            _ => INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Prefixes parse errors with the file name.
fn in_file<T>(path: &Path, r: mdp_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

/// A domain or scenario file; scenarios also yield their radius and centers.
fn load_domain_or_scenario(path: &Path) -> Result<(DomainFile, Option<ScenarioFile>), Failure> {
    let text = read(path)?;
    if in_file(path, detect_format(&text))? == SCENARIO_FORMAT {
        let sc = in_file(path, load_scenario(&text))?;
        let file = match &sc.domain {
            DomainSource::Inline(f) => f.clone(),
            DomainSource::Path(p) => {
                let full = base_dir(path).join(p);
                in_file(&full, load_domain_file(&read(&full)?))?
            }
        };
        Ok((file, Some(sc)))
    } else {
        Ok((in_file(path, load_domain_file(&text))?, None))
    }
}

fn fmt_point(p: Option<Point2>) -> String {
    match p {
        Some(p) => format!("{} {}", p.x, p.y),
        None => "none".into(),
    }
}

fn print_verdict(v: &CoverageVerdict) {
    let status = match v.status {
        CoverStatus::Covered => "covered",
        CoverStatus::Uncovered => "uncovered",
        CoverStatus::Unknown => "unknown",
    };
    out!("status: {status}");
    out!("margin: {}", v.margin);
    out!("witness: {}", fmt_point(v.witness));
    out!("tolerance: {}", v.tolerance);
    out!("cells: {}", v.cells);
}

fn check_positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Failure::invalid(format!(
            "--{name} must be positive, got {x}"
        )))
    }
}

fn cmd_check(a: CheckArgs) -> Outcome {
    let shape_text = read(&a.shape)?;
    let shape = in_file(&a.shape, load_shape(&shape_text))?;
    let domain = match &a.domain {
        Some(p) => in_file(p, load_domain_file(&read(p)?))?.domain,
        None if detect_format(&shape_text).ok().as_deref() == Some(SCENARIO_FORMAT) => {
            load_domain_or_scenario(&a.shape)?.0.domain
        }
        None => {
            return Err(Failure::invalid(
                "--domain is required unless --shape is a scenario",
            ))
        }
    };
    let file_s = match &shape {
        ShapeFile::Centers { s, .. } => *s,
        ShapeFile::Tree(_) => None,
    };
    let s =
        a.s.or(file_s)
            .ok_or_else(|| Failure::invalid("no radius: pass --s or store s in the shape file"))?;
    let s = check_positive("s", s)?;
    let tol = check_positive("tol", a.tol.unwrap_or_else(|| default_tolerance(&domain)))?;
    let verdict = match &shape {
        ShapeFile::Centers { centers, .. } => {
            let cs = in_file(&a.shape, CenterSet::new(centers.clone(), s))?;
            certify_cover(&domain, &cs, s, tol)?
        }
        ShapeFile::Tree(t) => certify_cover(&domain, t, s, tol)?,
    };
    out!("s: {s}");
    print_verdict(&verdict);
    if let Some(path) = &a.svg {
        let overlay = match &shape {
            ShapeFile::Centers { centers, .. } => Overlay::Centers {
                centers,
                s,
                verdict: Some(&verdict),
            },
            ShapeFile::Tree(_) => Overlay::Empty,
        };
        write(path, &render_svg(&domain, overlay, &SvgOptions::default()))?;
    }
    match verdict.status {
        CoverStatus::Covered => {
            eprintln!("covered with slack {:.3e}", verdict.margin);
            Ok(OK)
        }
        CoverStatus::Uncovered => {
            eprintln!(
                "not covered: {} is farther than s",
                fmt_point(verdict.witness)
            );
            Ok(NEGATIVE)
        }
        CoverStatus::Unknown => {
            eprintln!(
                "undecided at tolerance {}; try a smaller --tol",
                verdict.tolerance
            );
            Ok(NEGATIVE)
        }
    }
}

fn cmd_mst(a: MstArgs) -> Outcome {
    let shape = in_file(&a.centers, load_shape(&read(&a.centers)?))?;
    let ShapeFile::Centers { centers, .. } = shape else {
        return Err(Failure::invalid(
            "expected a centers or scenario file, found a tree",
        ));
    };
    if centers.is_empty() {
        return Err(Failure::invalid("no centers"));
    }
    let cs = in_file(&a.centers, CenterSet::new(centers, 1.0))?;
    let mst = kruskal_mst(&cs);
    let pts = cs.points();
    out!("length: {:.6}", mst.length);
    out!("vertices: {}", pts.len());
    out!("edges: {}", mst.edge_count);
    for &(i, j) in mst.tree.edges() {
        out!("edge: {i} {j} {:.6}", pts[i].dist(pts[j]));
    }
    eprintln!("MST of {} points has length {:.6}", pts.len(), mst.length);
    Ok(OK)
}

fn cmd_prongs(a: ProngsArgs) -> Outcome {
    let s = check_positive("s", a.s)?;
    let (cover, frame) = match (a.segment, &a.polyline, a.n, a.beta) {
        (Some(len), _, Some(n), _) => {
            let len = check_positive("segment", len)?;
            let seg = Segment::new(Point2::ORIGIN, Point2::new(len, 0.0));
            let cover = segment_prong_cover(&seg, s, n)?;
            (cover, Domain::stadium(&seg, s, 64)?)
        }
        (Some(len), _, None, Some(beta)) => {
            let len = check_positive("segment", len)?;
            let poly = Polyline::new(vec![Point2::ORIGIN, Point2::new(len, 0.0)])?;
            let cover = polyline_prong_cover(&poly, s, beta)?;
            (
                cover,
                Domain::stadium(&Segment::new(poly.vertices()[0], poly.vertices()[1]), s, 64)?,
            )
        }
        (None, Some(path), None, Some(beta)) => {
            let poly = in_file(path, load_polyline(&read(path)?))?;
            let cover = polyline_prong_cover(&poly, s, beta)?;
            let bb = mdp_core::geom::Bbox::of_points(poly.vertices())
                .expect("polyline has vertices")
                .expand(s);
            (
                cover,
                Domain::rectangle(bb.min.x, bb.min.y, bb.max.x, bb.max.y)?,
            )
        }
        _ => {
            return Err(Failure::invalid(
                "--n applies to --segment only; use --beta with --polyline",
            ))
        }
    };
    report_prongs(&cover);
    let verdict = cover.self_certify()?;
    out!(
        "certified: {}",
        if verdict.is_covered() {
            "covered"
        } else {
            "failed"
        }
    );
    if let Some(prefix) = &a.out {
        write(
            Path::new(&format!("{prefix}.centers.json")),
            &save_centers(cover.centers.points(), Some(s)),
        )?;
        write(
            Path::new(&format!("{prefix}.connector.json")),
            &save_tree(&cover.connector),
        )?;
        let svg = render_svg(&frame, Overlay::Prongs(&cover), &SvgOptions::default());
        write(Path::new(&format!("{prefix}.svg")), &svg)?;
    }
    if !verdict.is_covered() {
        return Err(Failure {
            code: INTERNAL,
            message: format!(
                "self-certification failed: {:?} (margin {})",
                verdict.status, verdict.margin
            ),
        });
    }
    eprintln!(
        "{} centers cover the s-neighbourhood with excess {:.6}",
        cover.centers.len(),
        cover.excess
    );
    Ok(OK)
}

fn report_prongs(c: &ProngCover) {
    out!("n: {}", c.n);
    if let Some(alpha) = c.alpha {
        out!("alpha: {alpha}");
    }
    out!("pieces: {}", c.pieces.len());
    out!("centers: {}", c.centers.len());
    out!("base_length: {:.6}", c.base_length);
    out!("connector_length: {:.6}", c.connector_length());
    out!("excess: {:.6}", c.excess);
    out!("mst_length: {:.6}", kruskal_mst(&c.centers).length);
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("MDP_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::invalid(format!("MDP_THREADS must be a positive integer, got {v:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::invalid(e.to_string()))
}

fn cmd_optimize(a: OptimizeArgs) -> Outcome {
    configure_threads()?;
    let (file, scenario) = load_domain_or_scenario(&a.domain)?;
    let s =
        a.s.or(scenario.as_ref().map(|sc| sc.s))
            .ok_or_else(|| Failure::invalid("no radius: pass --s or use a scenario file"))?;
    let s = check_positive("s", s)?;
    let params = OptimizerParams {
        n_max: a.n_max,
        iterations: a.iters,
        seed: a.seed,
        restarts: a.restarts,
        ..scenario.and_then(|sc| sc.optimizer).unwrap_or_default()
    };
    params.validate()?;
    let best = local_search(&file.domain, s, &params)?;
    let out = ScenarioFile {
        domain: DomainSource::Inline(file.clone()),
        s,
        centers: best.centers.points().to_vec(),
        optimizer: Some(params.clone()),
    };
    write(&a.out, &save_scenario(&out))?;
    if let Some(path) = &a.svg {
        write(
            path,
            &render_svg(&file.domain, Overlay::State(&best), &SvgOptions::default()),
        )?;
    }
    out!("objective: {:.6}", best.objective);
    out!("centers: {}", best.centers.len());
    out!(
        "status: {}",
        if best.verdict.is_covered() {
            "covered"
        } else {
            "uncovered"
        }
    );
    out!("seed: {}", params.seed);
    out!("iterations: {}", params.iterations);
    out!("restarts: {}", params.restarts);
    out!("out: {}", a.out.display());
    eprintln!(
        "best of {} restart(s): {} centers, MST length {:.6}",
        params.restarts,
        best.centers.len(),
        best.objective
    );
    Ok(OK)
}

fn cmd_serve(a: ServeArgs) -> Outcome {
    let domain = match &a.domain {
        Some(p) => load_domain_or_scenario(p)?.0,
        None => mdp_core::demo::domain_file(),
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::invalid(e.to_string()))?;
    rt.block_on(async {
        let addr = format!("{}:{}", a.host, a.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::invalid(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| Failure::invalid(e.to_string()))?;
        out!("listening: http://{local}");
        eprintln!("serving sessions on http://{local}; ctrl-c to stop");
        mdp_service::serve(listener, mdp_service::AppState::new(Some(domain)))
            .await
            .map_err(|e| Failure {
                code: INTERNAL,
                message: e.to_string(),
            })?;
        Ok(OK)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Mst(a) => cmd_mst(a),
        Command::Prongs(a) => cmd_prongs(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
