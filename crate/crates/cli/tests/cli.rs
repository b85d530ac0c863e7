use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use mdp_core::geom::{Domain, Point2, Segment};
use mdp_core::io::{load_scenario, save_centers, save_domain, save_tree, DomainFile};
use mdp_core::spanning::{brute_force_mst, CenterSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn mdp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mdp"))
}

fn run(args: &[&str]) -> Output {
    mdp().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Value of a `key: value` report line.
fn field(o: &Output, key: &str) -> String {
    let prefix = format!("{key}: ");
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in\n{}", stdout(o)))
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn domain_file(dir: &TempDir, name: &str, d: Domain) -> PathBuf {
    put(
        dir,
        name,
        &save_domain(&DomainFile {
            name: None,
            domain: d,
        }),
    )
}

fn centers_file(dir: &TempDir, name: &str, pts: &[[f64; 2]]) -> PathBuf {
    let pts: Vec<Point2> = pts.iter().map(|&[x, y]| Point2::new(x, y)).collect();
    put(dir, name, &save_centers(&pts, None))
}

fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

#[test]
fn mst_of_unit_square_corners() {
    let dir = TempDir::new().unwrap();
    let f = centers_file(
        &dir,
        "sq.json",
        &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
    );
    let o = run(&["mst", "--centers", s(&f)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&o, "length"), "3.000000");
    assert_eq!(field(&o, "edges"), "3");
    assert_eq!(stdout(&o).matches("edge: ").count(), 3);
}

#[test]
fn mst_of_equilateral_triangle() {
    let dir = TempDir::new().unwrap();
    let h = 3f64.sqrt() / 2.0;
    let f = centers_file(&dir, "tri.json", &[[0.0, 0.0], [1.0, 0.0], [0.5, h]]);
    assert_eq!(
        field(&run(&["mst", "--centers", s(&f)]), "length"),
        "2.000000"
    );
}

#[test]
fn mst_of_random_points_matches_brute_force() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..10 {
        let pts: Vec<[f64; 2]> = (0..8)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let f = centers_file(&dir, &format!("r{case}.json"), &pts);
        let cs =
            CenterSet::new(pts.iter().map(|&[x, y]| Point2::new(x, y)).collect(), 1.0).unwrap();
        let oracle = brute_force_mst(&cs).unwrap().length;
        let o = run(&["mst", "--centers", s(&f)]);
        assert_eq!(field(&o, "length"), format!("{oracle:.6}"));
    }
}

#[test]
fn mst_rejects_duplicates() {
    let dir = TempDir::new().unwrap();
    let f = centers_file(&dir, "dup.json", &[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]);
    let o = run(&["mst", "--centers", s(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error:"));
}

#[test]
fn check_demo_flips_between_radii() {
    let demo = demo_dir().join("two_holes_demo.mdp.json");
    let low = run(&["check", "--shape", s(&demo), "--s", "0.04"]);
    assert_eq!(low.status.code(), Some(1), "{}", stderr(&low));
    assert_eq!(field(&low, "status"), "uncovered");
    let w: Vec<f64> = field(&low, "witness")
        .split(' ')
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(w.len(), 2);
    let high = run(&["check", "--shape", s(&demo), "--s", "0.06"]);
    assert_eq!(high.status.code(), Some(0), "{}", stdout(&high));
    assert_eq!(field(&high, "status"), "covered");
    assert_eq!(field(&high, "witness"), "none");
    // the scenario's own radius is the default
    assert_eq!(run(&["check", "--shape", s(&demo)]).status.code(), Some(0));
}

#[test]
fn check_with_separate_domain_centers_and_tree() {
    let dir = TempDir::new().unwrap();
    let d = domain_file(
        &dir,
        "sq.json",
        Domain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap(),
    );
    let c = centers_file(&dir, "c.json", &[[0.5, 0.5]]);
    let half = 0.5 * 2f64.sqrt();
    let o = run(&[
        "check",
        "--domain",
        s(&d),
        "--shape",
        s(&c),
        "--s",
        &(half - 0.01).to_string(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "check",
        "--domain",
        s(&d),
        "--shape",
        s(&c),
        "--s",
        &(half + 0.01).to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let tree = mdp_core::geom::Tree::new(
        vec![Point2::new(0.0, 0.5), Point2::new(1.0, 0.5)],
        vec![(0, 1)],
    )
    .unwrap();
    let t = put(&dir, "t.json", &save_tree(&tree));
    assert_eq!(
        run(&["check", "--domain", s(&d), "--shape", s(&t), "--s", "0.51"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["check", "--domain", s(&d), "--shape", s(&t), "--s", "0.49"])
            .status
            .code(),
        Some(1)
    );
    // centers need a domain and a radius
    assert_eq!(
        run(&["check", "--shape", s(&c), "--s", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["check", "--domain", s(&d), "--shape", s(&c)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn check_writes_svg() {
    let dir = TempDir::new().unwrap();
    let demo = demo_dir().join("two_holes_demo.mdp.json");
    let svg = dir.path().join("demo.svg");
    let o = run(&[
        "check",
        "--shape",
        s(&demo),
        "--s",
        "0.04",
        "--svg",
        s(&svg),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("class=\"witness\""));
    assert!(!text.contains("<script"));
}

#[test]
fn malformed_files_exit_2_with_position() {
    let dir = TempDir::new().unwrap();
    let bad = put(
        &dir,
        "bad.json",
        "{\n  \"format\": \"mdp-domain\",\n  \"version\": 1,\n  \"boundary\": [[0, 0], [1, 0]\n}",
    );
    let c = centers_file(&dir, "c.json", &[[0.5, 0.5]]);
    let o = run(&["check", "--domain", s(&bad), "--shape", s(&c), "--s", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json") && err.contains("line 5"), "{err}");
    let missing = run(&["mst", "--centers", "/nonexistent/x.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn prongs_report_closed_form_excess() {
    let o = run(&["prongs", "--segment", "1", "--s", "0.25", "--n", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&o, "excess"), "0.240000");
    assert_eq!(field(&o, "centers"), "24");
    assert_eq!(field(&o, "certified"), "covered");
    let o = run(&["prongs", "--segment", "1", "--s", "0.25", "--n", "100"]);
    assert_eq!(field(&o, "excess"), "0.020400");
}

#[test]
fn prongs_too_coarse_exit_2_with_hint() {
    let o = run(&["prongs", "--segment", "1", "--s", "0.25", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n = 3"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn prongs_write_files_for_a_polyline() {
    let dir = TempDir::new().unwrap();
    let poly = mdp_core::geom::Polyline::new(vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 0.8),
    ])
    .unwrap();
    let f = put(&dir, "poly.json", &mdp_core::io::save_polyline(&poly));
    let prefix = dir.path().join("out");
    let o = run(&[
        "prongs",
        "--polyline",
        s(&f),
        "--s",
        "0.3",
        "--beta",
        "0.1",
        "--out",
        s(&prefix),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let excess: f64 = field(&o, "excess").parse().unwrap();
    assert!(excess > 0.0);
    for ext in ["centers.json", "connector.json", "svg"] {
        assert!(dir.path().join(format!("out.{ext}")).exists(), "{ext}");
    }
    let back = mdp_core::io::load_shape(
        &std::fs::read_to_string(dir.path().join("out.centers.json")).unwrap(),
    )
    .unwrap();
    let mdp_core::io::ShapeFile::Centers { centers, s: radius } = back else {
        panic!()
    };
    assert_eq!(centers.len().to_string(), field(&o, "centers"));
    assert_eq!(radius, Some(0.3));
    // --n is for segments only
    assert_eq!(
        run(&["prongs", "--polyline", s(&f), "--s", "0.3", "--n", "5"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn optimize_tiny_domain_gives_one_center() {
    let dir = TempDir::new().unwrap();
    let d = domain_file(
        &dir,
        "tiny.json",
        Domain::rectangle(0.0, 0.0, 0.1, 0.1).unwrap(),
    );
    let out = dir.path().join("best.json");
    let o = run(&[
        "optimize",
        "--domain",
        s(&d),
        "--s",
        "0.1",
        "--iters",
        "100",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&o, "objective"), "0.000000");
    assert_eq!(field(&o, "centers"), "1");
    let sc = load_scenario(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(sc.centers.len(), 1);
    assert_eq!(sc.s, 0.1);
    let chk = run(&["check", "--shape", s(&out)]);
    assert_eq!(chk.status.code(), Some(0));
}

#[test]
fn optimize_is_reproducible_for_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let d = domain_file(
        &dir,
        "rect.json",
        Domain::rectangle(0.0, 0.0, 1.0, 0.4).unwrap(),
    );
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}.json"));
        let o = mdp()
            .args([
                "optimize",
                "--domain",
                s(&d),
                "--s",
                "0.2",
                "--iters",
                "400",
                "--seed",
                "7",
                "--restarts",
                "2",
                "--out",
                s(&out),
            ])
            .env("MDP_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push((
            field(&o, "objective"),
            std::fs::read_to_string(&out).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn optimize_brackets_the_stadium() {
    let dir = TempDir::new().unwrap();
    let seg = Segment::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
    let d = domain_file(
        &dir,
        "stadium.json",
        Domain::stadium(&seg, 0.25, 64).unwrap(),
    );
    let out = dir.path().join("best.json");
    let o = run(&[
        "optimize",
        "--domain",
        s(&d),
        "--s",
        "0.25",
        "--iters",
        "5000",
        "--seed",
        "20240917",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let obj: f64 = field(&o, "objective").parse().unwrap();
    assert!((1.0..=1.24).contains(&obj), "{obj}");
}

#[test]
fn optimize_without_a_feasible_start_exits_1() {
    let dir = TempDir::new().unwrap();
    let d = domain_file(
        &dir,
        "long.json",
        Domain::rectangle(0.0, 0.0, 5.0, 1.0).unwrap(),
    );
    let out = dir.path().join("best.json");
    let o = run(&[
        "optimize",
        "--domain",
        s(&d),
        "--s",
        "0.2",
        "--n-max",
        "2",
        "--iters",
        "10",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let bad = mdp()
        .args([
            "optimize",
            "--domain",
            s(&d),
            "--s",
            "0.2",
            "--out",
            s(&out),
        ])
        .env("MDP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

fn http_get(addr: &str, path: &str) -> String {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut text = String::new();
    stream.read_to_string(&mut text).unwrap();
    text
}

#[test]
fn serve_answers_health_and_rejects_a_second_bind() {
    let dir = TempDir::new().unwrap();
    let d = domain_file(
        &dir,
        "sq.json",
        Domain::rectangle(0.0, 0.0, 2.0, 1.0).unwrap(),
    );
    let mut child = mdp()
        .args(["serve", "--port", "0", "--domain", s(&d)])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening: http://")
        .unwrap()
        .to_string();

    let health = http_get(&addr, "/health");
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.contains("\"ok\""));
    let domain = http_get(&addr, "/domain");
    assert!(
        domain.ends_with(&std::fs::read_to_string(&d).unwrap()),
        "{domain}"
    );

    let port = addr.rsplit(':').next().unwrap();
    let second = run(&["serve", "--port", port]);
    assert_eq!(second.status.code(), Some(2));
    assert!(stderr(&second).contains("cannot bind"));

    child.kill().unwrap();
    child.wait().unwrap();
}
