use mdp_core::coverage::{certify_cover, max_distance, CoverStatus, Shape};
use mdp_core::geom::{hausdorff_distance, Domain, Point2, Tree};
use mdp_core::io::{format_number, load_domain_file, save_domain, DomainFile};
use mdp_core::optimizer::prune_redundant;
use mdp_core::spanning::{kruskal_mst, kruskal_points, steinerize, CenterSet};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

fn points(max: usize) -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec(point(), 1..max)
}

/// Random star-shaped polygon around the origin.
fn domain() -> impl Strategy<Value = Domain> {
    prop::collection::vec((0.0..std::f64::consts::TAU, 0.4..1.2f64), 3..10).prop_filter_map(
        "invalid polygon",
        |mut v| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            let ring = v
                .iter()
                .map(|&(t, r)| Point2::new(r * t.cos(), r * t.sin()))
                .collect();
            Domain::new(ring, Vec::new()).ok()
        },
    )
}

fn centers(max: usize) -> impl Strategy<Value = Vec<Point2>> {
    points(max).prop_filter("duplicates", |p| CenterSet::new(p.clone(), 1.0).is_ok())
}

fn rigid(p: Point2, angle: f64, shift: Point2) -> Point2 {
    p.rotate(angle) + shift
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_to_a_shape_is_one_lipschitz(x in points(6), p in point(), q in point()) {
        let shape = Shape::Points(&x);
        let gap = (shape.distance(p) - shape.distance(q)).abs();
        prop_assert!(gap <= p.dist(q) + 1e-12);
    }

    #[test]
    fn hausdorff_is_a_metric(a in points(6), b in points(6), c in points(6)) {
        let ab = hausdorff_distance(&a, &b).unwrap();
        let ba = hausdorff_distance(&b, &a).unwrap();
        let bc = hausdorff_distance(&b, &c).unwrap();
        let ac = hausdorff_distance(&a, &c).unwrap();
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn mst_length_is_invariant_under_rigid_motions(
        x in centers(12), angle in 0.0..6.3f64, shift in point()
    ) {
        let moved: Vec<Point2> = x.iter().map(|&p| rigid(p, angle, shift)).collect();
        let a = kruskal_points(&x).length;
        let b = kruskal_points(&moved).length;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn mst_is_no_longer_than_the_visiting_order_path(x in centers(12)) {
        let path: f64 = x.windows(2).map(|w| w[0].dist(w[1])).sum();
        prop_assert!(kruskal_points(&x).length <= path + 1e-12);
    }

    #[test]
    fn steinerize_never_lengthens(x in centers(7)) {
        let cs = CenterSet::new(x, 1.0).unwrap();
        let (aug, m) = steinerize(&cs, 2);
        prop_assert!(m.length <= kruskal_mst(&cs).length + 1e-12);
        prop_assert_eq!(&aug.points()[..cs.len()], cs.points());
    }

    #[test]
    fn sup_distance_is_invariant_under_rigid_motions(
        d in domain(), x in centers(5), angle in 0.0..6.3f64, shift in point()
    ) {
        let tol = 1e-3;
        let a = max_distance(&d, &x, tol).unwrap();
        let d2 = d.map_points(|p| rigid(p, angle, shift)).unwrap();
        let x2: Vec<Point2> = x.iter().map(|&p| rigid(p, angle, shift)).collect();
        let b = max_distance(&d2, &x2, tol).unwrap();
        // both enclosures contain the same true value
        prop_assert!(a.lo <= b.hi + 1e-9 && b.lo <= a.hi + 1e-9);
    }

    #[test]
    fn coverage_is_monotone_in_radius_and_shape(
        d in domain(), x in centers(6), extra in centers(4), s in 0.2..1.5f64
    ) {
        let tol = 1e-3;
        if certify_cover(&d, &x, s, tol).unwrap().is_covered() {
            prop_assert!(certify_cover(&d, &x, s + 2.0 * tol, tol).unwrap().is_covered());
            let mut more = x.clone();
            more.extend(extra.iter().filter(|p| x.iter().all(|q| q.dist(**p) > 1e-9)));
            prop_assert!(certify_cover(&d, &more, s, tol).unwrap().is_covered());
        }
    }

    #[test]
    fn verdicts_agree_with_a_sampled_distance(d in domain(), x in centers(6), s in 0.2..1.5f64) {
        let tol = 1e-3;
        let v = certify_cover(&d, &x, s, tol).unwrap();
        let bb = d.bbox();
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            for j in 0..=40 {
                let p = Point2::new(
                    bb.min.x + bb.width() * i as f64 / 40.0,
                    bb.min.y + bb.height() * j as f64 / 40.0,
                );
                if d.contains(p) {
                    worst = worst.max(Shape::Points(&x).distance(p));
                }
            }
        }
        match v.status {
            CoverStatus::Covered => prop_assert!(worst <= s + 1e-9),
            CoverStatus::Uncovered => {
                let w = v.witness.unwrap();
                prop_assert!(Shape::Points(&x).distance(w) > s);
            }
            CoverStatus::Unknown => {}
        }
    }

    #[test]
    fn tree_coverage_dominates_vertex_coverage(d in domain(), x in centers(6), s in 0.2..1.5f64) {
        let tree = kruskal_points(&x).tree;
        let tol = 1e-3;
        if certify_cover(&d, &x, s, tol).unwrap().is_covered() {
            prop_assert!(certify_cover(&d, &tree, s, tol).unwrap().is_covered());
        }
        let single = Tree::single(x[0]);
        prop_assert_eq!(
            certify_cover(&d, &single, s, tol).unwrap().status,
            certify_cover(&d, &x[..1], s, tol).unwrap().status
        );
    }

    #[test]
    fn pruning_keeps_coverage(d in domain(), x in centers(10)) {
        let tol = 1e-3;
        let mut pts = x.clone();
        // make the configuration cover by adding the domain's vertices
        pts.extend(d.vertices().filter(|v| x.iter().all(|q| q.dist(**v) > 1e-9)));
        let Ok(cs) = CenterSet::new(pts, 0.8) else { return Ok(()); };
        if certify_cover(&d, &cs, 0.8, tol).unwrap().is_covered() {
            let p = prune_redundant(&cs, &d, tol);
            prop_assert!(p.len() <= cs.len());
            prop_assert!(certify_cover(&d, &p, 0.8, tol).unwrap().is_covered());
        }
    }

    #[test]
    fn domain_files_round_trip(d in domain(), name in proptest::option::of("[a-z ]{0,12}")) {
        let f = DomainFile { name, domain: d };
        let text = save_domain(&f);
        let back = load_domain_file(&text).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(save_domain(&back), text);
    }

    #[test]
    fn numbers_format_to_exact_shortest_decimals(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let t = format_number(x);
        prop_assert_eq!(t.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
