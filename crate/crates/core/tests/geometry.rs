use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trigrow::geom::{
    affine_from_triangles, classify_vertex_vs_hull_side, constrained_delaunay, convex_contains, convex_hull,
    convex_hull_indices, delaunay, incircle, kd_partition, polygons_intersect, segments_cross_properly, Point,
    SideClass, Triangulation,
};

fn random_points(seed: u64, n: usize) -> Vec<(u64, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as u64)
        .map(|i| (i, Point::new(rng.random::<f64>() * 500.0, rng.random::<f64>() * 500.0)))
        .collect()
}

fn tri_points(tri: &Triangulation, t: &[u64; 3]) -> [Point; 3] {
    t.map(|v| tri.point(v).unwrap())
}

fn strictly_inside_circle(p: [Point; 3], d: Point) -> bool {
    let scale = (p[1] - p[0]).norm().max((p[2] - p[0]).norm()).powi(4);
    incircle(p[0], p[1], p[2], d) > 1e-12 * scale
}

fn square(x: f64, y: f64, s: f64) -> Vec<Point> {
    vec![
        Point::new(x, y),
        Point::new(x + s, y),
        Point::new(x + s, y + s),
        Point::new(x, y + s),
    ]
}

#[test]
fn delaunay_empty_circumcircle_fifty_points() {
    let pts = random_points(3, 50);
    let tri = delaunay(&pts).unwrap();
    for t in tri.triangles() {
        let p = tri_points(&tri, t);
        for &(id, d) in &pts {
            assert!(t.contains(&id) || !strictly_inside_circle(p, d), "{id} inside {t:?}");
        }
    }
}

#[test]
fn delaunay_counts_follow_hull_size() {
    for seed in 0..20 {
        let pts = random_points(seed, 40 + seed as usize * 20);
        let tri = delaunay(&pts).unwrap();
        let coords: Vec<Point> = pts.iter().map(|p| p.1).collect();
        let (n, h) = (pts.len(), convex_hull_indices(&coords).unwrap().len());
        assert_eq!(tri.edges().len(), 3 * n - 3 - h);
        assert_eq!(tri.triangles().len(), 2 * n - 2 - h);
        assert_eq!(tri.boundary().len(), h);
    }
}

#[test]
fn empty_constraints_match_delaunay() {
    let pts = random_points(9, 120);
    let a = delaunay(&pts).unwrap();
    let b = constrained_delaunay(&pts, &[]).unwrap();
    assert_eq!(a.edges(), b.edges());
    assert_eq!(a.triangles(), b.triangles());
}

/// No vertex visible from inside a triangle lies strictly inside its
/// circumcircle; visibility is blocked by forced segments.
fn check_constrained_delaunay(tri: &Triangulation, forced: &[(u64, u64)]) {
    let pts: Vec<(u64, Point)> = tri.vertices().iter().map(|(&i, &p)| (i, p)).collect();
    let segs: Vec<(Point, Point)> = forced
        .iter()
        .map(|&(a, b)| (tri.point(a).unwrap(), tri.point(b).unwrap()))
        .collect();
    for t in tri.triangles() {
        let p = tri_points(tri, t);
        let c = (p[0] + p[1] + p[2]) * (1.0 / 3.0);
        let viewpoints = [c, c + (p[0] - c) * 0.9, c + (p[1] - c) * 0.9, c + (p[2] - c) * 0.9];
        for &(id, d) in &pts {
            if t.contains(&id) || !strictly_inside_circle(p, d) {
                continue;
            }
            let visible = viewpoints
                .iter()
                .any(|&v| segs.iter().all(|&(a, b)| !segments_cross_properly(v, d, a, b)));
            assert!(!visible, "vertex {id} visible inside circumcircle of {t:?}");
        }
    }
}

#[test]
fn constrained_delaunay_visibility_oracle() {
    for seed in 0..10 {
        let pts = random_points(100 + seed, 80);
        let coords: Vec<Point> = pts.iter().map(|p| p.1).collect();
        // a long interior segment between the points nearest two opposite corners
        let nearest = |q: Point| {
            (0..pts.len())
                .min_by(|&i, &j| coords[i].dist(q).total_cmp(&coords[j].dist(q)))
                .unwrap() as u64
        };
        let forced = [(nearest(Point::new(60.0, 80.0)), nearest(Point::new(440.0, 420.0)))];
        let tri = constrained_delaunay(&pts, &forced).unwrap();
        assert!(tri.has_edge(forced[0].0, forced[0].1));
        assert!(tri
            .constrained_edges()
            .contains(&(forced[0].0.min(forced[0].1), forced[0].0.max(forced[0].1))));
        check_constrained_delaunay(&tri, &forced);
    }
}

#[test]
fn hull_contains_every_input() {
    let pts = random_points(17, 200);
    let coords: Vec<Point> = pts.iter().map(|p| p.1).collect();
    let hull = convex_hull(&coords).unwrap();
    assert!(coords.iter().all(|&p| convex_contains(&hull, p)));
    assert!(hull.iter().all(|h| coords.contains(h)));
}

#[test]
fn hull_side_classification() {
    let hull = square(0.0, 0.0, 1.0);
    let side = (hull[0], hull[1]);
    assert_eq!(
        classify_vertex_vs_hull_side(&hull, side, Point::new(0.5, -1.0)),
        SideClass::OuterHalfplane
    );
    assert_eq!(
        classify_vertex_vs_hull_side(&hull, side, Point::new(0.5, 0.5)),
        SideClass::InnerHalfplane
    );
    assert_eq!(
        classify_vertex_vs_hull_side(&hull, side, Point::new(2.0, 0.0)),
        SideClass::OnLine
    );
}

#[test]
fn polygon_intersection_cases() {
    assert!(!polygons_intersect(&square(0.0, 0.0, 1.0), &square(5.0, 5.0, 1.0)));
    assert!(polygons_intersect(&square(0.0, 0.0, 10.0), &square(2.0, 2.0, 1.0)));
    assert!(!polygons_intersect(&square(0.0, 0.0, 1.0), &square(1.0, 0.0, 1.0)));
}

#[test]
fn kd_leaves_balanced_on_random_points() {
    let pts = random_points(23, 100);
    let part = kd_partition(&pts, 5).unwrap();
    assert_eq!(part.len(), 5);
    let counts: Vec<usize> = part.leaves().iter().map(|l| l.members.len()).collect();
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    assert!(hi - lo <= 1, "{counts:?}");
    assert_eq!(counts.iter().sum::<usize>(), 100);
    // recount: every point lies in the rectangle of its leaf
    for &(id, p) in &pts {
        let leaf = part.leaf_of(id).unwrap();
        assert!(part.leaves()[leaf].rect.contains(p));
        assert!(part.leaves()[leaf].members.contains(&id));
    }
    assert!(kd_partition(&pts[..3], 4).is_err());
}

fn point() -> impl Strategy<Value = Point> {
    (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #[test]
    fn intersection_is_symmetric(a in prop::collection::vec(point(), 3..8), b in prop::collection::vec(point(), 3..8)) {
        let (Ok(ha), Ok(hb)) = (convex_hull(&a), convex_hull(&b)) else { return Ok(()); };
        prop_assert_eq!(polygons_intersect(&ha, &hb), polygons_intersect(&hb, &ha));
    }

    #[test]
    fn affine_interpolates_anchors(src in prop::array::uniform3(point()), dst in prop::array::uniform3(point())) {
        let area = (src[1] - src[0]).cross(src[2] - src[0]).abs();
        prop_assume!(area > 1.0);
        let map = affine_from_triangles(src, dst).unwrap();
        for i in 0..3 {
            prop_assert!(map.apply(src[i]).dist(dst[i]) < 1e-9);
        }
        let dst_area = (dst[1] - dst[0]).cross(dst[2] - dst[0]).abs();
        if dst_area > 1.0 {
            let round = map.inverse().unwrap();
            for p in src {
                prop_assert!(round.apply(map.apply(p)).dist(p) < 1e-9);
            }
        }
    }

    #[test]
    fn delaunay_random_sets(seed in 0u64..1000, n in 3usize..120) {
        let pts = random_points(seed, n);
        let tri = delaunay(&pts).unwrap();
        for t in tri.triangles() {
            let p = tri_points(&tri, t);
            for &(id, d) in &pts {
                prop_assert!(t.contains(&id) || !strictly_inside_circle(p, d));
            }
        }
    }
}
