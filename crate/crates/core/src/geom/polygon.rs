use super::point::{orient2d, Point, EPS};

/// Signed area; positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * s
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Returns the polygon in counter-clockwise order.
pub fn ensure_ccw(mut poly: Vec<Point>) -> Vec<Point> {
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

pub fn is_convex(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0f64;
    for i in 0..n {
        let d = orient2d(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        if d.abs() <= EPS {
            continue;
        }
        if sign == 0.0 {
            sign = d.signum();
        } else if d.signum() != sign {
            return false;
        }
    }
    sign != 0.0
}

/// Even-odd point-in-polygon test. Points exactly on the boundary may go
/// either way; callers sampling pixel centres do not care.
pub fn contains_point(poly: &[Point], q: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > q.y) != (b.y > q.y) {
            let x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if q.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Closed containment test for a convex counter-clockwise polygon.
pub fn convex_contains(poly: &[Point], q: Point) -> bool {
    let n = poly.len();
    (0..n).all(|i| orient2d(poly[i], poly[(i + 1) % n], q) >= -EPS)
}

/// Sutherland-Hodgman clipping of an arbitrary subject polygon against a
/// convex counter-clockwise clip polygon.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % m]);
        let input = std::mem::take(&mut out);
        let inside = |p: Point| orient2d(a, b, p) >= 0.0;
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            let (ci, pi) = (inside(cur), inside(prev));
            if ci {
                if !pi {
                    out.push(line_intersection(prev, cur, a, b));
                }
                out.push(cur);
            } else if pi {
                out.push(line_intersection(prev, cur, a, b));
            }
            prev = cur;
        }
    }
    out
}

fn line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let d1 = orient2d(a, b, p);
    let d2 = orient2d(a, b, q);
    let denom = d1 - d2;
    if denom.abs() < f64::MIN_POSITIVE {
        return q;
    }
    let t = d1 / denom;
    p + (q - p) * t
}

/// Ear-clipping triangulation of a simple polygon; returns index triples.
pub fn ear_clip(poly: &[Point]) -> Vec<[usize; 3]> {
    let n = poly.len();
    if n < 3 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if signed_area(poly) < 0.0 {
        idx.reverse();
    }
    let mut tris = Vec::with_capacity(n - 2);
    let mut guard = 0usize;
    while idx.len() > 3 && guard < n * n {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if orient2d(a, b, c) <= EPS {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && {
                    let q = poly[j];
                    orient2d(a, b, q) >= 0.0 && orient2d(b, c, q) >= 0.0 && orient2d(c, a, q) >= 0.0
                }
            });
            if !blocked {
                tris.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Numerically flat remainder; drop a vertex to make progress.
            idx.remove(0);
        }
    }
    if idx.len() == 3 && orient2d(poly[idx[0]], poly[idx[1]], poly[idx[2]]) > EPS {
        tris.push([idx[0], idx[1], idx[2]]);
    }
    tris
}

/// Area of the intersection of two simple polygons.
pub fn intersection_area(a: &[Point], b: &[Point]) -> f64 {
    if a.len() < 3 || b.len() < 3 {
        return 0.0;
    }
    if is_convex(b) {
        let clip = ensure_ccw(b.to_vec());
        return area(&clip_convex(a, &clip));
    }
    if is_convex(a) {
        let clip = ensure_ccw(a.to_vec());
        return area(&clip_convex(b, &clip));
    }
    let ta = ear_clip(a);
    let tb = ear_clip(b);
    let mut total = 0.0;
    for t in &ta {
        let ptri = [a[t[0]], a[t[1]], a[t[2]]];
        for u in &tb {
            let clip = [b[u[0]], b[u[1]], b[u[2]]];
            total += area(&clip_convex(&ptri, &clip));
        }
    }
    total
}

/// True iff the interiors of two simple polygons overlap. Polygons that only
/// share boundary points do not intersect.
pub fn polygons_intersect(a: &[Point], b: &[Point]) -> bool {
    intersection_area(a, b) > EPS
}

/// Axis-aligned bounds `(min, max)` of a point list.
pub fn bounds(points: &[Point]) -> Option<(Point, Point)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| {
        (
            Point::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, s: f64) -> Vec<Point> {
        vec![
            Point::new(x, y),
            Point::new(x + s, y),
            Point::new(x + s, y + s),
            Point::new(x, y + s),
        ]
    }

    #[test]
    fn disjoint_contained_and_touching() {
        assert!(!polygons_intersect(&square(0., 0., 1.), &square(5., 5., 1.)));
        assert!(polygons_intersect(&square(1., 1., 1.), &square(0., 0., 4.)));
        assert!(!polygons_intersect(&square(0., 0., 1.), &square(1., 0., 1.)));
        assert!(!polygons_intersect(&square(0., 0., 1.), &square(1., 1., 1.)));
        assert!(polygons_intersect(&square(0., 0., 2.), &square(1., 1., 2.)));
    }

    #[test]
    fn concave_polygons() {
        // An L shape whose notch holds a small square.
        let l = vec![
            Point::new(0., 0.),
            Point::new(4., 0.),
            Point::new(4., 1.),
            Point::new(1., 1.),
            Point::new(1., 4.),
            Point::new(0., 4.),
        ];
        assert!(!is_convex(&l));
        let notch = square(2., 2., 1.);
        assert!(!polygons_intersect(&l, &notch));
        assert!(polygons_intersect(&l, &square(0.5, 0.5, 1.)));
        assert!((area(&l) - 7.0).abs() < 1e-12);
        let tris = ear_clip(&l);
        assert_eq!(tris.len(), 4);
        let sum: f64 = tris.iter().map(|t| area(&[l[t[0]], l[t[1]], l[t[2]]])).sum();
        assert!((sum - 7.0).abs() < 1e-9);
    }

    #[test]
    fn containment() {
        let sq = square(0., 0., 2.);
        assert!(contains_point(&sq, Point::new(1., 1.)));
        assert!(!contains_point(&sq, Point::new(3., 1.)));
        assert!(convex_contains(&sq, Point::new(2., 1.)));
    }
}
