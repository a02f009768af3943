use super::point::{on_segment, orient2d, Point, EPS};
use crate::error::{Error, Result};

/// Indices of the convex hull vertices in counter-clockwise order, starting
/// from the lexicographically smallest point. Collinear boundary points are
/// dropped.
pub fn convex_hull_indices(points: &[Point]) -> Result<Vec<usize>> {
    if points.len() < 3 {
        return Err(Error::degenerate(format!(
            "convex hull needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (points[a], points[b]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(a.cmp(&b))
    });

    // Andrew's monotone chain.
    let mut hull: Vec<usize> = Vec::with_capacity(2 * points.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 {
                let a = points[hull[hull.len() - 2]];
                let b = points[hull[hull.len() - 1]];
                if orient2d(a, b, points[i]) <= EPS {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::degenerate("convex hull of collinear points"));
    }
    Ok(hull)
}

/// Convex hull as a counter-clockwise polygon.
pub fn convex_hull(points: &[Point]) -> Result<Vec<Point>> {
    Ok(convex_hull_indices(points)?.into_iter().map(|i| points[i]).collect())
}

/// Hull indices extended with the input points lying on hull sides, inserted
/// in boundary order. Forcing these sides in a constrained triangulation never
/// leaves a vertex on the interior of a forced segment.
pub fn boundary_indices(points: &[Point]) -> Result<Vec<usize>> {
    let hull = convex_hull_indices(points)?;
    let mut out = Vec::with_capacity(hull.len());
    for k in 0..hull.len() {
        let (ia, ib) = (hull[k], hull[(k + 1) % hull.len()]);
        let (a, b) = (points[ia], points[ib]);
        out.push(ia);
        let ab = b - a;
        let len2 = ab.dot(ab);
        let mut between: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(i, &p)| i != ia && i != ib && p != a && p != b && on_segment(a, b, p))
            .map(|(i, &p)| ((p - a).dot(ab) / len2, i))
            .collect();
        between.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        out.extend(between.into_iter().map(|(_, i)| i));
    }
    Ok(out)
}

/// Where a point lies relative to one side of a convex polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideClass {
    OnLine,
    InnerHalfplane,
    OuterHalfplane,
}

/// Classifies `c` against the line through `side`, oriented so that the
/// polygon's interior is the inner half-plane. Near-zero determinants
/// (`|det| <= EPS`) are reported as on the line.
pub fn classify_vertex_vs_hull_side(hull: &[Point], side: (Point, Point), c: Point) -> SideClass {
    let (a, b) = side;
    let d = orient2d(a, b, c);
    if d.abs() <= EPS {
        return SideClass::OnLine;
    }
    let interior = interior_sign(hull, a, b);
    if (d > 0.0) == (interior > 0.0) {
        SideClass::InnerHalfplane
    } else {
        SideClass::OuterHalfplane
    }
}

fn interior_sign(hull: &[Point], a: Point, b: Point) -> f64 {
    let n = hull.len().max(1) as f64;
    let centroid = hull.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n);
    let s = orient2d(a, b, centroid);
    if s.abs() > EPS {
        return s;
    }
    // Flat polygon: fall back to the farthest vertex from the side.
    hull.iter()
        .map(|&p| orient2d(a, b, p))
        .max_by(|x, y| x.abs().total_cmp(&y.abs()))
        .unwrap_or(1.0)
}
