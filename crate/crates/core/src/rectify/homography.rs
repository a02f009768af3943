use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{orientation, Orientation, Point};

/// A plane projective map, stored with `h[2][2] = 1` whenever possible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub h: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    fn from_matrix(m: &Matrix3<f64>) -> Self {
        let s = if m[(2, 2)].abs() > 1e-12 { m[(2, 2)] } else { 1.0 };
        let mut h = [[0.0; 3]; 3];
        for (r, row) in h.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)] / s;
            }
        }
        Homography { h }
    }

    fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.h[r][c])
    }

    /// Image of `p`; `None` for points mapped to infinity.
    pub fn apply(&self, p: Point) -> Option<Point> {
        let h = &self.h;
        let w = h[2][0] * p.x + h[2][1] * p.y + h[2][2];
        if w.abs() < 1e-12 {
            return None;
        }
        Some(Point::new(
            (h[0][0] * p.x + h[0][1] * p.y + h[0][2]) / w,
            (h[1][0] * p.x + h[1][1] * p.y + h[1][2]) / w,
        ))
    }

    /// Sign of the homogeneous weight at `p`; positive when `p` stays on the
    /// visible side of the horizon.
    pub fn weight(&self, p: Point) -> f64 {
        self.h[2][0] * p.x + self.h[2][1] * p.y + self.h[2][2]
    }

    pub fn inverse(&self) -> Result<Homography> {
        self.matrix()
            .try_inverse()
            .map(|m| Homography::from_matrix(&m))
            .ok_or_else(|| Error::degenerate("singular homography"))
    }

    pub fn det(&self) -> f64 {
        self.matrix().determinant()
    }

    /// Forward transfer error of a pair.
    pub fn error(&self, src: Point, dst: Point) -> f64 {
        self.apply(src).map_or(f64::INFINITY, |q| q.dist(dst))
    }
}

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
fn normalizer(pts: &[Point]) -> Matrix3<f64> {
    let n = pts.len() as f64;
    let c = pts.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n);
    let mean = pts.iter().map(|&p| p.dist(c)).sum::<f64>() / n;
    let s = if mean > 0.0 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * c.x, 0.0, s, -s * c.y, 0.0, 0.0, 1.0)
}

fn transform(t: &Matrix3<f64>, p: Point) -> Point {
    let v = t * Vector3::new(p.x, p.y, 1.0);
    Point::new(v.x / v.z, v.y / v.z)
}

fn has_collinear_triple(pts: &[Point]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if orientation(pts[i], pts[j], pts[k]) == Orientation::Collinear {
                    return true;
                }
            }
        }
    }
    false
}

/// Normalized direct linear transform from `(source, target)` pairs.
pub fn homography_dlt(pairs: &[(Point, Point)]) -> Result<Homography> {
    let n = pairs.len();
    if n < 4 {
        return Err(Error::degenerate(format!("homography needs 4 pairs, got {n}")));
    }
    let src: Vec<Point> = pairs.iter().map(|p| p.0).collect();
    let dst: Vec<Point> = pairs.iter().map(|p| p.1).collect();
    if n == 4 && (has_collinear_triple(&src) || has_collinear_triple(&dst)) {
        return Err(Error::degenerate("three of four homography points are collinear"));
    }
    let (ts, td) = (normalizer(&src), normalizer(&dst));
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in pairs.iter().enumerate() {
        let p = transform(&ts, *s);
        let q = transform(&td, *d);
        let r = 2 * i;
        let row0 = [0.0, 0.0, 0.0, -p.x, -p.y, -1.0, q.y * p.x, q.y * p.y, q.y];
        let row1 = [p.x, p.y, 1.0, 0.0, 0.0, 0.0, -q.x * p.x, -q.x * p.y, -q.x];
        for c in 0..9 {
            a[(r, c)] = row0[c];
            a[(r + 1, c)] = row1[c];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::degenerate("SVD failed"))?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nine singular values");
    let hn = Matrix3::from_fn(|r, c| v_t[(k, 3 * r + c)]);
    let td_inv = td
        .try_inverse()
        .ok_or_else(|| Error::degenerate("degenerate target points"))?;
    let h = Homography::from_matrix(&(td_inv * hn * ts));
    if !h.h.iter().flatten().all(|v| v.is_finite()) || h.det().abs() < 1e-12 {
        return Err(Error::degenerate("degenerate homography configuration"));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![
            Point::new(0., 0.),
            Point::new(10., 0.),
            Point::new(10., 10.),
            Point::new(0., 10.),
        ]
    }

    #[test]
    fn identity_and_scaling() {
        let pairs: Vec<_> = square().into_iter().map(|p| (p, p)).collect();
        let h = homography_dlt(&pairs).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((h.h[r][c] - Homography::IDENTITY.h[r][c]).abs() < 1e-12);
            }
        }
        let pairs: Vec<_> = square().into_iter().map(|p| (p, p * 2.0)).collect();
        let h = homography_dlt(&pairs).unwrap();
        let want = [[2., 0., 0.], [0., 2., 0.], [0., 0., 1.]];
        for (row, want_row) in h.h.iter().zip(want) {
            for (x, y) in row.iter().zip(want_row) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collinear_quad_rejected() {
        let s = [
            Point::new(0., 0.),
            Point::new(1., 1.),
            Point::new(2., 2.),
            Point::new(0., 5.),
        ];
        let pairs: Vec<_> = s.iter().map(|&p| (p, p)).collect();
        assert!(homography_dlt(&pairs).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let h = Homography {
            h: [[1.1, 0.1, 3.0], [-0.05, 0.9, 2.0], [1e-4, -2e-4, 1.0]],
        };
        let inv = h.inverse().unwrap();
        let p = Point::new(17.0, -4.0);
        assert!(inv.apply(h.apply(p).unwrap()).unwrap().dist(p) < 1e-9);
    }
}
