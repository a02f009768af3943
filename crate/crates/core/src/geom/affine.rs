use serde::{Deserialize, Serialize};

use super::point::{orient2d, Point, EPS};
use crate::error::{Error, Result};

/// A 2x3 affine map `[A | t]` acting on pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub m: [[f64; 3]; 2],
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    pub fn translation(dx: f64, dy: f64) -> Self {
        AffineMap {
            m: [[1.0, 0.0, dx], [0.0, 1.0, dy]],
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        let m = &self.m;
        Point::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2],
        )
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let d = self.det();
        if d.abs() < f64::EPSILON {
            return Err(Error::degenerate("singular affine map"));
        }
        let [[a, b, tx], [c, e, ty]] = self.m;
        let (ia, ib, ic, ie) = (e / d, -b / d, -c / d, a / d);
        Ok(AffineMap {
            m: [[ia, ib, -(ia * tx + ib * ty)], [ic, ie, -(ic * tx + ie * ty)]],
        })
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &AffineMap) -> AffineMap {
        let a = &self.m;
        let b = &first.m;
        let mut m = [[0.0; 3]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for c in 0..3 {
                row[c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
            row[2] += a[r][2];
        }
        AffineMap { m }
    }
}

/// The unique affine map sending `src[i]` to `dst[i]`.
pub fn affine_from_triangles(src: [Point; 3], dst: [Point; 3]) -> Result<AffineMap> {
    let d = orient2d(src[0], src[1], src[2]);
    if d.abs() <= EPS {
        return Err(Error::degenerate("collinear source triangle"));
    }
    // Express the map relative to src[0]: A (s_i - s_0) = d_i - d_0.
    let (u1, u2) = (src[1] - src[0], src[2] - src[0]);
    let (v1, v2) = (dst[1] - dst[0], dst[2] - dst[0]);
    let det = u1.x * u2.y - u2.x * u1.y;
    // inverse of [u1 u2] (columns)
    let (i00, i01, i10, i11) = (u2.y / det, -u2.x / det, -u1.y / det, u1.x / det);
    let a00 = v1.x * i00 + v2.x * i10;
    let a01 = v1.x * i01 + v2.x * i11;
    let a10 = v1.y * i00 + v2.y * i10;
    let a11 = v1.y * i01 + v2.y * i11;
    let tx = dst[0].x - (a00 * src[0].x + a01 * src[0].y);
    let ty = dst[0].y - (a10 * src[0].x + a11 * src[0].y);
    Ok(AffineMap {
        m: [[a00, a01, tx], [a10, a11, ty]],
    })
}
