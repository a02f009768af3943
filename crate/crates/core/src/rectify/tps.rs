//! Thin-plate spline interpolation and image warping.

use nalgebra::{DMatrix, DVector};

use super::raster::Raster;
use crate::error::{Error, Result};
use crate::geom::{convex_hull, Point};
use crate::par;

/// `r^2 log r^2`, continuous at zero.
fn kernel(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

/// A 2D thin-plate spline `f(p) = a + A p + sum_i w_i U(|p - c_i|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinPlateSpline {
    controls: Vec<Point>,
    /// Rows for the x and y outputs: `[a0, ax, ay]`.
    affine: [[f64; 3]; 2],
    weights: Vec<[f64; 2]>,
    lambda: f64,
}

impl ThinPlateSpline {
    pub fn apply(&self, p: Point) -> Point {
        let [ax, ay] = self.affine;
        let mut x = ax[0] + ax[1] * p.x + ax[2] * p.y;
        let mut y = ay[0] + ay[1] * p.x + ay[2] * p.y;
        for (c, w) in self.controls.iter().zip(&self.weights) {
            let d = p - *c;
            let u = kernel(d.dot(d));
            x += w[0] * u;
            y += w[1] * u;
        }
        Point::new(x, y)
    }

    pub fn controls(&self) -> &[Point] {
        &self.controls
    }

    pub fn affine_part(&self) -> [[f64; 3]; 2] {
        self.affine
    }

    pub fn kernel_weights(&self) -> &[[f64; 2]] {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Fits the spline taking `src[i]` to `dst[i]`; `lambda > 0` trades exact
/// interpolation for smoothness.
pub fn tps_fit(src: &[Point], dst: &[Point], lambda: f64) -> Result<ThinPlateSpline> {
    let n = src.len();
    if n != dst.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} source points but {} targets",
            dst.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::validation("spline regularization must be non-negative"));
    }
    convex_hull(src).map_err(|_| Error::degenerate("spline needs 3 non-collinear control points"))?;
    if lambda == 0.0 {
        let mut sorted: Vec<(u64, u64)> = src.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::degenerate("duplicated spline control point"));
        }
    }
    let m = n + 3;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DMatrix::<f64>::zeros(m, 2);
    for i in 0..n {
        for j in 0..n {
            let d = src[i] - src[j];
            a[(i, j)] = kernel(d.dot(d));
        }
        a[(i, i)] += lambda;
        let row = [1.0, src[i].x, src[i].y];
        for (k, v) in row.into_iter().enumerate() {
            a[(i, n + k)] = v;
            a[(n + k, i)] = v;
        }
        b[(i, 0)] = dst[i].x;
        b[(i, 1)] = dst[i].y;
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::degenerate("singular spline system"))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::degenerate("singular spline system"));
    }
    let col = |c: usize| -> DVector<f64> { sol.column(c).into_owned() };
    let (sx, sy) = (col(0), col(1));
    Ok(ThinPlateSpline {
        controls: src.to_vec(),
        affine: [[sx[n], sx[n + 1], sx[n + 2]], [sy[n], sy[n + 1], sy[n + 2]]],
        weights: (0..n).map(|i| [sx[i], sy[i]]).collect(),
        lambda,
    })
}

/// Inverse-mapping warp: output pixel centre `p` takes the bilinear sample of
/// `image` at `tps(p)`; samples falling outside are black.
pub fn tps_warp(image: &Raster, tps: &ThinPlateSpline, width: usize, height: usize) -> Raster {
    warp_with(image, width, height, |p| tps.apply(p))
}

/// Inverse-mapping warp by an arbitrary coordinate map.
pub fn warp_with<F>(image: &Raster, width: usize, height: usize, map: F) -> Raster
where
    F: Fn(Point) -> Point + Sync,
{
    let ch = image.channels();
    let rows: Vec<usize> = (0..height).collect();
    let data: Vec<Vec<u8>> = par::map_collect(&rows, par::enabled(), |&y| {
        let mut row = vec![0u8; width * ch];
        for x in 0..width {
            let q = map(Point::new(x as f64 + 0.5, y as f64 + 0.5));
            for c in 0..ch {
                if let Some(v) = image.sample(q, c) {
                    row[x * ch + c] = v.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        row
    });
    Raster::from_data(width, height, ch, data.concat()).expect("sized buffer")
}
