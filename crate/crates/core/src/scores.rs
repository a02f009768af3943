//! Consistency scores for matching triangles.
//!
//! Each component maps a discrepancy between the template and scene
//! projections of a matching triangle into `(0, 1]` through a Gaussian or a
//! logistic curve; the total scores combine components by their norm.

use std::f64::consts::{PI, SQRT_2, TAU};

use crate::error::{Error, Result};
use crate::model::{Descriptor, KeyPoint};

const DV_MU: f64 = 400.0;
const DV_SIGMA: f64 = 0.015;
const POSITION_SIGMA: f64 = 0.2;
const ORIENTATION_SIGMA: f64 = 1.75;
const SCALE_RATIO_SIGMA: f64 = 10.0;
const TOTAL_MU: f64 = 2.0;
const TOTAL_SIGMA: f64 = 0.2;

/// The two projections of a matching triangle; `template[i]` pairs with
/// `scene[i]`.
#[derive(Debug, Clone, Copy)]
pub struct TriangleProjection<'a> {
    pub template: [&'a KeyPoint; 3],
    pub scene: [&'a KeyPoint; 3],
}

impl<'a> TriangleProjection<'a> {
    pub fn new(template: [&'a KeyPoint; 3], scene: [&'a KeyPoint; 3]) -> Self {
        TriangleProjection { template, scene }
    }
}

/// Component scores; absent entries were not computed for this phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScoreVector {
    pub dv: Option<f64>,
    pub p: Option<f64>,
    pub o: Option<f64>,
    pub sr: Option<f64>,
}

/// Location of the total-score peak for the reduced score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RcsMu {
    /// `mu = 2`. No candidate can reach a 0.6 threshold with it.
    Paper,
    /// `mu = sqrt(2)`, the norm of a perfect two-component vector.
    #[default]
    Corrected,
}

impl RcsMu {
    pub fn value(self) -> f64 {
        match self {
            RcsMu::Paper => 2.0,
            RcsMu::Corrected => SQRT_2,
        }
    }
}

impl std::str::FromStr for RcsMu {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(RcsMu::Paper),
            "corrected" => Ok(RcsMu::Corrected),
            _ => Err(Error::validation(format!(
                "rcs mu must be `paper` or `corrected`, got `{s}`"
            ))),
        }
    }
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp()
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Probability that a match with this descriptor distance is correct.
pub fn dv_probability(distance: f64) -> f64 {
    1.0 / (1.0 + ((distance - DV_MU) * DV_SIGMA).exp())
}

pub fn dv_pair(d_t: &Descriptor, d_s: &Descriptor) -> f64 {
    dv_probability(d_t.distance(d_s))
}

pub fn dv_score(t: &TriangleProjection<'_>) -> f64 {
    (0..3)
        .map(|i| dv_pair(&t.template[i].descriptor, &t.scene[i].descriptor))
        .sum::<f64>()
        / 3.0
}

fn normalized_sides(k: &[&KeyPoint; 3]) -> Result<[f64; 3]> {
    let side = |i: usize, j: usize| k[i].pos().dist(k[j].pos());
    let s = [side(0, 1), side(1, 2), side(2, 0)];
    let perim: f64 = s.iter().sum();
    if !(perim > 0.0) {
        return Err(Error::degenerate("triangle with zero perimeter"));
    }
    Ok(s.map(|l| l / perim))
}

pub fn position_score(t: &TriangleProjection<'_>) -> Result<f64> {
    let a = normalized_sides(&t.template)?;
    let b = normalized_sides(&t.scene)?;
    let x: f64 = (0..3).map(|i| (a[i] - b[i]).abs()).sum();
    Ok(gauss(x, 0.0, POSITION_SIGMA))
}

/// The three relative angles of a keypoint pair.
fn pair_angles(ki: &KeyPoint, kj: &KeyPoint) -> Result<[f64; 3]> {
    let d = ki.pos() - kj.pos();
    if d.x == 0.0 && d.y == 0.0 {
        return Err(Error::degenerate(format!(
            "coincident keypoints {} and {}",
            ki.id, kj.id
        )));
    }
    let dir_ij = d.y.atan2(d.x);
    let dir_ji = (-d.y).atan2(-d.x);
    Ok([
        wrap_angle(ki.orientation - kj.orientation),
        wrap_angle(ki.orientation - dir_ij),
        wrap_angle(kj.orientation - dir_ji),
    ])
}

pub fn orientation_score(t: &TriangleProjection<'_>) -> Result<f64> {
    let mut total = 0.0;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let at = pair_angles(t.template[i], t.template[j])?;
        let as_ = pair_angles(t.scene[i], t.scene[j])?;
        total += (0..3).map(|k| wrap_angle(at[k] - as_[k]).abs()).sum::<f64>();
    }
    Ok(gauss(total / 3.0, 0.0, ORIENTATION_SIGMA))
}

pub fn scale_ratio_score(t: &TriangleProjection<'_>) -> Result<f64> {
    for k in t.template.iter().chain(t.scene.iter()) {
        if !(k.scale > 0.0) {
            return Err(Error::validation(format!(
                "keypoint {} has non-positive scale {}",
                k.id, k.scale
            )));
        }
    }
    let mut total = 0.0;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let (ti, tj) = (t.template[i].scale, t.template[j].scale);
        let (si, sj) = (t.scene[i].scale, t.scene[j].scale);
        total += (ti / tj - si / sj).abs() + (tj / ti - sj / si).abs();
    }
    Ok(gauss(total / 3.0, 0.0, SCALE_RATIO_SIGMA))
}

/// All four components.
pub fn score_vector(t: &TriangleProjection<'_>) -> Result<ScoreVector> {
    Ok(ScoreVector {
        dv: Some(dv_score(t)),
        p: Some(position_score(t)?),
        o: Some(orientation_score(t)?),
        sr: Some(scale_ratio_score(t)?),
    })
}

/// The two components used while expanding a seed.
pub fn reduced_score_vector(t: &TriangleProjection<'_>) -> Result<ScoreVector> {
    Ok(ScoreVector {
        dv: Some(dv_score(t)),
        sr: Some(scale_ratio_score(t)?),
        ..ScoreVector::default()
    })
}

fn require(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Contract(format!("score component `{name}` missing")))
}

/// Total consistency score over all four components.
pub fn ccs(sv: &ScoreVector) -> Result<f64> {
    let v = [
        require(sv.dv, "dv")?,
        require(sv.p, "p")?,
        require(sv.o, "o")?,
        require(sv.sr, "sr")?,
    ];
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(gauss(n, TOTAL_MU, TOTAL_SIGMA))
}

/// Reduced consistency score over the descriptor and scale-ratio components.
pub fn rcs(sv: &ScoreVector, mu: RcsMu) -> Result<f64> {
    let dv = require(sv.dv, "dv")?;
    let sr = require(sv.sr, "sr")?;
    Ok(gauss(dv.hypot(sr), mu.value(), TOTAL_SIGMA))
}
