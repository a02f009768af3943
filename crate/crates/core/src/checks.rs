//! Geometric gatekeeping for expansion candidates.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geom::{affine_from_triangles, classify_vertex_vs_hull_side, Point, SideClass, Triangulation};
use crate::model::{KeyPointSet, Seed};
use crate::scores::TriangleProjection;

const COHERENCE_T: f64 = 10.0;
const COHERENCE_S: f64 = 0.5;

/// Outcome of the local coherence test.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    /// Back-projection error of each neighbour, in pixels.
    pub errors: Vec<f64>,
    /// Lower median of `errors`; zero when there are none.
    pub median: f64,
    /// Logistic normalization of the median, in `(0, 1]`.
    pub normalized: f64,
    pub accepted: bool,
}

pub fn normalized_error(median: f64) -> f64 {
    1.0 / (1.0 + ((median - COHERENCE_T) * COHERENCE_S).exp())
}

/// Largest median error accepted at the given threshold.
pub fn coherence_boundary(threshold: f64) -> f64 {
    COHERENCE_T + ((1.0 - threshold) / threshold).ln() / COHERENCE_S
}

/// Builds a report from raw errors. An empty set is accepted with a
/// normalized value of one.
pub fn coherence_from_errors(mut errors: Vec<f64>, threshold: f64) -> CoherenceReport {
    if errors.is_empty() {
        return CoherenceReport {
            errors,
            median: 0.0,
            normalized: 1.0,
            accepted: true,
        };
    }
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    let normalized = normalized_error(median);
    errors.shrink_to_fit();
    CoherenceReport {
        errors,
        median,
        normalized,
        accepted: normalized >= threshold,
    }
}

/// Finds the candidate vertices sitting on a side of `hull`: returns the
/// indices `(i, j)` of the shared side, in hull order, and the index of the
/// remaining vertex.
fn shared_side(hull: &[Point], tri: [Point; 3]) -> Option<(usize, usize, usize)> {
    let n = hull.len();
    for k in 0..n {
        let (a, b) = (hull[k], hull[(k + 1) % n]);
        for (i, j, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1), (1, 0, 2), (2, 1, 0), (0, 2, 1)] {
            if tri[i] == a && tri[j] == b {
                return Some((i, j, c));
            }
        }
    }
    None
}

/// Accepts the candidate only if its third vertex lies strictly beyond the
/// shared side, away from the seed, in both images.
pub fn non_intersection_check(hull_t: &[Point], hull_s: &[Point], cand: &TriangleProjection<'_>) -> Result<bool> {
    let tpts = cand.template.map(|k| k.pos());
    let spts = cand.scene.map(|k| k.pos());
    let (i, j, c) = shared_side(hull_t, tpts)
        .ok_or_else(|| Error::Contract("candidate triangle does not share a side with the seed hull".into()))?;
    let in_t = classify_vertex_vs_hull_side(hull_t, (tpts[i], tpts[j]), tpts[c]);
    if in_t != SideClass::OuterHalfplane {
        return Ok(false);
    }
    let in_s = classify_vertex_vs_hull_side(hull_s, (spts[i], spts[j]), spts[c]);
    Ok(in_s == SideClass::OuterHalfplane)
}

/// Median back-projection error of the seed's neighbours of the candidate
/// under the affine map fixed by the candidate triangle.
///
/// The neighbourhood holds the seed members adjacent in `tri_t` to any
/// candidate vertex, except the two candidate vertices already in the seed.
pub fn local_coherence_check(
    seed: &Seed,
    cand: &TriangleProjection<'_>,
    tri_t: &Triangulation,
    template: &KeyPointSet,
    scene: &KeyPointSet,
    threshold: f64,
) -> Result<CoherenceReport> {
    let ids = cand.template.map(|k| k.id);
    let shared: Vec<u64> = ids.iter().copied().filter(|&id| seed.has_template(id)).collect();
    if shared.len() != 2 {
        return Err(Error::Contract(format!(
            "candidate must share exactly two vertices with the seed, shares {}",
            shared.len()
        )));
    }
    let map = affine_from_triangles(cand.template.map(|k| k.pos()), cand.scene.map(|k| k.pos()))?;
    let mut neighbours = BTreeSet::new();
    for &v in &ids {
        for n in tri_t.neighbors(v) {
            if seed.has_template(n) && !shared.contains(&n) {
                neighbours.insert(n);
            }
        }
    }
    let errors = neighbours
        .into_iter()
        .map(|n| {
            let gs = scene.expect(seed.scene_of(n).expect("seed member")).pos();
            gs.dist(map.apply(template.expect(n).pos()))
        })
        .collect();
    Ok(coherence_from_errors(errors, threshold))
}
