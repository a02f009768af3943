//! Robust homography estimation and the greedy multi-instance baseline.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::homography::{homography_dlt, Homography};
use crate::geom::{clip_convex, convex_hull, ensure_ccw, is_convex, Point};
use crate::model::{Detection, KeyPointSet, Match, Seed};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Maximum transfer error of an inlier, in pixels.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    pub seed: u64,
    pub parallel: bool,
    /// Upper bound on instances reported by the baseline detector.
    pub max_instances: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            iterations: 2000,
            inlier_threshold: 3.0,
            min_inliers: 10,
            seed: 0,
            parallel: par::enabled(),
            max_instances: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub homography: Homography,
    /// Indices into the input match slice.
    pub inliers: Vec<usize>,
}

fn inliers_of(h: &Homography, pairs: &[(Point, Point)], thr: f64) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, (s, d))| h.error(*s, *d) < thr)
        .map(|(i, _)| i)
        .collect()
}

fn pairs_of(matches: &[Match], template: &KeyPointSet, scene: &KeyPointSet) -> Vec<(Point, Point)> {
    matches
        .iter()
        .map(|m| (template.expect(m.template_id).pos(), scene.expect(m.scene_id).pos()))
        .collect()
}

/// Best-consensus homography over minimal samples, refit on its inliers.
/// Samples are drawn serially from a seeded generator and scored in
/// parallel, so the result does not depend on the thread count.
pub fn ransac_homography(
    matches: &[Match],
    template: &KeyPointSet,
    scene: &KeyPointSet,
    cfg: &RansacConfig,
) -> Option<RansacResult> {
    let n = matches.len();
    if n < 4 || cfg.iterations == 0 {
        return None;
    }
    let pairs = pairs_of(matches, template, scene);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<[usize; 4]> = (0..cfg.iterations)
        .map(|_| {
            let v = sample(&mut rng, n, 4);
            [v.index(0), v.index(1), v.index(2), v.index(3)]
        })
        .collect();
    let counts = par::map_collect(&samples, cfg.parallel, |s| {
        let sub: Vec<(Point, Point)> = s.iter().map(|&i| pairs[i]).collect();
        homography_dlt(&sub)
            .ok()
            .map(|h| (inliers_of(&h, &pairs, cfg.inlier_threshold).len(), h))
    });
    let (best_count, best_h) =
        counts
            .into_iter()
            .flatten()
            .fold(None::<(usize, Homography)>, |acc, (c, h)| match acc {
                Some((bc, _)) if bc >= c => acc,
                _ => Some((c, h)),
            })?;
    if best_count < cfg.min_inliers.max(4) {
        return None;
    }
    let mut h = best_h;
    let mut inliers = inliers_of(&h, &pairs, cfg.inlier_threshold);
    for _ in 0..4 {
        let sub: Vec<(Point, Point)> = inliers.iter().map(|&i| pairs[i]).collect();
        let Ok(refit) = homography_dlt(&sub) else {
            break;
        };
        let next = inliers_of(&refit, &pairs, cfg.inlier_threshold);
        if next.len() < inliers.len() {
            break;
        }
        let stable = next == inliers;
        h = refit;
        inliers = next;
        if stable {
            break;
        }
    }
    if inliers.len() < cfg.min_inliers {
        return None;
    }
    Some(RansacResult { homography: h, inliers })
}

/// Scene outline of the template rectangle under `h`, clipped to the scene
/// frame. Falls back to the inlier hull when the projection folds.
fn projected_outline(
    h: &Homography,
    template_rect: &[Point; 4],
    scene_rect: &[Point; 4],
    inlier_scene_pts: &[Point],
) -> Vec<Point> {
    let projected: Option<Vec<Point>> = template_rect
        .iter()
        .map(|&p| (h.weight(p) > 0.0).then(|| h.apply(p)).flatten())
        .collect();
    let poly = projected
        .map(ensure_ccw)
        .filter(|p| is_convex(p))
        .or_else(|| convex_hull(inlier_scene_pts).ok());
    match poly {
        Some(p) => ensure_ccw(clip_convex(&p, scene_rect)),
        None => Vec::new(),
    }
}

/// Greedy multi-instance detection: fit, record, remove inliers, repeat.
pub fn baseline_detect(
    template: &KeyPointSet,
    scene: &KeyPointSet,
    matches: &[Match],
    cfg: &RansacConfig,
) -> Vec<Detection> {
    let template_rect = template.frame_or_bounds().corners();
    let scene_rect = scene.frame_or_bounds().corners();
    let mut remaining: Vec<Match> = matches.to_vec();
    let mut out = Vec::new();
    for round in 0..cfg.max_instances {
        let round_cfg = RansacConfig {
            seed: cfg.seed.wrapping_add(round as u64),
            ..cfg.clone()
        };
        let Some(res) = ransac_homography(&remaining, template, scene, &round_cfg) else {
            break;
        };
        // One match per template id: the one the model explains best.
        let mut by_template: BTreeMap<u64, (f64, Match)> = BTreeMap::new();
        let mut used_scene = BTreeSet::new();
        for &i in &res.inliers {
            let m = remaining[i];
            let err = res
                .homography
                .error(template.expect(m.template_id).pos(), scene.expect(m.scene_id).pos());
            let e = by_template.entry(m.template_id).or_insert((err, m));
            if err < e.0 || (err == e.0 && m.scene_id < e.1.scene_id) {
                *e = (err, m);
            }
        }
        let mut seed = Seed::default();
        for (_, m) in by_template.into_values() {
            if used_scene.insert(m.scene_id) {
                seed.try_insert(m);
            }
        }
        seed.provenance = vec![round as u32];
        let scene_pts = seed.scene_points(scene);
        let outline = projected_outline(&res.homography, &template_rect, &scene_rect, &scene_pts);
        let removed: BTreeSet<usize> = res.inliers.iter().copied().collect();
        remaining = remaining
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, m)| m)
            .collect();
        if outline.len() >= 3 {
            out.push(Detection {
                seed,
                template_hull: template_rect.to_vec(),
                scene_hull: outline,
                score_j: None,
            });
        }
    }
    out
}
