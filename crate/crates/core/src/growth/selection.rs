use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::config::GrowthConfig;
use super::triplets::{compose_matching_triangles, index_matches, redundant_triplets, MatchIndex};
use crate::error::Result;
use crate::geom::{delaunay, kd_partition, orientation, Orientation, Point};
use crate::model::{KeyPointId, KeyPointSet, Match, Seed};
use crate::par;
use crate::scores::{ccs, score_vector, TriangleProjection};

/// A scored matching triangle (or expansion candidate) with its tie-break
/// keys.
#[derive(Debug, Clone)]
pub(crate) struct Scored {
    pub seed: Seed,
    pub score: f64,
    pub distance_sum: f64,
    pub template_key: Vec<KeyPointId>,
    pub scene_key: Vec<KeyPointId>,
}

impl Scored {
    pub fn new(seed: Seed, score: f64) -> Self {
        let template_key = seed.template_ids().collect();
        let scene_key = seed.matches().map(|m| m.scene_id).collect();
        Scored {
            distance_sum: seed.distance_sum(),
            seed,
            score,
            template_key,
            scene_key,
        }
    }

    /// Preference order: `Less` means `self` wins.
    pub fn rank(&self, other: &Scored) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.distance_sum.total_cmp(&other.distance_sum))
            .then_with(|| self.template_key.cmp(&other.template_key))
            .then_with(|| self.scene_key.cmp(&other.scene_key))
    }
}

pub(crate) fn best_of(cands: impl IntoIterator<Item = Scored>) -> Option<Scored> {
    cands.into_iter().min_by(|a, b| a.rank(b))
}

/// Projection of a three-match seed, pairing by ascending template id.
pub(crate) fn projection<'a>(seed: &Seed, template: &'a KeyPointSet, scene: &'a KeyPointSet) -> TriangleProjection<'a> {
    let ms: Vec<&Match> = seed.matches().collect();
    TriangleProjection::new(
        [0, 1, 2].map(|i| template.expect(ms[i].template_id)),
        [0, 1, 2].map(|i| scene.expect(ms[i].scene_id)),
    )
}

fn scene_collinear(seed: &Seed, scene: &KeyPointSet) -> bool {
    let p = seed.scene_points(scene);
    orientation(p[0], p[1], p[2]) == Orientation::Collinear
}

/// Every matching triangle of the redundant template triangulation that
/// clears the total consistency threshold.
pub(crate) fn scored_matching_triangles(
    template: &KeyPointSet,
    scene: &KeyPointSet,
    index: &MatchIndex,
    cfg: &GrowthConfig,
) -> Vec<Scored> {
    let pts: Vec<(KeyPointId, Point)> = index.keys().map(|&id| (id, template.expect(id).pos())).collect();
    if pts.len() < 3 {
        return Vec::new();
    }
    let tri = match delaunay(&pts) {
        Ok(t) => t,
        Err(e) => {
            log::debug!("initial selection: {e}");
            return Vec::new();
        }
    };
    let triples = redundant_triplets(&tri);
    let per_triple = par::map_collect(&triples, cfg.parallel, |&t| {
        compose_matching_triangles(t, index, cfg.max_candidates_per_template_triplet)
            .into_iter()
            .filter(|s| !scene_collinear(s, scene))
            .filter_map(|s| {
                let sv = score_vector(&projection(&s, template, scene)).ok()?;
                let score = ccs(&sv).ok()?;
                (score >= cfg.ccs_threshold).then(|| Scored::new(s, score))
            })
            .collect::<Vec<_>>()
    });
    per_triple.into_iter().flatten().collect()
}

/// Picks up to `kd_leaves` initial seeds: the best matching triangle per
/// spatial leaf of the scene keypoints still involved in a match. A triangle
/// belongs to the leaf of its lowest-id scene keypoint.
pub fn initial_seed_selection(
    template: &KeyPointSet,
    scene: &KeyPointSet,
    matches: &[Match],
    cfg: &GrowthConfig,
) -> Result<Vec<Seed>> {
    let index = index_matches(matches);
    let cands = scored_matching_triangles(template, scene, &index, cfg);
    if cands.is_empty() {
        return Ok(Vec::new());
    }
    let scene_ids: BTreeSet<KeyPointId> = matches.iter().map(|m| m.scene_id).collect();
    let scene_pts: Vec<(KeyPointId, Point)> = scene_ids.iter().map(|&id| (id, scene.expect(id).pos())).collect();
    let kd = kd_partition(&scene_pts, cfg.kd_leaves.min(scene_pts.len()))?;
    let mut best: Vec<Option<Scored>> = vec![None; kd.len()];
    for c in cands {
        let lowest = c.scene_key.iter().copied().min().expect("three matches");
        let leaf = kd.leaf_of(lowest).expect("scene id in partition");
        let slot = &mut best[leaf];
        if slot.as_ref().is_none_or(|b| c.rank(b) == Ordering::Less) {
            *slot = Some(c);
        }
    }
    Ok(best.into_iter().flatten().map(|s| s.seed).collect())
}
