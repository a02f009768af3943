use std::collections::BTreeSet;

use super::config::GrowthConfig;
use super::expansion::expand_seed;
use super::selection::initial_seed_selection;
use super::triplets::index_matches;
use crate::error::Result;
use crate::geom::{convex_hull, polygons_intersect, Point};
use crate::matching::match_sets_with;
use crate::model::{Detection, KeyPointSet, Match, Seed};
use crate::par;
use crate::rectify::{photometric_filtering, Raster};

/// Per-round bookkeeping of the outer loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundLog {
    pub initial_seeds: usize,
    pub properly_expanded: usize,
    pub pool_size: usize,
    pub remaining_matches: usize,
}

#[derive(Debug, Clone)]
pub struct DetectOutcome {
    pub detections: Vec<Detection>,
    pub rounds: Vec<RoundLog>,
    /// Seeds after merging, before the final selection.
    pub merged_seeds: Vec<Seed>,
}

fn match_key(m: &Match) -> (u64, u64) {
    m.key()
}

/// Adds a seed to the pool. It is merged into the first pool seed it shares
/// a match with when the union stays injective; matches owned by any other
/// pool seed are stripped first. Returns false if too little is left.
fn admit(pool: &mut Vec<Seed>, mut seed: Seed, min_size: usize) -> bool {
    let target = pool
        .iter()
        .position(|p| p.shares_match_with(&seed) && p.compatible_with(&seed));
    for (i, p) in pool.iter().enumerate() {
        if Some(i) == target {
            continue;
        }
        let shared: Vec<Match> = seed.matches().filter(|m| p.contains(m)).copied().collect();
        for m in shared {
            seed.remove(&m);
        }
    }
    match target {
        Some(t) => {
            pool[t].merge(&seed);
            true
        }
        None if seed.len() >= min_size => {
            pool.push(seed);
            true
        }
        None => false,
    }
}

fn scene_hull(seed: &Seed, scene: &KeyPointSet) -> Option<Vec<Point>> {
    convex_hull(&seed.scene_points(scene)).ok()
}

/// Merges pool seeds to a fixpoint: two seeds merge when their union is
/// injective and they share a match or their scene hulls overlap.
pub fn merge_seeds(mut seeds: Vec<Seed>, scene: &KeyPointSet) -> Vec<Seed> {
    'outer: loop {
        let hulls: Vec<Option<Vec<Point>>> = seeds.iter().map(|s| scene_hull(s, scene)).collect();
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                if !seeds[i].compatible_with(&seeds[j]) {
                    continue;
                }
                let overlap = match (&hulls[i], &hulls[j]) {
                    (Some(a), Some(b)) => polygons_intersect(a, b),
                    _ => false,
                };
                if overlap || seeds[i].shares_match_with(&seeds[j]) {
                    let other = seeds.remove(j);
                    seeds[i].merge(&other);
                    continue 'outer;
                }
            }
        }
        return seeds;
    }
}

/// Runs the full detector from raw keypoint sets.
pub fn detect(template: &KeyPointSet, scene: &KeyPointSet, cfg: &GrowthConfig) -> Result<Vec<Detection>> {
    Ok(detect_with(template, scene, None, None, cfg)?.detections)
}

/// The detector with optional precomputed matches and images. Without images
/// the final selection keeps the largest of overlapping seeds.
pub fn detect_with(
    template: &KeyPointSet,
    scene: &KeyPointSet,
    matches: Option<&[Match]>,
    images: Option<(&Raster, &Raster)>,
    cfg: &GrowthConfig,
) -> Result<DetectOutcome> {
    cfg.validate()?;
    let empty = DetectOutcome {
        detections: Vec::new(),
        rounds: Vec::new(),
        merged_seeds: Vec::new(),
    };
    if template.is_empty() || scene.is_empty() {
        return Ok(empty);
    }
    let all: Vec<Match> = match matches {
        Some(m) => {
            crate::io::validate_matches(m, template, scene)?;
            m.to_vec()
        }
        None => match_sets_with(template, scene, cfg.ratio_threshold, cfg.parallel)?,
    };

    let mut pool: Vec<Seed> = Vec::new();
    let mut consumed: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut rounds = Vec::new();
    let mut next_label = 0u32;
    for _ in 0..cfg.max_iterations {
        let remaining: Vec<Match> = all
            .iter()
            .filter(|m| !consumed.contains(&match_key(m)))
            .copied()
            .collect();
        if remaining.len() < 3 {
            break;
        }
        let seeds = initial_seed_selection(template, scene, &remaining, cfg)?;
        log::info!("initial seeds: {}", seeds.len());
        if seeds.is_empty() {
            rounds.push(RoundLog {
                initial_seeds: 0,
                properly_expanded: 0,
                pool_size: pool.len(),
                remaining_matches: remaining.len(),
            });
            break;
        }
        let labelled: Vec<Seed> = seeds
            .into_iter()
            .map(|s| {
                let s = s.with_label(next_label);
                next_label += 1;
                s
            })
            .collect();
        let index = index_matches(&remaining);
        let expanded = par::map_collect(&labelled, cfg.parallel, |s| {
            expand_seed(s.clone(), template, scene, &index, cfg)
        });
        let proper: Vec<Seed> = expanded.into_iter().filter(|s| s.len() >= cfg.min_seed_size).collect();
        log::debug!("properly expanded seeds: {}", proper.len());
        let n_proper = proper.len();
        let mut admitted = 0;
        for s in proper {
            if admit(&mut pool, s, cfg.min_seed_size) {
                admitted += 1;
            }
        }
        consumed = pool.iter().flat_map(|s| s.matches().map(match_key)).collect();
        rounds.push(RoundLog {
            initial_seeds: labelled.len(),
            properly_expanded: n_proper,
            pool_size: pool.len(),
            remaining_matches: remaining.len(),
        });
        if n_proper == 0 || admitted == 0 {
            break;
        }
    }

    let merged = merge_seeds(pool, scene);
    let detections = photometric_filtering(images, &merged, template, scene, cfg.tps_lambda, cfg.parallel)?;
    Ok(DetectOutcome {
        detections,
        rounds,
        merged_seeds: merged,
    })
}
