//! Exact nearest-neighbour descriptor matching with the ratio test.

use crate::error::{Error, Result};
use crate::model::{KeyPoint, KeyPointSet, Match};
use crate::par;

/// Matches every scene keypoint to its nearest template descriptor when the
/// nearest distance is below `ratio` times the second nearest. Ties go to the
/// smaller template id; a single-keypoint template skips the ratio test.
/// Output follows scene order.
pub fn match_sets(template: &KeyPointSet, scene: &KeyPointSet, ratio: f64) -> Result<Vec<Match>> {
    match_sets_with(template, scene, ratio, par::enabled())
}

pub fn match_sets_with(template: &KeyPointSet, scene: &KeyPointSet, ratio: f64, parallel: bool) -> Result<Vec<Match>> {
    if template.is_empty() || scene.is_empty() {
        return Err(Error::validation("matching needs non-empty keypoint sets"));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::validation(format!("ratio threshold {ratio} not in (0, 1]")));
    }
    // Scan template ids ascending so that strict comparisons keep the
    // smallest id among equal distances.
    let mut tpl: Vec<&KeyPoint> = template.points().iter().collect();
    tpl.sort_by_key(|k| k.id);
    let found = par::map_collect(scene.points(), parallel, |s| nearest_two(&tpl, s));
    Ok(scene
        .points()
        .iter()
        .zip(found)
        .filter_map(|(s, (best, d1sq, d2sq))| {
            let d1 = d1sq.sqrt();
            let accept = tpl.len() == 1 || d1 < ratio * d2sq.sqrt();
            accept.then_some(Match {
                template_id: best,
                scene_id: s.id,
                distance: d1,
            })
        })
        .collect())
}

/// Best template id with the two smallest squared distances. Accumulation
/// stops early once a partial sum exceeds the current second best.
fn nearest_two(tpl: &[&KeyPoint], s: &KeyPoint) -> (u64, f64, f64) {
    let q = s.descriptor.values();
    let (mut best, mut d1, mut d2) = (tpl[0].id, f64::INFINITY, f64::INFINITY);
    for t in tpl {
        let v = t.descriptor.values();
        let mut acc = 0.0;
        let mut pruned = false;
        for chunk in 0..8 {
            for i in chunk * 16..chunk * 16 + 16 {
                let d = v[i] - q[i];
                acc += d * d;
            }
            if acc > d2 {
                pruned = true;
                break;
            }
        }
        if pruned {
            continue;
        }
        if acc < d1 {
            d2 = d1;
            d1 = acc;
            best = t.id;
        } else if acc < d2 {
            d2 = acc;
        }
    }
    (best, d1, d2)
}
