use std::collections::{BTreeSet, VecDeque};

use super::config::GrowthConfig;
use super::selection::{best_of, Scored};
use super::triplets::MatchIndex;
use crate::checks::{coherence_boundary, local_coherence_check, non_intersection_check};
use crate::error::Result;
use crate::geom::{
    affine_from_triangles, boundary_indices, constrained_delaunay, convex_contains, convex_hull, delaunay, orient2d,
    Point, Triangulation, EPS,
};
use crate::model::{KeyPointId, KeyPointSet, Match, Seed};
use crate::par;
use crate::scores::{rcs, reduced_score_vector, TriangleProjection};

/// One expansion candidate: hull side `a -> b` extended by `x` through `m`.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    a: KeyPointId,
    b: KeyPointId,
    m: Match,
}

/// Template boundary of the seed in counter-clockwise order, including
/// members lying on hull sides.
fn seed_boundary(seed: &Seed, template: &KeyPointSet) -> Result<Vec<KeyPointId>> {
    let ids: Vec<KeyPointId> = seed.template_ids().collect();
    let pts: Vec<Point> = ids.iter().map(|&id| template.expect(id).pos()).collect();
    Ok(boundary_indices(&pts)?.into_iter().map(|i| ids[i]).collect())
}

/// Vertices within `depth` graph hops of `start`, `start` included.
fn neighbourhood(tri: &Triangulation, start: KeyPointId, depth: usize) -> BTreeSet<KeyPointId> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for n in tri.neighbors(v) {
            if seen.insert(n) {
                queue.push_back((n, d + 1));
            }
        }
    }
    seen
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    c: &Candidate,
    seed: &Seed,
    hull_t: &[Point],
    hull_s: &[Point],
    cdt: &Triangulation,
    template: &KeyPointSet,
    scene: &KeyPointSet,
    cfg: &GrowthConfig,
) -> Option<Scored> {
    let sa = seed.scene_of(c.a)?;
    let sb = seed.scene_of(c.b)?;
    let proj = TriangleProjection::new(
        [
            template.expect(c.a),
            template.expect(c.b),
            template.expect(c.m.template_id),
        ],
        [scene.expect(sa), scene.expect(sb), scene.expect(c.m.scene_id)],
    );
    if !non_intersection_check(hull_t, hull_s, &proj).ok()? {
        return None;
    }
    let coherence = local_coherence_check(seed, &proj, cdt, template, scene, cfg.coherence_threshold).ok()?;
    if !coherence.accepted {
        return None;
    }
    let score = rcs(&reduced_score_vector(&proj).ok()?, cfg.rcs_mu).ok()?;
    if score < cfg.rcs_threshold {
        return None;
    }
    let tri = Seed::new([
        Match {
            template_id: c.a,
            scene_id: sa,
            distance: seed_distance(seed, c.a),
        },
        Match {
            template_id: c.b,
            scene_id: sb,
            distance: seed_distance(seed, c.b),
        },
        c.m,
    ])
    .ok()?;
    Some(Scored::new(tri, score))
}

fn seed_distance(seed: &Seed, template_id: KeyPointId) -> f64 {
    seed.matches()
        .find(|m| m.template_id == template_id)
        .map_or(0.0, |m| m.distance)
}

/// One growth step. Returns the grown seed, or `None` when no candidate
/// survives the checks and the reduced score threshold.
pub fn expansion_step(
    seed: &Seed,
    template: &KeyPointSet,
    scene: &KeyPointSet,
    matches: &MatchIndex,
    cfg: &GrowthConfig,
) -> Result<Option<Seed>> {
    let boundary = seed_boundary(seed, template)?;
    let hull_t: Vec<Point> = boundary.iter().map(|&id| template.expect(id).pos()).collect();

    // Matched template points outside the seed hull, plus the seed itself.
    let mut verts: Vec<(KeyPointId, Point)> = seed.template_ids().map(|id| (id, template.expect(id).pos())).collect();
    for &id in matches.keys() {
        if seed.has_template(id) {
            continue;
        }
        let p = template.expect(id).pos();
        if !convex_contains(&hull_t, p) {
            verts.push((id, p));
        }
    }
    let forced: Vec<(KeyPointId, KeyPointId)> = (0..boundary.len())
        .map(|i| (boundary[i], boundary[(i + 1) % boundary.len()]))
        .collect();
    let cdt = constrained_delaunay(&verts, &forced)?;

    let scene_pts = seed.scene_points(scene);
    let hull_s = convex_hull(&scene_pts).unwrap_or(scene_pts);

    let mut cands = Vec::new();
    for &(a, b) in &forced {
        let Some(apex) = cdt.left_apex(b, a) else {
            continue;
        };
        for x in neighbourhood(&cdt, apex, cfg.expansion_neighbor_depth) {
            if x == a || x == b || seed.has_template(x) {
                continue;
            }
            for m in matches.get(&x).into_iter().flatten() {
                if !seed.has_scene(m.scene_id) {
                    cands.push(Candidate { a, b, m: *m });
                }
            }
        }
    }
    let scored = par::map_collect(&cands, cfg.parallel, |c| {
        evaluate(c, seed, &hull_t, &hull_s, &cdt, template, scene, cfg)
    });
    let Some(best) = best_of(scored.into_iter().flatten()) else {
        return Ok(None);
    };
    let added = *best
        .seed
        .matches()
        .find(|m| !seed.has_template(m.template_id))
        .expect("candidate adds one match");
    let mut grown = seed.clone();
    grown.try_insert(added);
    if cfg.absorb_enclosed {
        absorb_enclosed(&mut grown, template, scene, matches, cfg);
    }
    Ok(Some(grown))
}

/// Adds matched template points now enclosed by the seed hull whose match
/// agrees, within the coherence bound, with the affine map of the seed
/// triangle containing them.
fn absorb_enclosed(
    seed: &mut Seed,
    template: &KeyPointSet,
    scene: &KeyPointSet,
    matches: &MatchIndex,
    cfg: &GrowthConfig,
) {
    let members: Vec<(KeyPointId, Point)> = seed.template_ids().map(|id| (id, template.expect(id).pos())).collect();
    let Ok(hull) = convex_hull(&members.iter().map(|m| m.1).collect::<Vec<_>>()) else {
        return;
    };
    let enclosed: Vec<KeyPointId> = matches
        .keys()
        .copied()
        .filter(|&id| !seed.has_template(id) && convex_contains(&hull, template.expect(id).pos()))
        .collect();
    if enclosed.is_empty() {
        return;
    }
    let Ok(tri) = delaunay(&members) else {
        return;
    };
    let bound = coherence_boundary(cfg.coherence_threshold);
    for id in enclosed {
        let q = template.expect(id).pos();
        let Some(t) = tri.triangles().iter().find(|t| {
            let p = t.map(|v| tri.point(v).expect("vertex"));
            (0..3).all(|k| orient2d(p[k], p[(k + 1) % 3], q) >= -EPS)
        }) else {
            continue;
        };
        let src = t.map(|v| template.expect(v).pos());
        let dst = t.map(|v| scene.expect(seed.scene_of(v).expect("member")).pos());
        let Ok(map) = affine_from_triangles(src, dst) else {
            continue;
        };
        let predicted = map.apply(q);
        let best = matches[&id]
            .iter()
            .filter(|m| !seed.has_scene(m.scene_id))
            .map(|m| (scene.expect(m.scene_id).pos().dist(predicted), m))
            .filter(|(e, _)| *e <= bound)
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.scene_id.cmp(&y.1.scene_id)));
        if let Some((_, m)) = best {
            seed.try_insert(*m);
        }
    }
}

/// Repeats [`expansion_step`] until no growth happens. A degenerate step
/// ends the growth and keeps what was reached.
pub fn expand_seed(
    seed: Seed,
    template: &KeyPointSet,
    scene: &KeyPointSet,
    matches: &MatchIndex,
    cfg: &GrowthConfig,
) -> Seed {
    let mut seed = seed;
    let limit = matches.len() + 1;
    for _ in 0..limit {
        match expansion_step(&seed, template, scene, matches, cfg) {
            Ok(Some(next)) => {
                debug_assert!(next.len() > seed.len());
                seed = next;
            }
            Ok(None) => break,
            Err(e) => {
                log::debug!("expansion stopped at {} matches: {e}", seed.len());
                break;
            }
        }
    }
    seed
}
