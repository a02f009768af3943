use std::collections::{BTreeMap, BTreeSet};

use crate::geom::{orientation, Orientation, Triangulation};
use crate::model::{KeyPointId, Match, Seed};

/// Each triangle plus every triple obtained by swapping one of its vertices
/// for a graph neighbour of that vertex. Triples are returned as ascending
/// id triples, without duplicates or collinear members.
pub fn redundant_triplets(tri: &Triangulation) -> Vec<[KeyPointId; 3]> {
    let mut out = BTreeSet::new();
    let mut emit = |mut t: [KeyPointId; 3]| {
        t.sort_unstable();
        if t[0] == t[1] || t[1] == t[2] {
            return;
        }
        let p = t.map(|id| tri.point(id).expect("triangulation vertex"));
        if orientation(p[0], p[1], p[2]) != Orientation::Collinear {
            out.insert(t);
        }
    };
    for &t in tri.triangles() {
        emit(t);
        for k in 0..3 {
            let (v, a, b) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            for n in tri.neighbors(v) {
                if n != a && n != b {
                    emit([n, a, b]);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Available matches grouped by template id, each list in ascending
/// `(distance, scene_id)` order.
pub type MatchIndex = BTreeMap<KeyPointId, Vec<Match>>;

pub fn index_matches<'a>(matches: impl IntoIterator<Item = &'a Match>) -> MatchIndex {
    let mut idx: MatchIndex = BTreeMap::new();
    for m in matches {
        idx.entry(m.template_id).or_default().push(*m);
    }
    for list in idx.values_mut() {
        list.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.scene_id.cmp(&b.scene_id)));
    }
    idx
}

/// All injective combinations of one match per template id, keeping the
/// `cap` with the smallest summed descriptor distance.
pub fn compose_matching_triangles(triple: [KeyPointId; 3], matches: &MatchIndex, cap: usize) -> Vec<Seed> {
    let empty = Vec::new();
    let lists = triple.map(|id| matches.get(&id).unwrap_or(&empty));
    let mut combos: Vec<(f64, [KeyPointId; 3], [Match; 3])> = Vec::new();
    for &m0 in lists[0] {
        for &m1 in lists[1] {
            if m1.scene_id == m0.scene_id {
                continue;
            }
            for &m2 in lists[2] {
                if m2.scene_id == m0.scene_id || m2.scene_id == m1.scene_id {
                    continue;
                }
                let sum = m0.distance + m1.distance + m2.distance;
                combos.push((sum, [m0.scene_id, m1.scene_id, m2.scene_id], [m0, m1, m2]));
            }
        }
    }
    combos.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    combos.truncate(cap);
    combos
        .into_iter()
        .map(|(_, _, ms)| Seed::new(ms).expect("distinct ids"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{delaunay, Point};

    fn m(t: u64, s: u64, d: f64) -> Match {
        Match {
            template_id: t,
            scene_id: s,
            distance: d,
        }
    }

    #[test]
    fn lone_triangle() {
        let pts = [
            (0, Point::new(0., 0.)),
            (1, Point::new(3., 0.)),
            (2, Point::new(0., 3.)),
        ];
        let tri = delaunay(&pts).unwrap();
        assert_eq!(redundant_triplets(&tri), vec![[0, 1, 2]]);
    }

    #[test]
    fn composition_counts() {
        let one = index_matches(&[m(1, 10, 1.), m(2, 20, 1.), m(3, 30, 1.)]);
        assert_eq!(compose_matching_triangles([1, 2, 3], &one, 32).len(), 1);
        let two = index_matches(&[
            m(1, 10, 1.),
            m(1, 11, 2.),
            m(2, 20, 1.),
            m(2, 21, 2.),
            m(3, 30, 1.),
            m(3, 31, 2.),
        ]);
        let all = compose_matching_triangles([1, 2, 3], &two, 32);
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].distance_sum(), 3.0);
        assert_eq!(compose_matching_triangles([1, 2, 3], &two, 3).len(), 3);
        let shared = index_matches(&[
            m(1, 10, 1.),
            m(1, 11, 2.),
            m(2, 10, 1.),
            m(2, 21, 2.),
            m(3, 30, 1.),
            m(3, 31, 2.),
        ]);
        assert_eq!(compose_matching_triangles([1, 2, 3], &shared, 32).len(), 6);
        assert!(compose_matching_triangles([1, 2, 9], &shared, 32).is_empty());
    }
}
