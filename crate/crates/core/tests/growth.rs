use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trigrow::geom::{area, convex_hull, delaunay, polygons_intersect, Point};
use trigrow::growth::{
    compose_matching_triangles, detect_with, expand_seed, expansion_step, index_matches, initial_seed_selection,
    merge_seeds, redundant_triplets,
};
use trigrow::matching::match_sets;
use trigrow::synth::{generate_scene, generate_template, Outliers, SynthSpec, TransformKind};
use trigrow::{detect, Descriptor, GroundTruth, GrowthConfig, ImageTag, KeyPoint, KeyPointSet, Match, Seed};

fn m(t: u64, s: u64, d: f64) -> Match {
    Match {
        template_id: t,
        scene_id: s,
        distance: d,
    }
}

fn fixture(kinds: Vec<TransformKind>, seed: u64, size: f64) -> (KeyPointSet, KeyPointSet, GroundTruth, Vec<Match>) {
    let template = generate_template(160, 200.0, 150.0, 500 + seed);
    let spec = SynthSpec {
        instances: kinds,
        scene_frame: Some(trigrow::Frame {
            width: size,
            height: size,
        }),
        outliers: Outliers::Fraction(0.1),
        descriptor_noise: 2.0,
        seed,
        ..SynthSpec::default()
    };
    let (scene, truth) = generate_scene(&template, &spec).unwrap();
    let matches = match_sets(&template, &scene, 0.8).unwrap();
    (template, scene, truth, matches)
}

fn exact_copy(n: usize) -> (KeyPointSet, KeyPointSet, Vec<Match>) {
    let template = generate_template(n, 200.0, 150.0, 3);
    let scene = KeyPointSet::new(ImageTag::Scene, template.points().to_vec()).unwrap();
    let matches = match_sets(&template, &scene, 0.8).unwrap();
    (template, scene, matches)
}

fn is_planted(m: &Match, truth: &GroundTruth) -> bool {
    truth
        .instances
        .iter()
        .any(|i| i.correspondence.get(&m.template_id) == Some(&m.scene_id))
}

fn instance_of(seed: &Seed, truth: &GroundTruth) -> Option<usize> {
    truth.instances.iter().position(|i| {
        seed.matches()
            .all(|m| i.correspondence.get(&m.template_id) == Some(&m.scene_id))
    })
}

#[test]
fn redundant_triplets_expand_one_triangle_eight_ways() {
    // look for an interior triangle whose vertices have 3, 3 and 2
    // neighbours outside it
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(u64, Point)> = (0..12)
            .map(|i| (i, Point::new(rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0)))
            .collect();
        let tri = delaunay(&pts).unwrap();
        let all: BTreeSet<[u64; 3]> = redundant_triplets(&tri).into_iter().collect();
        for &t in tri.triangles() {
            let outside: Vec<Vec<u64>> = (0..3)
                .map(|k| tri.neighbors(t[k]).filter(|n| !t.contains(n)).collect())
                .collect();
            let mut counts: Vec<usize> = outside.iter().map(Vec::len).collect();
            counts.sort_unstable();
            if counts != [2, 3, 3] {
                continue;
            }
            let mut own = BTreeSet::new();
            let mut sorted = t;
            sorted.sort_unstable();
            own.insert(sorted);
            for k in 0..3 {
                for &n in &outside[k] {
                    let mut s = [n, t[(k + 1) % 3], t[(k + 2) % 3]];
                    s.sort_unstable();
                    own.insert(s);
                }
            }
            assert_eq!(own.len(), 1 + 8);
            assert!(own.is_subset(&all));
            return;
        }
    }
    panic!("no triangle with the wanted neighbourhood found");
}

#[test]
fn redundant_triplets_stay_near_the_triangulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let n = rng.random_range(3..60);
        let pts: Vec<(u64, Point)> = (0..n)
            .map(|i| (i, Point::new(rng.random::<f64>() * 50.0, rng.random::<f64>() * 50.0)))
            .collect();
        let tri = delaunay(&pts).unwrap();
        let triples = redundant_triplets(&tri);
        assert!(triples.len() >= tri.triangles().len());
        assert!(triples.windows(2).all(|w| w[0] < w[1]), "sorted and unique");
        for t in &triples {
            assert!(t[0] < t[1] && t[1] < t[2]);
            assert!(tri
                .triangles()
                .iter()
                .any(|f| t.iter().filter(|v| f.contains(v)).count() >= 2));
        }
    }
}

#[test]
fn composition_examples() {
    let distinct = index_matches(&[
        m(1, 10, 1.),
        m(1, 11, 2.),
        m(2, 20, 1.),
        m(2, 21, 2.),
        m(3, 30, 1.),
        m(3, 31, 2.),
    ]);
    let all = compose_matching_triangles([1, 2, 3], &distinct, 32);
    assert_eq!(all.len(), 8);
    assert!(all.windows(2).all(|w| w[0].distance_sum() <= w[1].distance_sum()));
    let shared = index_matches(&[
        m(1, 10, 1.),
        m(1, 11, 2.),
        m(2, 10, 1.),
        m(2, 21, 2.),
        m(3, 30, 1.),
        m(3, 31, 2.),
    ]);
    assert_eq!(compose_matching_triangles([1, 2, 3], &shared, 32).len(), 6);
}

#[test]
fn single_leaf_picks_the_global_best() {
    let (template, scene, _, matches) = fixture(vec![TransformKind::Affine, TransformKind::Affine], 2, 500.0);
    let one = GrowthConfig {
        kd_leaves: 1,
        ..GrowthConfig::default()
    };
    let seeds = initial_seed_selection(&template, &scene, &matches, &one).unwrap();
    assert_eq!(seeds.len(), 1);
    let five = initial_seed_selection(&template, &scene, &matches, &GrowthConfig::default()).unwrap();
    assert!(five.len() <= 5);
    assert!(five.iter().any(|s| s.matches().eq(seeds[0].matches())));
}

#[test]
fn seeds_land_in_different_instances() {
    let (template, scene, truth, matches) = fixture(vec![TransformKind::Affine, TransformKind::Affine], 6, 500.0);
    let seeds = initial_seed_selection(&template, &scene, &matches, &GrowthConfig::default()).unwrap();
    let hit: BTreeSet<usize> = seeds.iter().filter_map(|s| instance_of(s, &truth)).collect();
    assert!(hit.len() >= 2, "{hit:?}");
}

#[test]
fn exact_copy_grows_to_every_match() {
    let (template, scene, matches) = exact_copy(80);
    let cfg = GrowthConfig {
        kd_leaves: 1,
        ..GrowthConfig::default()
    };
    let seed = initial_seed_selection(&template, &scene, &matches, &cfg)
        .unwrap()
        .remove(0);
    let grown = expand_seed(seed, &template, &scene, &index_matches(&matches), &cfg);
    assert_eq!(grown.len(), matches.len());
    assert!(grown.matches().all(|m| m.template_id == m.scene_id));
}

#[test]
fn expansion_is_monotone_and_correct_on_spline_instance() {
    let (template, scene, truth, matches) = fixture(vec![TransformKind::Tps { amplitude: 12.0 }], 11, 400.0);
    let cfg = GrowthConfig::default();
    let index = index_matches(&matches);
    let seeds = initial_seed_selection(&template, &scene, &matches, &cfg).unwrap();
    let correct: Vec<Seed> = seeds.into_iter().filter(|s| instance_of(s, &truth).is_some()).collect();
    assert!(!correct.is_empty());
    for seed in correct {
        let mut cur = seed;
        let mut last_area = area(&convex_hull(&cur.template_points(&template)).unwrap());
        while let Some(next) = expansion_step(&cur, &template, &scene, &index, &cfg).unwrap() {
            assert!(next.len() > cur.len());
            assert!(cur.matches().all(|m| next.contains(m)));
            let a = area(&convex_hull(&next.template_points(&template)).unwrap());
            assert!(a >= last_area - 1e-9);
            last_area = a;
            cur = next;
        }
        let precision = cur.matches().filter(|m| is_planted(m, &truth)).count() as f64 / cur.len() as f64;
        assert_eq!(precision, 1.0);
        assert!(cur.len() >= 20, "grew to {}", cur.len());
    }
}

#[test]
fn three_instances_give_disjoint_detections() {
    let (template, scene, truth, _) = fixture(
        vec![
            TransformKind::Affine,
            TransformKind::Homography,
            TransformKind::Tps { amplitude: 10.0 },
        ],
        8,
        600.0,
    );
    let dets = detect(&template, &scene, &GrowthConfig::default()).unwrap();
    assert_eq!(dets.len(), 3);
    for (i, a) in dets.iter().enumerate() {
        for b in &dets[i + 1..] {
            assert!(!polygons_intersect(&a.scene_hull, &b.scene_hull));
        }
        assert!(a.score_j.is_none());
    }
    let hit: BTreeSet<usize> = dets
        .iter()
        .map(|d| {
            let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
            for mt in d.seed.matches() {
                if let Some(k) = truth
                    .instances
                    .iter()
                    .position(|i| i.correspondence.get(&mt.template_id) == Some(&mt.scene_id))
                {
                    *votes.entry(k).or_default() += 1;
                }
            }
            votes.into_iter().max_by_key(|&(_, v)| v).unwrap().0
        })
        .collect();
    assert_eq!(hit.len(), 3);
}

#[test]
fn serial_and_parallel_agree() {
    let (template, scene, _, matches) = fixture(vec![TransformKind::Affine, TransformKind::Affine], 3, 500.0);
    let par = GrowthConfig {
        parallel: true,
        ..GrowthConfig::default()
    };
    let ser = GrowthConfig {
        parallel: false,
        ..GrowthConfig::default()
    };
    let a = detect_with(&template, &scene, Some(&matches), None, &par).unwrap();
    let b = detect_with(&template, &scene, Some(&matches), None, &ser).unwrap();
    assert_eq!(a.detections, b.detections);
    assert_eq!(a.rounds, b.rounds);
    assert!(a.rounds[0].initial_seeds <= par.kd_leaves);
}

#[test]
fn nothing_to_grow_from() {
    let (template, scene, _) = exact_copy(30);
    let out = detect_with(&template, &scene, Some(&[]), None, &GrowthConfig::default()).unwrap();
    assert!(out.detections.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise: Vec<KeyPoint> = (0..50)
        .map(|i| {
            KeyPoint::new(
                i,
                rng.random::<f64>() * 300.0,
                rng.random::<f64>() * 300.0,
                2.0,
                0.0,
                trigrow::synth::random_descriptor(&mut rng),
            )
            .unwrap()
        })
        .collect();
    let noise = KeyPointSet::new(ImageTag::Scene, noise).unwrap();
    assert!(detect(&template, &noise, &GrowthConfig::default()).unwrap().is_empty());
    let bad = [m(0, 999, 1.0)];
    assert!(detect_with(&template, &scene, Some(&bad), None, &GrowthConfig::default()).is_err());
}

#[test]
fn merging_rules() {
    let kp = |id: u64, x: f64, y: f64| KeyPoint::new(id, x, y, 1.0, 0.0, Descriptor::zeros()).unwrap();
    let scene = KeyPointSet::new(
        ImageTag::Scene,
        vec![
            kp(10, 0.0, 0.0),
            kp(11, 10.0, 0.0),
            kp(12, 0.0, 10.0),
            kp(13, 5.0, 2.0),
            kp(14, 12.0, 3.0),
            kp(15, 4.0, 12.0),
            kp(20, 100.0, 100.0),
            kp(21, 110.0, 100.0),
            kp(22, 100.0, 110.0),
        ],
    )
    .unwrap();
    let a = Seed::new([m(0, 10, 1.), m(1, 11, 1.), m(2, 12, 1.)]).unwrap();
    let overlapping = Seed::new([m(3, 13, 1.), m(4, 14, 1.), m(5, 15, 1.)]).unwrap();
    let far = Seed::new([m(6, 20, 1.), m(7, 21, 1.), m(8, 22, 1.)]).unwrap();
    let merged = merge_seeds(vec![a.clone(), overlapping.clone(), far.clone()], &scene);
    assert_eq!(merged.len(), 2);
    assert_eq!(merged[0].len(), 6);
    assert_eq!(merged[1], far);

    // overlapping hulls but conflicting matches stay apart
    let conflict = Seed::new([m(0, 13, 1.), m(4, 14, 1.), m(5, 15, 1.)]).unwrap();
    assert_eq!(merge_seeds(vec![a.clone(), conflict], &scene).len(), 2);
    // a shared match merges even without hull overlap
    let sharing = Seed::new([m(0, 10, 1.), m(7, 21, 1.), m(8, 22, 1.)]).unwrap();
    assert_eq!(merge_seeds(vec![a, sharing], &scene).len(), 1);
}
