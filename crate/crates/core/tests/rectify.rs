use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trigrow::geom::Point;
use trigrow::rectify::{
    baseline_detect, encode_pnm, encode_pnm_ascii, histogram_match, homography_dlt, parse_pnm, photometric_difference,
    ransac_homography, rasterize_polygon, tps_fit, tps_warp, Homography, RansacConfig, Raster,
};
use trigrow::synth::{
    frame_dims, generate_scene, generate_template, iou, truth_mask, Outliers, SynthSpec, TransformKind,
};
use trigrow::{Descriptor, ImageTag, KeyPoint, KeyPointSet, Match};

fn random_points(rng: &mut ChaCha8Rng, n: usize, w: f64, h: f64) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random::<f64>() * w, rng.random::<f64>() * h))
        .collect()
}

fn random_raster(rng: &mut ChaCha8Rng, w: usize, h: usize, ch: usize) -> Raster {
    let data = (0..w * h * ch).map(|_| rng.random::<u8>()).collect();
    Raster::from_data(w, h, ch, data).unwrap()
}

fn smooth_raster(w: usize, h: usize) -> Raster {
    let mut r = Raster::new(w, h, 1).unwrap();
    for y in 0..h {
        for x in 0..w {
            let v = 128.0 + 60.0 * (x as f64 / 10.0).sin() * (y as f64 / 12.0).cos();
            r.set(x, y, 0, v.round() as u8);
        }
    }
    r
}

fn planted_homography() -> Homography {
    Homography {
        h: [[0.9, 0.12, 40.0], [-0.08, 1.1, 25.0], [4e-4, -2e-4, 1.0]],
    }
}

#[test]
fn tps_interpolates_random_controls() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let src = random_points(&mut rng, 12, 200.0, 150.0);
        let dst = random_points(&mut rng, 12, 200.0, 150.0);
        let tps = tps_fit(&src, &dst, 0.0).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            assert!((tps.apply(*s) - *d).norm() <= 1e-6);
        }
        let w = tps.kernel_weights();
        let sums = w.iter().zip(&src).fold([0.0; 6], |mut acc, (w, p)| {
            for k in 0..2 {
                acc[k] += w[k];
                acc[2 + k] += w[k] * p.x;
                acc[4 + k] += w[k] * p.y;
            }
            acc
        });
        assert!(sums.iter().all(|s| s.abs() < 1e-6), "{sums:?}");
    }
}

#[test]
fn tps_reproduces_affine_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = [[3.0, 1.1, -0.3], [-7.0, 0.2, 0.9]];
    let src = random_points(&mut rng, 15, 100.0, 100.0);
    let dst: Vec<Point> = src
        .iter()
        .map(|p| {
            Point::new(
                a[0][0] + a[0][1] * p.x + a[0][2] * p.y,
                a[1][0] + a[1][1] * p.x + a[1][2] * p.y,
            )
        })
        .collect();
    let tps = tps_fit(&src, &dst, 0.0).unwrap();
    assert!(tps.kernel_weights().iter().flatten().all(|w| w.abs() <= 1e-8));
    for (row, want) in tps.affine_part().iter().zip(&a) {
        for (x, y) in row.iter().zip(want) {
            assert!((x - y).abs() < 1e-6);
        }
    }
    let smoothed = tps_fit(&src, &dst, 10.0).unwrap();
    assert_eq!(smoothed.lambda(), 10.0);
    assert!(
        (smoothed.apply(src[0]) - dst[0]).norm() < 1e-6,
        "affine data has no bending to smooth"
    );
}

#[test]
fn warp_round_trip_through_fitted_inverse() {
    let size = 96;
    let img = smooth_raster(size, size);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let src = random_points(&mut rng, 12, size as f64, size as f64);
    let dst: Vec<Point> = src
        .iter()
        .map(|p| *p + Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect();
    let fwd = tps_fit(&src, &dst, 0.0).unwrap();
    let mut grid_src = Vec::new();
    let mut grid_dst = Vec::new();
    for i in 0..=15 {
        for j in 0..=15 {
            let q = Point::new(i as f64 * size as f64 / 15.0, j as f64 * size as f64 / 15.0);
            grid_src.push(fwd.apply(q));
            grid_dst.push(q);
        }
    }
    let inv = tps_fit(&grid_src, &grid_dst, 0.0).unwrap();
    let once = tps_warp(&img, &fwd, size, size);
    let back = tps_warp(&once, &inv, size, size);
    let mut worst = 0i32;
    for y in 12..size - 12 {
        for x in 12..size - 12 {
            worst = worst.max((back.get(x, y, 0) as i32 - img.get(x, y, 0) as i32).abs());
        }
    }
    assert!(worst <= 2, "max deviation {worst}");
}

#[test]
fn identity_warp_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let img = random_raster(&mut rng, 20, 16, 3);
    let pts = [
        Point::new(0.0, 0.0),
        Point::new(20.0, 0.0),
        Point::new(0.0, 16.0),
        Point::new(9.0, 7.0),
    ];
    let tps = tps_fit(&pts, &pts, 0.0).unwrap();
    assert_eq!(tps_warp(&img, &tps, 20, 16), img);
}

#[test]
fn dlt_recovers_planted_homography() {
    let h = planted_homography();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<(Point, Point)> = random_points(&mut rng, 20, 300.0, 200.0)
        .into_iter()
        .map(|p| (p, h.apply(p).unwrap()))
        .collect();
    let est = homography_dlt(&pairs).unwrap();
    let worst = pairs
        .iter()
        .map(|(s, d)| (est.apply(*s).unwrap() - *d).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");

    let square = [
        Point::new(0.0, 0.0),
        Point::new(10.0, 0.0),
        Point::new(10.0, 10.0),
        Point::new(0.0, 10.0),
    ];
    let scaled: Vec<(Point, Point)> = square.iter().map(|&p| (p, p * 2.0)).collect();
    let est = homography_dlt(&scaled).unwrap();
    let want = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
    for (row, want_row) in est.h.iter().zip(want) {
        for (x, y) in row.iter().zip(want_row) {
            assert!((x - y).abs() < 1e-9);
        }
    }
    assert!(homography_dlt(&scaled[..3]).is_err());
}

fn planted_sets(rng: &mut ChaCha8Rng, inliers: usize, outliers: usize) -> (KeyPointSet, KeyPointSet, Vec<Match>) {
    let h = planted_homography();
    let mut t = Vec::new();
    let mut s = Vec::new();
    let mut m = Vec::new();
    for i in 0..(inliers + outliers) as u64 {
        let p = Point::new(rng.random::<f64>() * 300.0, rng.random::<f64>() * 200.0);
        let q = if (i as usize) < inliers {
            h.apply(p).unwrap()
        } else {
            Point::new(rng.random::<f64>() * 500.0, rng.random::<f64>() * 400.0)
        };
        t.push(KeyPoint::new(i, p.x, p.y, 1.0, 0.0, Descriptor::zeros()).unwrap());
        s.push(KeyPoint::new(100 + i, q.x, q.y, 1.0, 0.0, Descriptor::zeros()).unwrap());
        m.push(Match {
            template_id: i,
            scene_id: 100 + i,
            distance: 1.0,
        });
    }
    (
        KeyPointSet::new(ImageTag::Template, t).unwrap(),
        KeyPointSet::new(ImageTag::Scene, s).unwrap(),
        m,
    )
}

#[test]
fn ransac_plant_and_recover() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = RansacConfig {
        seed: 7,
        ..RansacConfig::default()
    };

    let (t, s, m) = planted_sets(&mut rng, 30, 0);
    let res = ransac_homography(&m, &t, &s, &cfg).unwrap();
    assert_eq!(res.inliers, (0..30).collect::<Vec<_>>());

    let (t, s, m) = planted_sets(&mut rng, 30, 30);
    let res = ransac_homography(&m, &t, &s, &cfg).unwrap();
    let recovered = res.inliers.iter().filter(|&&i| i < 30).count();
    assert!(recovered >= 29, "{recovered}/30");
    assert_eq!(
        ransac_homography(&m, &t, &s, &cfg),
        Some(res),
        "fixed seed is deterministic"
    );
    let serial = RansacConfig {
        parallel: false,
        ..cfg.clone()
    };
    assert_eq!(
        ransac_homography(&m, &t, &s, &serial).unwrap().inliers,
        ransac_homography(&m, &t, &s, &cfg).unwrap().inliers
    );

    let (t, s, m) = planted_sets(&mut rng, 0, 8);
    assert!(ransac_homography(&m, &t, &s, &cfg).is_none());
}

#[test]
fn baseline_separates_two_homography_instances() {
    let template = generate_template(150, 200.0, 150.0, 21);
    let spec = SynthSpec {
        instances: vec![TransformKind::Homography, TransformKind::Homography],
        outliers: Outliers::Count(0),
        seed: 4,
        ..SynthSpec::default()
    };
    let (scene, truth) = generate_scene(&template, &spec).unwrap();
    let matches = trigrow::matching::match_sets(&template, &scene, 0.8).unwrap();
    let dets = baseline_detect(&template, &scene, &matches, &RansacConfig::default());
    assert_eq!(dets.len(), 2);
    let (w, h) = frame_dims(truth.frame);
    let masks: Vec<Vec<bool>> = truth
        .instances
        .iter()
        .map(|i| truth_mask(&i.mask, truth.frame, None).unwrap())
        .collect();
    let mut hit = [false; 2];
    for d in &dets {
        let det = rasterize_polygon(&d.scene_hull, w, h);
        let best = (0..2)
            .max_by(|&a, &b| iou(&det, &masks[a]).unwrap().total_cmp(&iou(&det, &masks[b]).unwrap()))
            .unwrap();
        assert!(iou(&det, &masks[best]).unwrap() > 0.95);
        hit[best] = true;
    }
    assert_eq!(hit, [true, true]);
    let mut used: Vec<_> = dets.iter().flat_map(|d| d.seed.matches().map(|m| m.key())).collect();
    let n = used.len();
    used.sort_unstable();
    used.dedup();
    assert_eq!(used.len(), n, "no match is used twice");

    assert!(baseline_detect(&template, &scene, &[], &RansacConfig::default()).is_empty());
}

#[test]
fn histogram_match_cdf_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cdf = |r: &Raster, c: usize| {
        let mut hist = [0usize; 256];
        for px in r.data().chunks(r.channels()) {
            hist[px[c] as usize] += 1;
        }
        let n = (r.data().len() / r.channels()) as f64;
        let mut acc = 0;
        hist.map(|h| {
            acc += h;
            acc as f64 / n
        })
    };
    for _ in 0..5 {
        let src = random_raster(&mut rng, 64, 48, 3);
        // skewed reference so the mapping is far from identity
        let mut reference = random_raster(&mut rng, 50, 40, 3);
        for v in reference.data_mut() {
            *v = ((*v as f64 / 255.0).powi(3) * 255.0) as u8;
        }
        let out = histogram_match(&src, &reference).unwrap();
        for c in 0..3 {
            let (a, b) = (cdf(&out, c), cdf(&reference, c));
            let linf = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            // a single level can hold more mass than 1/256, so the bound is
            // the largest source level plus the quantum
            let step = cdf(&src, c).windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            assert!(linf <= step.max(1.0 / 256.0) + 1e-12, "{linf}");
        }
        let same = histogram_match(&src, &src).unwrap();
        assert!(same.data().iter().zip(src.data()).all(|(a, b)| a.abs_diff(*b) <= 1));
    }
    let grey = Raster::new(4, 4, 1).unwrap();
    assert!(histogram_match(&grey, &Raster::new(4, 4, 3).unwrap()).is_err());
}

#[test]
fn difference_median() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_raster(&mut rng, 30, 20, 3);
    let full = [
        Point::new(0.0, 0.0),
        Point::new(30.0, 0.0),
        Point::new(30.0, 20.0),
        Point::new(0.0, 20.0),
    ];
    assert_eq!(photometric_difference(&a, &a, &full).unwrap().1, 0.0);

    let mut flat = Raster::new(30, 20, 3).unwrap();
    flat.data_mut().fill(100);
    let mut plus = flat.clone();
    plus.data_mut().fill(103);
    assert_eq!(photometric_difference(&flat, &plus, &full).unwrap().1, 5.0);

    let b = random_raster(&mut rng, 30, 20, 3);
    // no pixel centre lies on an edge
    let mask = [Point::new(3.3, 2.1), Point::new(25.2, 4.7), Point::new(12.1, 18.3)];
    let mut vals = Vec::new();
    for y in 0..20 {
        for x in 0..30 {
            let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
            let inside = (0..3).all(|k| {
                let (p, q) = (mask[k], mask[(k + 1) % 3]);
                (q.x - p.x) * (c.y - p.y) - (q.y - p.y) * (c.x - p.x) >= 0.0
            });
            if inside {
                let s: f64 = (0..3)
                    .map(|ch| (a.get(x, y, ch) as f64 - b.get(x, y, ch) as f64).powi(2))
                    .sum();
                let n = s.sqrt().min(255.0);
                // half down: x.5 goes to x
                let r = if n - n.floor() > 0.5 { n.ceil() } else { n.floor() };
                vals.push(r);
            }
        }
    }
    vals.sort_by(f64::total_cmp);
    assert!(!vals.is_empty());
    assert_eq!(
        photometric_difference(&a, &b, &mask).unwrap().1,
        vals[(vals.len() - 1) / 2]
    );
    assert!(photometric_difference(&a, &Raster::new(30, 21, 3).unwrap(), &mask).is_err());
}

#[test]
fn pnm_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for ch in [1, 3] {
        let r = random_raster(&mut rng, 7, 5, ch);
        assert_eq!(parse_pnm(&encode_pnm(&r), "bin").unwrap(), r);
        assert_eq!(parse_pnm(encode_pnm_ascii(&r).as_bytes(), "ascii").unwrap(), r);
    }
    assert!(parse_pnm(b"P5\n2 2\n255\n\x00", "short").is_err());
}
