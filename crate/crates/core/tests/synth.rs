use trigrow::io::{DetectionFile, DetectionRecord, SeedRecord};
use trigrow::model::TruthMask;
use trigrow::synth::{evaluate, format_table, generate_scene, generate_template, Outliers, SynthSpec, TransformKind};
use trigrow::{Error, Frame, Match};

fn template() -> trigrow::KeyPointSet {
    generate_template(120, 160.0, 120.0, 17)
}

#[test]
fn identity_scene_is_the_template() {
    let t = template();
    let (scene, truth) = generate_scene(&t, &SynthSpec::default()).unwrap();
    assert_eq!(scene.points(), t.points());
    assert_eq!(truth.instances.len(), 1);
    assert!(truth.instances[0].correspondence.iter().all(|(a, b)| a == b));
    assert_eq!(truth.instances[0].correspondence.len(), t.len());
}

#[test]
fn dropout_keeps_the_rounded_share() {
    let t = template();
    let spec = SynthSpec {
        dropout: 0.3,
        ..SynthSpec::default()
    };
    let (scene, truth) = generate_scene(&t, &spec).unwrap();
    let want = (0.7 * t.len() as f64).round() as usize;
    assert_eq!(truth.instances[0].correspondence.len(), want);
    assert_eq!(scene.len(), want);
}

#[test]
fn outliers_are_appended_with_fresh_ids() {
    let t = template();
    let spec = SynthSpec {
        instances: vec![TransformKind::Affine, TransformKind::Homography],
        outliers: Outliers::Count(25),
        ..SynthSpec::default()
    };
    let (scene, truth) = generate_scene(&t, &spec).unwrap();
    let planted: usize = truth.instances.iter().map(|i| i.correspondence.len()).sum();
    assert_eq!(scene.len(), planted + 25);
    let f = truth.frame;
    assert!(scene
        .points()
        .iter()
        .all(|k| (0.0..=f.width).contains(&k.x) && (0.0..=f.height).contains(&k.y)));
}

#[test]
fn fixed_seed_is_bit_identical() {
    let t = template();
    let spec = SynthSpec {
        instances: vec![TransformKind::Tps { amplitude: 15.0 }],
        descriptor_noise: 3.0,
        position_noise: 0.5,
        dropout: 0.1,
        outliers: Outliers::Fraction(0.2),
        seed: 99,
        ..SynthSpec::default()
    };
    let a = generate_scene(&t, &spec).unwrap();
    let b = generate_scene(&t, &spec).unwrap();
    assert_eq!(a.0.points(), b.0.points());
    assert_eq!(a.1, b.1);
    let c = generate_scene(&t, &SynthSpec { seed: 100, ..spec }).unwrap();
    assert_ne!(a.0.points(), c.0.points());
}

fn perfect_file(truth: &trigrow::GroundTruth) -> DetectionFile {
    let inst = &truth.instances[0];
    let TruthMask::Polygon(poly) = &inst.mask else {
        panic!("polygon mask")
    };
    DetectionFile {
        method: "growth".into(),
        frame: Some(truth.frame),
        detections: vec![DetectionRecord {
            seeds: vec![SeedRecord {
                labels: vec![0],
                matches: inst
                    .correspondence
                    .iter()
                    .map(|(&t, &s)| Match {
                        template_id: t,
                        scene_id: s,
                        distance: 0.0,
                    })
                    .collect(),
                j: None,
            }],
            template_hull: poly.clone(),
            scene_hull: poly.clone(),
            score_j: None,
        }],
    }
}

#[test]
fn perfect_detection_scores_one() {
    let (_, truth) = generate_scene(&template(), &SynthSpec::default()).unwrap();
    let report = evaluate(&perfect_file(&truth), &truth, None).unwrap();
    assert_eq!(report.identified, 1);
    assert_eq!(report.instances[0].iou, 1.0);
    assert_eq!((report.precision, report.recall), (1.0, 1.0));
    let table = format_table(&report);
    assert!(
        table.lines().last().unwrap().starts_with("identified 1/1, IoU 1.000"),
        "{table}"
    );
}

#[test]
fn zero_detections_identify_nothing() {
    let spec = SynthSpec {
        instances: vec![TransformKind::Affine, TransformKind::Affine],
        ..SynthSpec::default()
    };
    let (_, truth) = generate_scene(&template(), &spec).unwrap();
    let empty = DetectionFile {
        method: "growth".into(),
        frame: None,
        detections: Vec::new(),
    };
    let report = evaluate(&empty, &truth, None).unwrap();
    assert_eq!((report.identified, report.instances.len()), (0, 2));
    assert_eq!(report.recall, 0.0);
    assert!(format_table(&report).contains("identified 0/2"));
}

#[test]
fn one_detection_serves_one_instance() {
    let spec = SynthSpec {
        instances: vec![TransformKind::Affine, TransformKind::Affine],
        ..SynthSpec::default()
    };
    let (_, truth) = generate_scene(&template(), &spec).unwrap();
    let mut file = perfect_file(&truth);
    file.detections.push(file.detections[0].clone());
    let report = evaluate(&file, &truth, None).unwrap();
    assert_eq!(report.identified, 1);
    let assigned: Vec<_> = report.instances.iter().filter_map(|i| i.detection).collect();
    assert_eq!(assigned, vec![0]);
}

#[test]
fn frame_mismatch_is_rejected() {
    let (_, truth) = generate_scene(&template(), &SynthSpec::default()).unwrap();
    let mut file = perfect_file(&truth);
    file.frame = Some(Frame {
        width: truth.frame.width + 10.0,
        height: truth.frame.height,
    });
    assert!(matches!(evaluate(&file, &truth, None), Err(Error::Validation(_))));
}

#[test]
fn raster_truth_masks_load_relative_to_base_dir() {
    let dir = tempfile::tempdir().unwrap();
    let mut mask = trigrow::rectify::Raster::new(20, 10, 1).unwrap();
    for y in 2..8 {
        for x in 4..14 {
            mask.set(x, y, 0, 255);
        }
    }
    trigrow::rectify::write_pnm(&dir.path().join("m.pgm"), &mask).unwrap();
    let truth = trigrow::GroundTruth {
        frame: Frame {
            width: 20.0,
            height: 10.0,
        },
        template_frame: None,
        instances: vec![trigrow::model::TruthInstance {
            mask: TruthMask::Raster("m.pgm".into()),
            correspondence: Default::default(),
            kind: None,
        }],
    };
    let square = vec![
        trigrow::geom::Point::new(4.0, 2.0),
        trigrow::geom::Point::new(14.0, 2.0),
        trigrow::geom::Point::new(14.0, 8.0),
        trigrow::geom::Point::new(4.0, 8.0),
    ];
    let file = DetectionFile {
        method: "baseline".into(),
        frame: None,
        detections: vec![DetectionRecord {
            seeds: vec![],
            template_hull: square.clone(),
            scene_hull: square,
            score_j: None,
        }],
    };
    let report = evaluate(&file, &truth, Some(dir.path())).unwrap();
    assert_eq!(report.instances[0].iou, 1.0);
    let small = trigrow::GroundTruth {
        frame: Frame {
            width: 30.0,
            height: 10.0,
        },
        ..truth
    };
    assert!(matches!(
        evaluate(&file, &small, Some(dir.path())),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn spec_file_parsing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.conf");
    std::fs::write(
        &path,
        "instances = 3\nkinds = affine, tps:8\nseed = 5\noutlier_fraction = 0.1\n",
    )
    .unwrap();
    let spec = SynthSpec::from_file(&path).unwrap();
    assert_eq!(
        spec.instances,
        vec![
            TransformKind::Affine,
            TransformKind::Tps { amplitude: 8.0 },
            TransformKind::Affine
        ]
    );
    assert_eq!(spec.seed, 5);
    std::fs::write(&path, "outliers = 3\noutlier_fraction = 0.1\n").unwrap();
    assert!(SynthSpec::from_file(&path).is_err());
    std::fs::write(&path, "bogus = 1\n").unwrap();
    assert!(SynthSpec::from_file(&path).is_err());
}
