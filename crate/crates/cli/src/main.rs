//! `trigrow` command line: detection, the RANSAC baseline, synthetic scenes,
//! evaluation and mesh dumps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use trigrow::geom::{area, delaunay};
use trigrow::growth::detect_with;
use trigrow::io::{
    load_detections, load_keypoints, load_matches, load_truth, to_json_pretty, write_keypoints, write_text,
    DetectionFile, KeyPointFormat,
};
use trigrow::matching::match_sets;
use trigrow::rectify::{baseline_detect, read_pnm, RansacConfig};
use trigrow::scores::RcsMu;
use trigrow::svg::{render_detections, render_mesh};
use trigrow::synth::{evaluate, format_table, generate_scene, generate_template, SynthSpec};
use trigrow::{Error, GrowthConfig, ImageTag, KeyPointSet, Match, Result};

#[derive(Parser)]
#[command(
    name = "trigrow",
    version,
    about = "Detect deformed object instances by growing feature matches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the growth detector.
    Detect(DetectArgs),
    /// Run the homography RANSAC baseline.
    Baseline(BaselineArgs),
    /// Generate a synthetic template, scene and ground truth.
    Synth(SynthArgs),
    /// Score a detections file against ground truth.
    Eval(EvalArgs),
    /// Write the Delaunay mesh of a keypoint file as JSON and SVG.
    DumpMesh(DumpMeshArgs),
}

#[derive(Args)]
struct Inputs {
    /// Template keypoint file.
    #[arg(long)]
    template: PathBuf,
    /// Scene keypoint file.
    #[arg(long)]
    scene: PathBuf,
    /// Precomputed matches (`template_id scene_id distance` per line).
    #[arg(long)]
    matches: Option<PathBuf>,
    /// Orientation column is in degrees.
    #[arg(long)]
    orientation_degrees: bool,
    /// Nearest-neighbour ratio test threshold.
    #[arg(long)]
    ratio: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write an SVG overlay.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Template image (PPM/PGM) for photometric selection.
    #[arg(long, requires = "scene_image")]
    template_image: Option<PathBuf>,
    /// Scene image (PPM/PGM) for photometric selection.
    #[arg(long, requires = "template_image")]
    scene_image: Option<PathBuf>,
    /// Detector configuration as `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kd_leaves: Option<usize>,
    #[arg(long)]
    ccs_threshold: Option<f64>,
    #[arg(long)]
    rcs_threshold: Option<f64>,
    /// Maximum norm in the reduced consistency score: `paper` or `corrected`.
    #[arg(long)]
    rcs_mu: Option<RcsMu>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// RANSAC sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    /// Inlier transfer error in pixels.
    #[arg(long, default_value_t = 3.0)]
    inlier_threshold: f64,
    #[arg(long, default_value_t = 10)]
    min_inliers: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description as `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Existing template keypoints; a random template is generated otherwise.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long)]
    orientation_degrees: bool,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Keypoints of a generated template.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 240.0)]
    width: f64,
    #[arg(long, default_value_t = 180.0)]
    height: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct DumpMeshArgs {
    /// Keypoint file to triangulate.
    #[arg(long)]
    template: PathBuf,
    #[arg(long)]
    orientation_degrees: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn load_inputs(inputs: &Inputs) -> Result<(KeyPointSet, KeyPointSet)> {
    let format = KeyPointFormat {
        degrees: inputs.orientation_degrees,
    };
    let template = load_keypoints(&inputs.template, ImageTag::Template, format)?;
    let scene = load_keypoints(&inputs.scene, ImageTag::Scene, format)?;
    info!("{} template and {} scene keypoints", template.len(), scene.len());
    Ok((template, scene))
}

fn load_or_match(inputs: &Inputs, template: &KeyPointSet, scene: &KeyPointSet, ratio: f64) -> Result<Vec<Match>> {
    let matches = match &inputs.matches {
        Some(path) => {
            let m = load_matches(path)?;
            trigrow::io::validate_matches(&m, template, scene)?;
            m
        }
        None if template.is_empty() || scene.is_empty() => Vec::new(),
        None => match_sets(template, scene, ratio)?,
    };
    info!("{} matches", matches.len());
    Ok(matches)
}

/// Writes the detections file, the optional overlay and the summary table.
fn write_outputs(inputs: &Inputs, file: &DetectionFile, template: &KeyPointSet, scene: &KeyPointSet) -> Result<()> {
    let json = inputs.out.join("detections.json");
    write_text(&json, &to_json_pretty(file, "detections")?)?;
    if inputs.svg {
        write_text(
            &inputs.out.join("overlay.svg"),
            &render_detections(template, scene, &file.detections),
        )?;
    }
    print!("{}", summary(file));
    Ok(())
}

fn summary(file: &DetectionFile) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>9}  {:>7}  {:>5}  {:>10}  {:>5}",
        "detection", "matches", "seeds", "hull area", "j"
    );
    for (i, d) in file.detections.iter().enumerate() {
        let matches: usize = d.seeds.iter().map(|s| s.matches.len()).sum();
        let labels: usize = d.seeds.iter().map(|s| s.labels.len().max(1)).sum();
        let j = d.score_j.map_or_else(|| "-".to_string(), |j| format!("{j:.0}"));
        let _ = writeln!(
            out,
            "{:>9}  {:>7}  {:>5}  {:>10.1}  {:>5}",
            i + 1,
            matches,
            labels,
            area(&d.scene_hull),
            j
        );
    }
    let _ = writeln!(out, "{} detection(s) ({})", file.detections.len(), file.method);
    out
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => GrowthConfig::from_file(path)?,
        None => GrowthConfig::default(),
    };
    if let Some(v) = args.inputs.ratio {
        cfg.ratio_threshold = v;
    }
    if let Some(v) = args.kd_leaves {
        cfg.kd_leaves = v;
    }
    if let Some(v) = args.ccs_threshold {
        cfg.ccs_threshold = v;
    }
    if let Some(v) = args.rcs_threshold {
        cfg.rcs_threshold = v;
    }
    if let Some(v) = args.rcs_mu {
        cfg.rcs_mu = v;
    }
    cfg.validate()?;

    let (template, scene) = load_inputs(&args.inputs)?;
    let images = match (&args.template_image, &args.scene_image) {
        (Some(t), Some(s)) => Some((read_pnm(t)?, read_pnm(s)?)),
        _ => None,
    };
    let matches = load_or_match(&args.inputs, &template, &scene, cfg.ratio_threshold)?;
    let outcome = detect_with(
        &template,
        &scene,
        Some(&matches),
        images.as_ref().map(|(t, s)| (t, s)),
        &cfg,
    )?;
    for (i, r) in outcome.rounds.iter().enumerate() {
        info!(
            "round {}: {} initial seeds, {} properly expanded, pool {}",
            i + 1,
            r.initial_seeds,
            r.properly_expanded,
            r.pool_size
        );
    }
    let file = DetectionFile::new("growth", scene.frame, &outcome.detections);
    write_outputs(&args.inputs, &file, &template, &scene)
}

fn cmd_baseline(args: &BaselineArgs) -> Result<()> {
    let ratio = args.inputs.ratio.unwrap_or(GrowthConfig::default().ratio_threshold);
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Validation(format!("ratio must lie in (0, 1], got {ratio}")));
    }
    if args.iterations == 0 || args.min_inliers < 4 || !(args.inlier_threshold > 0.0) {
        return Err(Error::Validation(
            "need iterations >= 1, min_inliers >= 4 and a positive inlier threshold".into(),
        ));
    }
    let cfg = RansacConfig {
        iterations: args.iterations,
        inlier_threshold: args.inlier_threshold,
        min_inliers: args.min_inliers,
        seed: args.seed,
        ..RansacConfig::default()
    };
    let (template, scene) = load_inputs(&args.inputs)?;
    let matches = load_or_match(&args.inputs, &template, &scene, ratio)?;
    let dets = baseline_detect(&template, &scene, &matches, &cfg);
    let file = DetectionFile::new("baseline", scene.frame, &dets);
    write_outputs(&args.inputs, &file, &template, &scene)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => SynthSpec::from_file(path)?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let template = match &args.template {
        Some(path) => load_keypoints(
            path,
            ImageTag::Template,
            KeyPointFormat {
                degrees: args.orientation_degrees,
            },
        )?,
        None => {
            if args.points < 4 || !(args.width > 0.0 && args.height > 0.0) {
                return Err(Error::Validation(
                    "a template needs >= 4 points and a positive size".into(),
                ));
            }
            generate_template(args.points, args.width, args.height, spec.seed)
        }
    };
    let (scene, truth) = generate_scene(&template, &spec)?;
    write_keypoints(&args.out.join("template.txt"), &template)?;
    write_keypoints(&args.out.join("scene.txt"), &scene)?;
    write_text(&args.out.join("truth.json"), &to_json_pretty(&truth, "truth")?)?;
    println!(
        "{} instance(s), {} scene keypoints, written to {}",
        truth.instances.len(),
        scene.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let file = load_detections(&args.detections)?;
    let truth = load_truth(&args.truth)?;
    let report = evaluate(&file, &truth, args.truth.parent())?;
    if let Some(path) = &args.json {
        write_text(path, &to_json_pretty(&report, "report")?)?;
    }
    print!("{}", format_table(&report));
    Ok(())
}

fn cmd_dump_mesh(args: &DumpMeshArgs) -> Result<()> {
    let set = load_keypoints(
        &args.template,
        ImageTag::Template,
        KeyPointFormat {
            degrees: args.orientation_degrees,
        },
    )?;
    let pts: Vec<_> = set.points().iter().map(|k| (k.id, k.pos())).collect();
    let tri = delaunay(&pts)?;
    write_text(&args.out.join("mesh.json"), &to_json_pretty(&tri.to_dump(), "mesh")?)?;
    write_text(&args.out.join("mesh.svg"), &render_mesh(&tri))?;
    println!(
        "{} vertices, {} edges, {} triangles",
        tri.vertices().len(),
        tri.edges().len(),
        tri.triangles().len()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
        Command::DumpMesh(a) => cmd_dump_mesh(a),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_io() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRIGROW_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
