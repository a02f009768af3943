//! Synthetic scenes with planted object instances.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geom::{convex_hull, AffineMap, Point};
use crate::io::{read_text, KvReader};
use crate::model::{
    normalize_angle, Descriptor, Frame, GroundTruth, ImageTag, KeyPoint, KeyPointSet, TruthInstance, TruthMask,
    DESCRIPTOR_LEN,
};
use crate::rectify::{homography_dlt, tps_fit, Homography, ThinPlateSpline};

/// Deformation applied to one planted instance before placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformKind {
    /// Template coordinates copied verbatim, without placement.
    Identity,
    /// Random anisotropy and shear.
    Affine,
    /// Random perspective distortion.
    Homography,
    /// Smooth warp from random displacements of a control grid, in pixels.
    Tps { amplitude: f64 },
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Affine => "affine",
            TransformKind::Homography => "homography",
            TransformKind::Tps { .. } => "tps",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformKind::Tps { amplitude } => write!(f, "tps:{amplitude}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for TransformKind {
    type Err = Error;
    /// `identity`, `affine`, `homography` or `tps:<amplitude>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" => Ok(TransformKind::Identity),
            "affine" => Ok(TransformKind::Affine),
            "homography" => Ok(TransformKind::Homography),
            other => {
                let amp = other
                    .strip_prefix("tps:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .filter(|a| *a >= 0.0)
                    .ok_or_else(|| Error::validation(format!("unknown transform `{other}`")))?;
                Ok(TransformKind::Tps { amplitude: amp })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outliers {
    Count(usize),
    /// Relative to the number of planted instance keypoints.
    Fraction(f64),
}

/// Parameters of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// One entry per planted instance.
    pub instances: Vec<TransformKind>,
    /// Scene extent; defaults to the template frame.
    pub scene_frame: Option<Frame>,
    pub outliers: Outliers,
    /// Standard deviation of the Gaussian added to descriptor components.
    pub descriptor_noise: f64,
    /// Standard deviation of the Gaussian added to keypoint positions.
    pub position_noise: f64,
    /// Fraction of each instance's keypoints removed.
    pub dropout: f64,
    /// Control points per side of the spline grid.
    pub tps_grid: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            instances: vec![TransformKind::Identity],
            scene_frame: None,
            outliers: Outliers::Count(0),
            descriptor_noise: 0.0,
            position_noise: 0.0,
            dropout: 0.0,
            tps_grid: 4,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dropout >= 0.0 && self.dropout < 1.0) {
            return Err(Error::validation(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if !(self.descriptor_noise >= 0.0) || !(self.position_noise >= 0.0) {
            return Err(Error::validation("noise levels must be non-negative"));
        }
        if let Outliers::Fraction(f) = self.outliers {
            if !(f >= 0.0) {
                return Err(Error::validation("outlier fraction must be non-negative"));
            }
        }
        if self.tps_grid < 2 {
            return Err(Error::validation("tps_grid must be at least 2"));
        }
        if let Some(f) = self.scene_frame {
            if !(f.width > 0.0 && f.height > 0.0) {
                return Err(Error::validation("scene frame must have positive size"));
            }
        }
        Ok(())
    }

    /// Reads the flat `key = value` form. `kinds` is a comma-separated list
    /// cycled over `instances`.
    pub fn from_kv(text: &str, source: &str) -> Result<Self> {
        let mut kv = KvReader::new(text, source)?;
        let mut spec = SynthSpec::default();
        let count: Option<usize> = kv.take("instances")?;
        let kinds: Option<String> = kv.take("kinds")?;
        let kinds: Vec<TransformKind> = match kinds {
            Some(k) => k.split(',').map(str::parse).collect::<Result<_>>()?,
            None => vec![TransformKind::Identity],
        };
        if kinds.is_empty() {
            return Err(Error::validation(format!("{source}: empty `kinds`")));
        }
        let p = count.unwrap_or(kinds.len());
        spec.instances = (0..p).map(|i| kinds[i % kinds.len()]).collect();
        let w: Option<f64> = kv.take("scene_width")?;
        let h: Option<f64> = kv.take("scene_height")?;
        spec.scene_frame = match (w, h) {
            (Some(width), Some(height)) => Some(Frame { width, height }),
            (None, None) => None,
            _ => {
                return Err(Error::validation(format!(
                    "{source}: give both scene_width and scene_height"
                )))
            }
        };
        let count: Option<usize> = kv.take("outliers")?;
        let frac: Option<f64> = kv.take("outlier_fraction")?;
        spec.outliers = match (count, frac) {
            (Some(_), Some(_)) => {
                return Err(Error::validation(format!(
                    "{source}: outliers and outlier_fraction both set"
                )))
            }
            (Some(c), None) => Outliers::Count(c),
            (None, Some(f)) => Outliers::Fraction(f),
            (None, None) => Outliers::Count(0),
        };
        if let Some(v) = kv.take("descriptor_noise")? {
            spec.descriptor_noise = v;
        }
        if let Some(v) = kv.take("position_noise")? {
            spec.position_noise = v;
        }
        if let Some(v) = kv.take("dropout")? {
            spec.dropout = v;
        }
        if let Some(v) = kv.take("tps_grid")? {
            spec.tps_grid = v;
        }
        if let Some(v) = kv.take("seed")? {
            spec.seed = v;
        }
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_kv(&read_text(path)?, &path.display().to_string())
    }
}

/// Random descriptor shaped like a normalized gradient histogram: skewed
/// non-negative components, unit-normalized, clipped at 0.2, renormalized
/// and scaled to 512.
pub fn random_descriptor<R: Rng>(rng: &mut R) -> Descriptor {
    let mut v = [0.0f64; DESCRIPTOR_LEN];
    for x in v.iter_mut() {
        let u: f64 = rng.random();
        *x = u * u * u;
    }
    let normalize = |v: &mut [f64; DESCRIPTOR_LEN]| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
    };
    normalize(&mut v);
    v.iter_mut().for_each(|x| *x = x.min(0.2));
    normalize(&mut v);
    v.iter_mut().for_each(|x| *x *= 512.0);
    Descriptor::new(&v).expect("fixed length")
}

fn random_keypoint<R: Rng>(rng: &mut R, id: u64, frame: Frame) -> KeyPoint {
    let x = rng.random::<f64>() * frame.width;
    let y = rng.random::<f64>() * frame.height;
    let scale = (1.6f64.ln() + rng.random::<f64>() * (8.0f64.ln() - 1.6f64.ln())).exp();
    let orientation = rng.random::<f64>() * TAU;
    KeyPoint::new(id, x, y, scale, orientation, random_descriptor(rng)).expect("valid by construction")
}

/// Template keypoints with ids `0..n`. The first four sit on the frame
/// corners, so the keypoint hull spans the whole template; the rest are
/// uniformly scattered.
pub fn generate_template(n: usize, width: f64, height: f64, seed: u64) -> KeyPointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = Frame { width, height };
    let corners = frame.corners();
    let points = (0..n as u64)
        .map(|id| {
            let mut k = random_keypoint(&mut rng, id, frame);
            if let Some(c) = corners.get(id as usize) {
                (k.x, k.y) = (c.x, c.y);
            }
            k
        })
        .collect();
    KeyPointSet::new(ImageTag::Template, points)
        .expect("sequential ids")
        .with_frame(Some(frame))
}

/// Deformation followed by a similarity placement.
enum Deform {
    Identity,
    Affine(AffineMap),
    Homography(Homography),
    Tps(ThinPlateSpline),
}

impl Deform {
    fn apply(&self, p: Point) -> Point {
        match self {
            Deform::Identity => p,
            Deform::Affine(a) => a.apply(p),
            Deform::Homography(h) => h.apply(p).unwrap_or(p),
            Deform::Tps(t) => t.apply(p),
        }
    }
}

struct InstanceMap {
    deform: Deform,
    placement: AffineMap,
}

impl InstanceMap {
    fn apply(&self, p: Point) -> Point {
        self.placement.apply(self.deform.apply(p))
    }

    /// Jacobian at `p`: exact for linear deformations, central differences
    /// otherwise.
    fn jacobian(&self, p: Point) -> [[f64; 2]; 2] {
        let linear = |a: &AffineMap| [[a.m[0][0], a.m[0][1]], [a.m[1][0], a.m[1][1]]];
        let mul = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
            [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ]
        };
        match &self.deform {
            Deform::Identity => return linear(&self.placement),
            Deform::Affine(a) => return mul(linear(&self.placement), linear(a)),
            _ => {}
        }
        let h = 0.5;
        let dx = (self.apply(p + Point::new(h, 0.0)) - self.apply(p - Point::new(h, 0.0))) * (0.5 / h);
        let dy = (self.apply(p + Point::new(0.0, h)) - self.apply(p - Point::new(0.0, h))) * (0.5 / h);
        [[dx.x, dy.x], [dx.y, dy.y]]
    }
}

fn frame_boundary(frame: Frame, per_side: usize) -> Vec<Point> {
    let c = frame.corners();
    let mut out = Vec::with_capacity(4 * per_side);
    for k in 0..4 {
        let (a, b) = (c[k], c[(k + 1) % 4]);
        for i in 0..per_side {
            out.push(a + (b - a) * (i as f64 / per_side as f64));
        }
    }
    out
}

fn random_deform<R: Rng>(rng: &mut R, kind: TransformKind, frame: Frame, grid: usize) -> Result<Deform> {
    let centre = Point::new(frame.width / 2.0, frame.height / 2.0);
    Ok(match kind {
        TransformKind::Identity => Deform::Identity,
        TransformKind::Affine => {
            let mut u = || rng.random_range(-0.15..=0.15);
            let (ax, ay, sh) = (u(), u(), u());
            let lin = [[1.0 + ax, sh], [0.0, 1.0 + ay]];
            let t = centre
                - Point::new(
                    lin[0][0] * centre.x + lin[0][1] * centre.y,
                    lin[1][0] * centre.x + lin[1][1] * centre.y,
                );
            Deform::Affine(AffineMap {
                m: [[lin[0][0], lin[0][1], t.x], [lin[1][0], lin[1][1], t.y]],
            })
        }
        TransformKind::Homography => {
            let corners = frame.corners();
            let pairs: Vec<(Point, Point)> = corners
                .iter()
                .map(|&c| {
                    let j = Point::new(
                        rng.random_range(-0.12..=0.12) * frame.width,
                        rng.random_range(-0.12..=0.12) * frame.height,
                    );
                    (c, c + j)
                })
                .collect();
            Deform::Homography(homography_dlt(&pairs)?)
        }
        TransformKind::Tps { amplitude } => {
            let mut src = Vec::with_capacity(grid * grid);
            let mut dst = Vec::with_capacity(grid * grid);
            for gy in 0..grid {
                for gx in 0..grid {
                    let p = Point::new(
                        frame.width * gx as f64 / (grid - 1) as f64,
                        frame.height * gy as f64 / (grid - 1) as f64,
                    );
                    let d = if amplitude > 0.0 {
                        Point::new(
                            rng.random_range(-amplitude..=amplitude),
                            rng.random_range(-amplitude..=amplitude),
                        )
                    } else {
                        Point::default()
                    };
                    src.push(p);
                    dst.push(p + d);
                }
            }
            Deform::Tps(tps_fit(&src, &dst, 0.0)?)
        }
    })
}

/// Rotates by a random angle and scales the deformed template outline into
/// the grid cell, at 75-100% of the largest size that fits.
fn random_placement<R: Rng>(rng: &mut R, outline: &[Point], cell: (Point, Point)) -> AffineMap {
    let theta = rng.random_range(-PI..PI);
    let (c, s) = (theta.cos(), theta.sin());
    let rot = |p: Point| Point::new(c * p.x - s * p.y, s * p.x + c * p.y);
    let rotated: Vec<Point> = outline.iter().map(|&p| rot(p)).collect();
    let (lo, hi) = crate::geom::bounds(&rotated).expect("non-empty outline");
    let (cw, ch) = (cell.1.x - cell.0.x, cell.1.y - cell.0.y);
    let fit = (cw / (hi.x - lo.x)).min(ch / (hi.y - lo.y));
    let k = fit * rng.random_range(0.75..=1.0);
    let mid = (lo + hi) * 0.5;
    let target = (cell.0 + cell.1) * 0.5;
    let t = target - rot(Point::default()) - mid * k;
    AffineMap {
        m: [[k * c, -k * s, t.x], [k * s, k * c, t.y]],
    }
}

/// Plants the template in a synthetic scene. Instances occupy the cells of a
/// near-square grid over the scene frame; scene keypoint ids are sequential,
/// instance by instance, followed by the outliers.
pub fn generate_scene(template: &KeyPointSet, spec: &SynthSpec) -> Result<(KeyPointSet, GroundTruth)> {
    spec.validate()?;
    if template.is_empty() {
        return Err(Error::validation("template has no keypoints"));
    }
    let tframe = template.frame_or_bounds();
    let sframe = spec.scene_frame.unwrap_or(tframe);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.instances.len();
    let cols = (p as f64).sqrt().ceil().max(1.0) as usize;
    let rows = p.div_ceil(cols).max(1);
    let (cell_w, cell_h) = (sframe.width / cols as f64, sframe.height / rows as f64);
    let boundary = frame_boundary(tframe, 32);
    let desc_noise =
        Normal::new(0.0, spec.descriptor_noise.max(f64::MIN_POSITIVE)).map_err(|e| Error::validation(e.to_string()))?;
    let pos_noise =
        Normal::new(0.0, spec.position_noise.max(f64::MIN_POSITIVE)).map_err(|e| Error::validation(e.to_string()))?;

    let mut points: Vec<KeyPoint> = Vec::new();
    let mut instances = Vec::with_capacity(p);
    for (i, &kind) in spec.instances.iter().enumerate() {
        let deform = random_deform(&mut rng, kind, tframe, spec.tps_grid)?;
        let placement = if kind == TransformKind::Identity {
            AffineMap::IDENTITY
        } else {
            let outline: Vec<Point> = boundary.iter().map(|&b| deform.apply(b)).collect();
            let (r, c) = (i / cols, i % cols);
            let lo = Point::new(c as f64 * cell_w, r as f64 * cell_h);
            random_placement(&mut rng, &outline, (lo, lo + Point::new(cell_w, cell_h)))
        };
        let map = InstanceMap { deform, placement };

        let n = template.len();
        let keep = ((1.0 - spec.dropout) * n as f64).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut kept: Vec<usize> = order[..keep].to_vec();
        kept.sort_unstable();

        let mut correspondence = BTreeMap::new();
        for idx in kept {
            let t = &template.points()[idx];
            let mut pos = map.apply(t.pos());
            if spec.position_noise > 0.0 {
                pos = pos + Point::new(pos_noise.sample(&mut rng), pos_noise.sample(&mut rng));
            }
            let j = map.jacobian(t.pos());
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let scale = t.scale * det.abs().sqrt().max(1e-6);
            let rot = (j[1][0] - j[0][1]).atan2(j[0][0] + j[1][1]);
            let mut desc = t.descriptor.clone();
            if spec.descriptor_noise > 0.0 {
                for v in desc.values_mut().iter_mut() {
                    *v = (*v + desc_noise.sample(&mut rng)).max(0.0);
                }
            }
            let id = points.len() as u64;
            points.push(KeyPoint::new(
                id,
                pos.x,
                pos.y,
                scale,
                normalize_angle(t.orientation + rot),
                desc,
            )?);
            correspondence.insert(t.id, id);
        }
        let outline: Vec<Point> = boundary.iter().map(|&b| map.apply(b)).collect();
        instances.push(TruthInstance {
            mask: TruthMask::Polygon(convex_hull(&outline)?),
            correspondence,
            kind: Some(kind.name().to_string()),
        });
    }

    let planted = points.len();
    let n_out = match spec.outliers {
        Outliers::Count(c) => c,
        Outliers::Fraction(f) => (f * planted as f64).round() as usize,
    };
    for _ in 0..n_out {
        let id = points.len() as u64;
        points.push(random_keypoint(&mut rng, id, sframe));
    }
    let scene = KeyPointSet::new(ImageTag::Scene, points)?.with_frame(Some(sframe));
    let truth = GroundTruth {
        frame: sframe,
        template_frame: Some(tframe),
        instances,
    };
    Ok((scene, truth))
}
