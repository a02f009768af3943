//! Domain types shared by the whole pipeline: keypoints, matches, seeds and
//! detections.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

pub const DESCRIPTOR_LEN: usize = 128;

pub type KeyPointId = u64;

/// A 128-dimensional non-negative feature descriptor.
#[derive(Clone, PartialEq)]
pub struct Descriptor(Box<[f64; DESCRIPTOR_LEN]>);

impl Descriptor {
    pub fn new(values: &[f64]) -> Result<Self, usize> {
        let arr: [f64; DESCRIPTOR_LEN] = values.try_into().map_err(|_| values.len())?;
        Ok(Descriptor(Box::new(arr)))
    }

    pub fn zeros() -> Self {
        Descriptor(Box::new([0.0; DESCRIPTOR_LEN]))
    }

    pub fn values(&self) -> &[f64; DESCRIPTOR_LEN] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64; DESCRIPTOR_LEN] {
        &mut self.0
    }

    pub fn distance_sq(&self, other: &Descriptor) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, other: &Descriptor) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

impl fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Descriptor([{}, {}, {}, ..])", self.0[0], self.0[1], self.0[2])
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPoint {
    pub id: KeyPointId,
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    /// Radians in `[0, 2π)`.
    pub orientation: f64,
    pub descriptor: Descriptor,
}

impl KeyPoint {
    pub fn new(id: KeyPointId, x: f64, y: f64, scale: f64, orientation: f64, descriptor: Descriptor) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::validation(format!(
                "keypoint {id}: scale must be positive, got {scale}"
            )));
        }
        if !x.is_finite() || !y.is_finite() || !orientation.is_finite() {
            return Err(Error::validation(format!(
                "keypoint {id}: non-finite position or orientation"
            )));
        }
        Ok(KeyPoint {
            id,
            x,
            y,
            scale,
            orientation: normalize_angle(orientation),
            descriptor,
        })
    }

    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageTag {
    Template,
    Scene,
}

impl fmt::Display for ImageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImageTag::Template => "template",
            ImageTag::Scene => "scene",
        })
    }
}

/// Image extent in pixels; the image covers `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub width: f64,
    pub height: f64,
}

impl Frame {
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(0.0, 0.0),
            Point::new(self.width, 0.0),
            Point::new(self.width, self.height),
            Point::new(0.0, self.height),
        ]
    }
}

/// The keypoints of one image, with total lookup by id.
#[derive(Debug, Clone)]
pub struct KeyPointSet {
    pub image_tag: ImageTag,
    /// Known image extent, if any.
    pub frame: Option<Frame>,
    points: Vec<KeyPoint>,
    index: HashMap<KeyPointId, usize>,
}

impl KeyPointSet {
    pub fn new(image_tag: ImageTag, points: Vec<KeyPoint>) -> Result<Self> {
        let mut index = HashMap::with_capacity(points.len());
        for (i, kp) in points.iter().enumerate() {
            if index.insert(kp.id, i).is_some() {
                return Err(Error::DuplicateId(kp.id));
            }
        }
        Ok(KeyPointSet {
            image_tag,
            frame: None,
            points,
            index,
        })
    }

    pub fn with_frame(mut self, frame: Option<Frame>) -> Self {
        self.frame = frame;
        self
    }

    pub fn points(&self) -> &[KeyPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, id: KeyPointId) -> Option<&KeyPoint> {
        self.index.get(&id).map(|&i| &self.points[i])
    }

    /// Lookup for ids that are known to exist (match endpoints, seed members).
    pub fn expect(&self, id: KeyPointId) -> &KeyPoint {
        self.get(id)
            .unwrap_or_else(|| panic!("{} keypoint {id} missing", self.image_tag))
    }

    pub fn contains(&self, id: KeyPointId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = KeyPointId> + '_ {
        self.points.iter().map(|k| k.id)
    }

    /// The frame if known, otherwise the bounding box of the keypoints
    /// anchored at the origin.
    pub fn frame_or_bounds(&self) -> Frame {
        self.frame.unwrap_or_else(|| {
            let (mut w, mut h) = (0.0f64, 0.0f64);
            for p in &self.points {
                w = w.max(p.x);
                h = h.max(p.y);
            }
            Frame { width: w, height: h }
        })
    }

    /// Axis-aligned bounding rectangle of the keypoints, as a CCW polygon.
    pub fn bounding_rect(&self) -> Option<[Point; 4]> {
        let first = self.points.first()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
        for p in &self.points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        Some([
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    /// Subset keeping only the given ids, preserving order.
    pub fn subset(&self, keep: &BTreeSet<KeyPointId>) -> KeyPointSet {
        let points: Vec<KeyPoint> = self.points.iter().filter(|k| keep.contains(&k.id)).cloned().collect();
        KeyPointSet::new(self.image_tag, points)
            .expect("subset of a valid set has unique ids")
            .with_frame(self.frame)
    }
}

/// A correspondence hypothesis between a template and a scene keypoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub template_id: KeyPointId,
    pub scene_id: KeyPointId,
    /// Euclidean descriptor distance.
    pub distance: f64,
}

impl Match {
    pub fn key(&self) -> (KeyPointId, KeyPointId) {
        (self.template_id, self.scene_id)
    }
}

/// An injective set of matches; with three members it is a matching triangle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Seed {
    by_template: BTreeMap<KeyPointId, Match>,
    scene_ids: BTreeSet<KeyPointId>,
    /// Labels of the initial seeds merged into this one.
    pub provenance: Vec<u32>,
}

impl Seed {
    pub fn new(matches: impl IntoIterator<Item = Match>) -> Result<Self> {
        let mut seed = Seed::default();
        for m in matches {
            if !seed.try_insert(m) {
                return Err(Error::validation(format!(
                    "seed is not injective at match ({}, {})",
                    m.template_id, m.scene_id
                )));
            }
        }
        Ok(seed)
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.provenance = vec![label];
        self
    }

    /// Inserts unless it would break injectivity. Re-inserting an existing
    /// match is a no-op that returns true.
    pub fn try_insert(&mut self, m: Match) -> bool {
        if let Some(existing) = self.by_template.get(&m.template_id) {
            return existing.scene_id == m.scene_id;
        }
        if self.scene_ids.contains(&m.scene_id) {
            return false;
        }
        self.by_template.insert(m.template_id, m);
        self.scene_ids.insert(m.scene_id);
        true
    }

    pub fn remove(&mut self, m: &Match) -> bool {
        match self.by_template.get(&m.template_id) {
            Some(e) if e.scene_id == m.scene_id => {
                self.by_template.remove(&m.template_id);
                self.scene_ids.remove(&m.scene_id);
                true
            }
            _ => false,
        }
    }

    pub fn len(&self) -> usize {
        self.by_template.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_template.is_empty()
    }

    /// Matches in ascending template-id order.
    pub fn matches(&self) -> impl Iterator<Item = &Match> + '_ {
        self.by_template.values()
    }

    pub fn contains(&self, m: &Match) -> bool {
        self.by_template
            .get(&m.template_id)
            .is_some_and(|e| e.scene_id == m.scene_id)
    }

    pub fn scene_of(&self, template_id: KeyPointId) -> Option<KeyPointId> {
        self.by_template.get(&template_id).map(|m| m.scene_id)
    }

    pub fn has_template(&self, id: KeyPointId) -> bool {
        self.by_template.contains_key(&id)
    }

    pub fn has_scene(&self, id: KeyPointId) -> bool {
        self.scene_ids.contains(&id)
    }

    pub fn template_ids(&self) -> impl Iterator<Item = KeyPointId> + '_ {
        self.by_template.keys().copied()
    }

    pub fn shares_match_with(&self, other: &Seed) -> bool {
        other.matches().any(|m| self.contains(m))
    }

    /// Whether the union with `other` is still injective.
    pub fn compatible_with(&self, other: &Seed) -> bool {
        other.matches().all(|m| match self.by_template.get(&m.template_id) {
            Some(e) => e.scene_id == m.scene_id,
            None => !self.scene_ids.contains(&m.scene_id),
        })
    }

    /// Union with a compatible seed; provenance labels are concatenated.
    pub fn merge(&mut self, other: &Seed) {
        debug_assert!(self.compatible_with(other));
        for m in other.matches() {
            self.try_insert(*m);
        }
        self.provenance.extend(other.provenance.iter().copied());
        self.provenance.sort_unstable();
        self.provenance.dedup();
    }

    pub fn template_points(&self, template: &KeyPointSet) -> Vec<Point> {
        self.matches().map(|m| template.expect(m.template_id).pos()).collect()
    }

    pub fn scene_points(&self, scene: &KeyPointSet) -> Vec<Point> {
        self.matches().map(|m| scene.expect(m.scene_id).pos()).collect()
    }

    pub fn distance_sum(&self) -> f64 {
        self.matches().map(|m| m.distance).sum()
    }
}

/// One finalized object occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub seed: Seed,
    pub template_hull: Vec<Point>,
    pub scene_hull: Vec<Point>,
    /// Difference-median score in `[0, 255]`; `None` when no images were
    /// available to compute it.
    pub score_j: Option<f64>,
}

/// Region of a ground-truth instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMask {
    Polygon(Vec<Point>),
    /// Path to a PGM/PPM mask; nonzero samples are inside.
    Raster(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthInstance {
    pub mask: TruthMask,
    /// Planted template id to scene id correspondences.
    pub correspondence: BTreeMap<KeyPointId, KeyPointId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Scene extent.
    pub frame: Frame,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_frame: Option<Frame>,
    pub instances: Vec<TruthInstance>,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        for (i, inst) in self.instances.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for s in inst.correspondence.values() {
                if !seen.insert(*s) {
                    return Err(Error::validation(format!(
                        "truth instance {i}: scene id {s} mapped twice"
                    )));
                }
            }
        }
        Ok(())
    }
}
