//! Text and JSON formats for keypoints, matches, detections, ground truth and
//! flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::model::{Descriptor, Detection, Frame, GroundTruth, ImageTag, KeyPoint, KeyPointSet, Match, DESCRIPTOR_LEN};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KeyPointFormat {
    /// Orientation column is in degrees rather than radians.
    pub degrees: bool,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, what: &str, path: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{tok}`")))
}

/// Parses the keypoint format: `id x y scale orientation d0 .. d127` per
/// line. `#` lines are comments, except `# frame W H` which records the image
/// extent.
pub fn parse_keypoints(text: &str, source: &str, tag: ImageTag, format: KeyPointFormat) -> Result<KeyPointSet> {
    let mut points = Vec::new();
    let mut frame = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut toks = comment.split_whitespace();
            if toks.next() == Some("frame") {
                let w: f64 = parse_num(toks.next().unwrap_or(""), "frame width", source, line_no)?;
                let h: f64 = parse_num(toks.next().unwrap_or(""), "frame height", source, line_no)?;
                frame = Some(Frame { width: w, height: h });
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 5 {
            return Err(parse_err(
                source,
                line_no,
                format!("expected at least 5 fields, found {}", toks.len()),
            ));
        }
        let id: u64 = parse_num(toks[0], "id", source, line_no)?;
        let x: f64 = parse_num(toks[1], "x", source, line_no)?;
        let y: f64 = parse_num(toks[2], "y", source, line_no)?;
        let scale: f64 = parse_num(toks[3], "scale", source, line_no)?;
        let mut orientation: f64 = parse_num(toks[4], "orientation", source, line_no)?;
        if format.degrees {
            orientation = orientation.to_radians();
        }
        let desc: Vec<f64> = toks[5..]
            .iter()
            .map(|t| parse_num(t, "descriptor value", source, line_no))
            .collect::<Result<_>>()?;
        if desc.len() != DESCRIPTOR_LEN {
            return Err(Error::DescriptorLength { id, len: desc.len() });
        }
        if let Some(bad) = desc.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(parse_err(
                source,
                line_no,
                format!("descriptor value {bad} is not a finite non-negative number"),
            ));
        }
        let descriptor = Descriptor::new(&desc).expect("length checked");
        let kp = KeyPoint::new(id, x, y, scale, orientation, descriptor).map_err(|e| match e {
            Error::Validation(m) => parse_err(source, line_no, m),
            other => other,
        })?;
        points.push(kp);
    }
    Ok(KeyPointSet::new(tag, points)?.with_frame(frame))
}

pub fn load_keypoints(path: &Path, tag: ImageTag, format: KeyPointFormat) -> Result<KeyPointSet> {
    let text = read_text(path)?;
    parse_keypoints(&text, &path.display().to_string(), tag, format)
}

/// Serializes with shortest round-trip decimals, so reading back is exact.
pub fn format_keypoints(set: &KeyPointSet) -> String {
    let mut out = String::with_capacity(set.len() * 1200);
    if let Some(f) = set.frame {
        let _ = writeln!(out, "# frame {} {}", f.width, f.height);
    }
    for k in set.points() {
        let _ = write!(out, "{} {} {} {} {}", k.id, k.x, k.y, k.scale, k.orientation);
        for v in k.descriptor.values() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_keypoints(path: &Path, set: &KeyPointSet) -> Result<()> {
    write_text(path, &format_keypoints(set))
}

pub fn parse_matches(text: &str, source: &str) -> Result<Vec<Match>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(source, i + 1, "expected `template_id scene_id distance`"));
        }
        let distance: f64 = parse_num(toks[2], "distance", source, i + 1)?;
        if !(distance >= 0.0) {
            return Err(parse_err(source, i + 1, "distance must be non-negative"));
        }
        out.push(Match {
            template_id: parse_num(toks[0], "template id", source, i + 1)?,
            scene_id: parse_num(toks[1], "scene id", source, i + 1)?,
            distance,
        });
    }
    Ok(out)
}

pub fn load_matches(path: &Path) -> Result<Vec<Match>> {
    parse_matches(&read_text(path)?, &path.display().to_string())
}

pub fn format_matches(matches: &[Match]) -> String {
    let mut out = String::new();
    for m in matches {
        let _ = writeln!(out, "{} {} {}", m.template_id, m.scene_id, m.distance);
    }
    out
}

/// Checks that every match endpoint exists.
pub fn validate_matches(matches: &[Match], template: &KeyPointSet, scene: &KeyPointSet) -> Result<()> {
    for m in matches {
        if !template.contains(m.template_id) || !scene.contains(m.scene_id) {
            return Err(Error::validation(format!(
                "match ({}, {}) references a missing keypoint",
                m.template_id, m.scene_id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    /// Labels of the initial seeds merged into this one.
    pub labels: Vec<u32>,
    pub matches: Vec<Match>,
    pub j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub seeds: Vec<SeedRecord>,
    pub template_hull: Vec<Point>,
    pub scene_hull: Vec<Point>,
    pub score_j: Option<f64>,
}

impl From<&Detection> for DetectionRecord {
    fn from(d: &Detection) -> Self {
        DetectionRecord {
            seeds: vec![SeedRecord {
                labels: d.seed.provenance.clone(),
                matches: d.seed.matches().copied().collect(),
                j: d.score_j,
            }],
            template_hull: d.template_hull.clone(),
            scene_hull: d.scene_hull.clone(),
            score_j: d.score_j,
        }
    }
}

/// Output document shared by both detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFile {
    pub method: String,
    pub frame: Option<Frame>,
    pub detections: Vec<DetectionRecord>,
}

impl DetectionFile {
    pub fn new(method: &str, frame: Option<Frame>, detections: &[Detection]) -> Self {
        DetectionFile {
            method: method.to_string(),
            frame,
            detections: detections.iter().map(DetectionRecord::from).collect(),
        }
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T, context: &str) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: context.to_string(),
        source,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        context: context.to_string(),
        source,
    })
}

pub fn load_detections(path: &Path) -> Result<DetectionFile> {
    from_json(&read_text(path)?, &path.display().to_string())
}

pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let truth: GroundTruth = from_json(&read_text(path)?, &path.display().to_string())?;
    truth.validate()?;
    Ok(truth)
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(source, i + 1, "expected `key = value`"))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(parse_err(source, i + 1, "empty key"));
        }
        if out.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(parse_err(source, i + 1, format!("key `{key}` repeated")));
        }
    }
    Ok(out)
}

/// Typed access to a parsed key-value file that reports unknown keys.
pub struct KvReader {
    source: String,
    entries: BTreeMap<String, String>,
}

impl KvReader {
    pub fn new(text: &str, source: &str) -> Result<Self> {
        Ok(KvReader {
            source: source.to_string(),
            entries: parse_kv(text, source)?,
        })
    }

    pub fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::validation(format!("{}: invalid value `{v}` for `{key}`", self.source))),
        }
    }

    /// Fails if any key was never taken.
    pub fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::validation(format!("{}: unknown key `{k}`", self.source))),
        }
    }
}
