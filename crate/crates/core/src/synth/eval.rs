//! Figures of merit against planted ground truth.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{DetectionFile, DetectionRecord};
use crate::model::{Frame, GroundTruth, TruthMask};
use crate::rectify::{rasterize_polygon, read_pnm};

/// IoU threshold for counting an instance as identified.
pub const IDENTIFIED_IOU: f64 = 0.5;

/// Intersection over union of two boolean masks; 0 when both are empty.
pub fn iou(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "masks have {} and {} pixels",
            a.len(),
            b.len()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

/// Pixel grid size of a frame.
pub fn frame_dims(frame: Frame) -> (usize, usize) {
    (
        frame.width.ceil().max(0.0) as usize,
        frame.height.ceil().max(0.0) as usize,
    )
}

/// Rasterizes a truth mask. Raster masks are resolved against `base_dir`
/// and count every non-zero pixel.
pub fn truth_mask(mask: &TruthMask, frame: Frame, base_dir: Option<&Path>) -> Result<Vec<bool>> {
    let (w, h) = frame_dims(frame);
    match mask {
        TruthMask::Polygon(poly) => Ok(rasterize_polygon(poly, w, h)),
        TruthMask::Raster(rel) => {
            let path = base_dir.map(|d| d.join(rel)).unwrap_or_else(|| rel.into());
            let img = read_pnm(&path)?;
            if img.width() != w || img.height() != h {
                return Err(Error::DimensionMismatch(format!(
                    "{}: mask is {}x{}, scene frame is {w}x{h}",
                    path.display(),
                    img.width(),
                    img.height()
                )));
            }
            Ok((0..w * h).map(|i| img.is_set(i % w, i / w)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance: usize,
    pub kind: Option<String>,
    /// Index of the assigned detection.
    pub detection: Option<usize>,
    pub iou: f64,
    pub identified: bool,
    pub j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Option<String>,
    pub instances: Vec<InstanceReport>,
    pub detections: usize,
    pub identified: usize,
    pub mean_iou: f64,
    /// Distinct matches over all detections.
    pub detected_matches: usize,
    pub planted_matches: usize,
    pub correct_matches: usize,
    pub precision: f64,
    pub recall: f64,
    pub identified_iou: f64,
}

/// Assigns detections to truth instances greedily by descending IoU, one to
/// one, and scores the union of detected matches against the planted
/// correspondences. Precision is 1 when nothing is detected.
pub fn evaluate(file: &DetectionFile, truth: &GroundTruth, base_dir: Option<&Path>) -> Result<EvalReport> {
    if let Some(f) = file.frame {
        if frame_dims(f) != frame_dims(truth.frame) {
            return Err(Error::validation(format!(
                "detections are for a {}x{} scene, truth is {}x{}",
                f.width, f.height, truth.frame.width, truth.frame.height
            )));
        }
    }
    let (w, h) = frame_dims(truth.frame);
    let truth_masks: Vec<Vec<bool>> = truth
        .instances
        .iter()
        .map(|inst| truth_mask(&inst.mask, truth.frame, base_dir))
        .collect::<Result<_>>()?;
    let det_masks: Vec<Vec<bool>> = file
        .detections
        .iter()
        .map(|d| rasterize_polygon(&d.scene_hull, w, h))
        .collect();

    let mut pairs = Vec::new();
    for (d, dm) in det_masks.iter().enumerate() {
        for (t, tm) in truth_masks.iter().enumerate() {
            let v = iou(dm, tm)?;
            if v > 0.0 {
                pairs.push((v, d, t));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut det_used = vec![false; det_masks.len()];
    let mut assigned: Vec<Option<(usize, f64)>> = vec![None; truth_masks.len()];
    for (v, d, t) in pairs {
        if !det_used[d] && assigned[t].is_none() {
            det_used[d] = true;
            assigned[t] = Some((d, v));
        }
    }

    let instances: Vec<InstanceReport> = truth
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let (detection, iou) = match assigned[i] {
                Some((d, v)) => (Some(d), v),
                None => (None, 0.0),
            };
            InstanceReport {
                instance: i,
                kind: inst.kind.clone(),
                detection,
                iou,
                identified: iou >= IDENTIFIED_IOU,
                j: detection.and_then(|d| file.detections[d].score_j),
            }
        })
        .collect();

    let detected: BTreeSet<(u64, u64)> = file.detections.iter().flat_map(record_matches).collect();
    let planted: BTreeSet<(u64, u64)> = truth
        .instances
        .iter()
        .flat_map(|inst| inst.correspondence.iter().map(|(&t, &s)| (t, s)))
        .collect();
    let correct = detected.intersection(&planted).count();
    let identified = instances.iter().filter(|r| r.identified).count();
    let mean_iou = if instances.is_empty() {
        0.0
    } else {
        instances.iter().map(|r| r.iou).sum::<f64>() / instances.len() as f64
    };
    Ok(EvalReport {
        method: Some(file.method.clone()),
        detections: file.detections.len(),
        identified,
        mean_iou,
        detected_matches: detected.len(),
        planted_matches: planted.len(),
        correct_matches: correct,
        precision: if detected.is_empty() {
            1.0
        } else {
            correct as f64 / detected.len() as f64
        },
        recall: if planted.is_empty() {
            1.0
        } else {
            correct as f64 / planted.len() as f64
        },
        identified_iou: IDENTIFIED_IOU,
        instances,
    })
}

fn record_matches(d: &DetectionRecord) -> impl Iterator<Item = (u64, u64)> + '_ {
    d.seeds
        .iter()
        .flat_map(|s| s.matches.iter().map(|m| (m.template_id, m.scene_id)))
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Plain-text table, one row per instance, closed by a summary row.
pub fn format_table(report: &EvalReport) -> String {
    let header = ["instance", "kind", "detection", "identified", "IoU", "j"];
    let rows: Vec<[String; 6]> = report
        .instances
        .iter()
        .map(|r| {
            [
                (r.instance + 1).to_string(),
                r.kind.clone().unwrap_or_else(|| "-".into()),
                r.detection.map_or_else(|| "-".into(), |d| (d + 1).to_string()),
                if r.identified { "yes" } else { "no" }.to_string(),
                format!("{:.4}", r.iou),
                opt(r.j, 1),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let parts: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &cells);
    }
    let _ = writeln!(
        out,
        "identified {}/{}, IoU {:.3}, precision {:.3}, recall {:.3} (identified means IoU >= {})",
        report.identified,
        report.instances.len(),
        report.mean_iou,
        report.precision,
        report.recall,
        report.identified_iou
    );
    out
}
