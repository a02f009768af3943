//! SVG overlays: template and scene side by side with the seed meshes,
//! hulls and correspondence lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::geom::{delaunay, Point, Triangulation};
use crate::io::DetectionRecord;
use crate::model::{Frame, KeyPointSet, Match};

const GAP: f64 = 20.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn pt(p: Point, dx: f64) -> String {
    format!("{},{}", num(p.x + dx), num(p.y))
}

fn triangles_path(tris: &[[Point; 3]], dx: f64) -> String {
    let mut d = String::new();
    for t in tris {
        if !d.is_empty() {
            d.push(' ');
        }
        let _ = write!(d, "M{} L{} L{} Z", pt(t[0], dx), pt(t[1], dx), pt(t[2], dx));
    }
    d
}

fn polygon(out: &mut String, class: &str, poly: &[Point], dx: f64, colour: &str) {
    let pts: Vec<String> = poly.iter().map(|&p| pt(p, dx)).collect();
    let _ = writeln!(
        out,
        r#"  <polygon class="{class}" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
        pts.join(" ")
    );
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(width),
        h = num(height)
    );
}

fn panel(out: &mut String, class: &str, frame: Frame, dx: f64) {
    let _ = writeln!(
        out,
        r##"  <rect class="{class}" x="{}" y="0.000" width="{}" height="{}" fill="#f4f4f4" stroke="#999999"/>"##,
        num(dx),
        num(frame.width),
        num(frame.height)
    );
}

fn keypoints(out: &mut String, set: &KeyPointSet, dx: f64) {
    for k in set.points() {
        let _ = writeln!(
            out,
            r##"  <circle class="keypoint" cx="{}" cy="{}" r="1.000" fill="#666666"/>"##,
            num(k.x + dx),
            num(k.y)
        );
    }
}

/// Template mesh of a seed's template projection, and the same connectivity
/// replicated on the scene projection. Empty when the projection cannot be
/// triangulated.
fn seed_meshes(matches: &[Match], template: &KeyPointSet, scene: &KeyPointSet) -> (Vec<[Point; 3]>, Vec<[Point; 3]>) {
    let pts: Vec<(u64, Point)> = matches
        .iter()
        .filter_map(|m| template.get(m.template_id).map(|k| (m.template_id, k.pos())))
        .collect();
    let Ok(tri) = delaunay(&pts) else {
        return (Vec::new(), Vec::new());
    };
    let to_scene: BTreeMap<u64, u64> = matches.iter().map(|m| (m.template_id, m.scene_id)).collect();
    let mut t_tris = Vec::new();
    let mut s_tris = Vec::new();
    for t in tri.triangles() {
        let tp = t.map(|id| tri.point(id).expect("vertex of mesh"));
        let sp: Option<Vec<Point>> = t.iter().map(|id| scene.get(to_scene[id]).map(|k| k.pos())).collect();
        if let Some(sp) = sp {
            t_tris.push(tp);
            s_tris.push([sp[0], sp[1], sp[2]]);
        }
    }
    (t_tris, s_tris)
}

/// Renders detections over both keypoint sets. Every seed match is drawn
/// exactly once as a `line` of class `correspondence`.
pub fn render_detections(template: &KeyPointSet, scene: &KeyPointSet, detections: &[DetectionRecord]) -> String {
    let tf = template.frame_or_bounds();
    let sf = scene.frame_or_bounds();
    let dx = tf.width + GAP;
    let mut out = String::new();
    header(&mut out, dx + sf.width, tf.height.max(sf.height));
    panel(&mut out, "template-panel", tf, 0.0);
    panel(&mut out, "scene-panel", sf, dx);
    keypoints(&mut out, template, 0.0);
    keypoints(&mut out, scene, dx);
    for (i, det) in detections.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"  <g class="detection" id="detection-{}">"#, i + 1);
        let matches: Vec<Match> = det.seeds.iter().flat_map(|s| s.matches.iter().copied()).collect();
        let (t_tris, s_tris) = seed_meshes(&matches, template, scene);
        for (class, tris, off) in [("mesh template-mesh", &t_tris, 0.0), ("mesh scene-mesh", &s_tris, dx)] {
            let _ = writeln!(
                out,
                r#"  <path class="{class}" d="{}" fill="none" stroke="{colour}" stroke-width="0.5"/>"#,
                triangles_path(tris, off)
            );
        }
        polygon(&mut out, "hull template-hull", &det.template_hull, 0.0, colour);
        polygon(&mut out, "hull scene-hull", &det.scene_hull, dx, colour);
        for m in &matches {
            let (Some(a), Some(b)) = (template.get(m.template_id), scene.get(m.scene_id)) else {
                continue;
            };
            let _ = writeln!(
                out,
                r#"  <line class="correspondence" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{colour}" stroke-width="0.3" stroke-opacity="0.6"/>"#,
                num(a.x),
                num(a.y),
                num(b.x + dx),
                num(b.y)
            );
        }
        out.push_str("  </g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Renders a single triangulation with its forced edges highlighted.
pub fn render_mesh(tri: &Triangulation) -> String {
    let pts: Vec<Point> = tri.vertices().values().copied().collect();
    let (lo, hi) = crate::geom::bounds(&pts).unwrap_or_default();
    let pad = 10.0;
    let shift = Point::new(pad - lo.x, pad - lo.y);
    let mut out = String::new();
    header(&mut out, hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
    let tris: Vec<[Point; 3]> = tri
        .triangles()
        .iter()
        .map(|t| t.map(|id| tri.point(id).expect("vertex of mesh") + shift))
        .collect();
    let _ = writeln!(
        out,
        r##"  <path class="mesh" d="{}" fill="none" stroke="#1f77b4" stroke-width="0.5"/>"##,
        triangles_path(&tris, 0.0)
    );
    for &(a, b) in tri.constrained_edges() {
        let (pa, pb) = (
            tri.point(a).expect("vertex") + shift,
            tri.point(b).expect("vertex") + shift,
        );
        let _ = writeln!(
            out,
            r##"  <line class="constrained" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#d62728" stroke-width="1.0"/>"##,
            num(pa.x),
            num(pa.y),
            num(pb.x),
            num(pb.y)
        );
    }
    for (id, p) in tri.vertices() {
        let q = *p + shift;
        let _ = writeln!(
            out,
            r##"  <circle class="vertex" id="v{id}" cx="{}" cy="{}" r="1.500" fill="#333333"/>"##,
            num(q.x),
            num(q.y)
        );
    }
    out.push_str("</svg>\n");
    out
}
