//! Photometric comparison of rectified instances and the final selection
//! among overlapping seeds.

use super::raster::{rasterize_polygon, Raster};
use super::tps::{tps_fit, tps_warp};
use crate::error::{Error, Result};
use crate::geom::{convex_hull, polygons_intersect, Point};
use crate::model::{Detection, KeyPointSet, Seed};
use crate::par;

/// Per-channel histogram specification: each level of `src` maps to the
/// smallest level of `reference` whose cumulative frequency reaches it.
pub fn histogram_match(src: &Raster, reference: &Raster) -> Result<Raster> {
    if src.channels() != reference.channels() {
        return Err(Error::DimensionMismatch(format!(
            "histogram match between {} and {} channels",
            src.channels(),
            reference.channels()
        )));
    }
    let ch = src.channels();
    let cdf = |r: &Raster, c: usize| -> [f64; 256] {
        let mut hist = [0u64; 256];
        for px in r.data().chunks(ch) {
            hist[px[c] as usize] += 1;
        }
        let total = (r.data().len() / ch).max(1) as f64;
        let mut out = [0.0; 256];
        let mut acc = 0u64;
        for (i, h) in hist.iter().enumerate() {
            acc += h;
            out[i] = acc as f64 / total;
        }
        out
    };
    let mut out = src.clone();
    for c in 0..ch {
        let (cs, cr) = (cdf(src, c), cdf(reference, c));
        let mut lut = [0u8; 256];
        for (level, slot) in lut.iter_mut().enumerate() {
            // tolerance absorbs rounding in the cumulative sums
            let target = cs[level] - 1e-12;
            *slot = cr.iter().position(|&v| v >= target).unwrap_or(255) as u8;
        }
        for px in out.data_mut().chunks_mut(ch) {
            px[c] = lut[px[c] as usize];
        }
    }
    Ok(out)
}

/// Channel-normed absolute difference image and its median over the pixels
/// whose centres lie inside `mask`. Norms are clamped to 255 and rounded
/// half down. An empty mask scores the worst value, 255.
pub fn photometric_difference(a: &Raster, b: &Raster, mask: &[Point]) -> Result<(Raster, f64)> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let ch = a.channels();
    let norms: Vec<u8> = a
        .data()
        .chunks(ch)
        .zip(b.data().chunks(ch))
        .map(|(p, q)| {
            let s: f64 = p
                .iter()
                .zip(q)
                .map(|(&x, &y)| {
                    let d = x as f64 - y as f64;
                    d * d
                })
                .sum();
            (s.sqrt().min(255.0) - 0.5).ceil().max(0.0) as u8
        })
        .collect();
    let inside = rasterize_polygon(mask, a.width(), a.height());
    let mut vals: Vec<u8> = norms.iter().zip(&inside).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    let j = if vals.is_empty() {
        255.0
    } else {
        vals.sort_unstable();
        vals[(vals.len() - 1) / 2] as f64
    };
    let diff = Raster::from_data(a.width(), a.height(), 1, norms)?;
    Ok((diff, j))
}

fn detection_of(seed: &Seed, template: &KeyPointSet, scene: &KeyPointSet) -> Option<Detection> {
    let template_hull = convex_hull(&seed.template_points(template)).ok()?;
    let scene_hull = convex_hull(&seed.scene_points(scene)).ok()?;
    Some(Detection {
        seed: seed.clone(),
        template_hull,
        scene_hull,
        score_j: None,
    })
}

/// Difference median of a seed: the scene is pulled back into the template
/// frame through the spline fitted on the seed's correspondences, matched in
/// histogram to the template and compared inside the template hull.
pub fn seed_difference(
    det: &Detection,
    template_img: &Raster,
    scene_img: &Raster,
    template: &KeyPointSet,
    scene: &KeyPointSet,
    lambda: f64,
) -> Result<f64> {
    if template_img.channels() != scene_img.channels() {
        return Err(Error::DimensionMismatch(
            "template and scene channel counts differ".into(),
        ));
    }
    let src = det.seed.template_points(template);
    let dst = det.seed.scene_points(scene);
    let tps = tps_fit(&src, &dst, lambda)?;
    let rectified = tps_warp(scene_img, &tps, template_img.width(), template_img.height());
    let matched = histogram_match(&rectified, template_img)?;
    Ok(photometric_difference(&matched, template_img, &det.template_hull)?.1)
}

/// Union-find groups of detections whose scene hulls overlap, each group in
/// input order.
fn overlap_groups(dets: &[Detection]) -> Vec<Vec<usize>> {
    let n = dets.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if polygons_intersect(&dets[i].scene_hull, &dets[j].scene_hull) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Final selection. With images, each seed gets its difference median and
/// the lowest one wins among seeds with overlapping scene hulls. Without
/// images the largest seed wins and no score is reported.
pub fn photometric_filtering(
    images: Option<(&Raster, &Raster)>,
    seeds: &[Seed],
    template: &KeyPointSet,
    scene: &KeyPointSet,
    lambda: f64,
    parallel: bool,
) -> Result<Vec<Detection>> {
    let mut dets: Vec<Detection> = seeds.iter().filter_map(|s| detection_of(s, template, scene)).collect();
    if let Some((t_img, s_img)) = images {
        let js = par::map_collect(&dets, parallel, |d| {
            seed_difference(d, t_img, s_img, template, scene, lambda)
        });
        for (d, j) in dets.iter_mut().zip(js) {
            d.score_j = Some(match j {
                Ok(j) => j,
                Err(Error::DimensionMismatch(m)) => return Err(Error::DimensionMismatch(m)),
                Err(e) => {
                    log::warn!("rectification failed for seed {:?}: {e}", d.seed.provenance);
                    255.0
                }
            });
        }
    }
    let mut keep: Vec<usize> = overlap_groups(&dets)
        .into_iter()
        .map(|g| {
            g.into_iter()
                .min_by(|&a, &b| {
                    let (da, db) = (&dets[a], &dets[b]);
                    let by_j = match (da.score_j, db.score_j) {
                        (Some(x), Some(y)) => x.total_cmp(&y),
                        _ => std::cmp::Ordering::Equal,
                    };
                    by_j.then(db.seed.len().cmp(&da.seed.len())).then(a.cmp(&b))
                })
                .expect("non-empty group")
        })
        .collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| dets[i].clone()).collect())
}
