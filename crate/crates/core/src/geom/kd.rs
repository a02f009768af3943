use std::collections::HashMap;

use serde::Serialize;

use super::point::Point;
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdLeaf {
    pub rect: Rect,
    /// Ids of the points assigned to this leaf, ascending.
    pub members: Vec<u64>,
}

/// A partition of a point set into a fixed number of rectangular leaves.
#[derive(Debug, Clone)]
pub struct KdPartition {
    leaves: Vec<KdLeaf>,
    leaf_of: HashMap<u64, usize>,
}

impl KdPartition {
    pub fn leaves(&self) -> &[KdLeaf] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Leaf index holding the point with this id.
    pub fn leaf_of(&self, id: u64) -> Option<usize> {
        self.leaf_of.get(&id).copied()
    }
}

/// Splits the points into exactly `leaves` non-empty leaves.
///
/// A node that must hold `k` leaves hands `floor(k/2)` to its lower child and
/// the rest to the upper one, splitting its points in the same proportion
/// along the wider axis of their spread. Leaf populations therefore differ by
/// at most one.
pub fn kd_partition(points: &[(u64, Point)], leaves: usize) -> Result<KdPartition> {
    if leaves == 0 {
        return Err(Error::validation("kd partition needs at least one leaf"));
    }
    if leaves > points.len() {
        return Err(Error::validation(format!(
            "infeasible partition: {leaves} leaves for {} points",
            points.len()
        )));
    }
    let (mut lo, mut hi) = (points[0].1, points[0].1);
    for &(_, p) in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let root = Rect {
        x0: lo.x,
        y0: lo.y,
        x1: hi.x,
        y1: hi.y,
    };
    let mut pts = points.to_vec();
    let mut out = Vec::with_capacity(leaves);
    split(&mut pts, root, leaves, &mut out);

    let mut leaf_of = HashMap::with_capacity(points.len());
    for (i, leaf) in out.iter_mut().enumerate() {
        leaf.members.sort_unstable();
        for &id in &leaf.members {
            leaf_of.insert(id, i);
        }
    }
    Ok(KdPartition { leaves: out, leaf_of })
}

fn split(pts: &mut [(u64, Point)], rect: Rect, k: usize, out: &mut Vec<KdLeaf>) {
    if k == 1 {
        out.push(KdLeaf {
            rect,
            members: pts.iter().map(|&(id, _)| id).collect(),
        });
        return;
    }
    let (mut lo, mut hi) = (pts[0].1, pts[0].1);
    for &(_, p) in pts.iter() {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let along_x = hi.x - lo.x >= hi.y - lo.y;
    let key = |p: Point| if along_x { (p.x, p.y) } else { (p.y, p.x) };
    pts.sort_by(|a, b| {
        let (ka, kb) = (key(a.1), key(b.1));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.0.cmp(&b.0))
    });

    let k_lo = k / 2;
    let n_lo = pts.len() * k_lo / k;
    let cut = 0.5 * (key(pts[n_lo - 1].1).0 + key(pts[n_lo].1).0);
    let (mut r_lo, mut r_hi) = (rect, rect);
    if along_x {
        r_lo.x1 = cut;
        r_hi.x0 = cut;
    } else {
        r_lo.y1 = cut;
        r_hi.y0 = cut;
    }
    let (a, b) = pts.split_at_mut(n_lo);
    split(a, r_lo, k_lo, out);
    split(b, r_hi, k - k_lo, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<(u64, Point)> {
        coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i as u64, Point::new(x, y)))
            .collect()
    }

    #[test]
    fn single_leaf_is_bounding_box() {
        let p = pts(&[(1., 2.), (5., -1.), (3., 7.)]);
        let kd = kd_partition(&p, 1).unwrap();
        assert_eq!(kd.len(), 1);
        assert_eq!(
            kd.leaves()[0].rect,
            Rect {
                x0: 1.,
                y0: -1.,
                x1: 5.,
                y1: 7.
            }
        );
        assert_eq!(kd.leaves()[0].members, vec![0, 1, 2]);
    }

    #[test]
    fn collinear_points_become_singletons() {
        let p = pts(&[(4., 0.), (0., 0.), (2., 0.), (1., 0.), (3., 0.)]);
        let kd = kd_partition(&p, 5).unwrap();
        assert!(kd.leaves().iter().all(|l| l.members.len() == 1));
        // ordered left to right
        let order: Vec<u64> = kd.leaves().iter().map(|l| l.members[0]).collect();
        assert_eq!(order, vec![1, 3, 2, 4, 0]);
    }

    #[test]
    fn too_many_leaves() {
        let p = pts(&[(0., 0.), (1., 1.)]);
        assert!(kd_partition(&p, 3).is_err());
        assert!(kd_partition(&p, 0).is_err());
    }
}
