//! Delaunay and constrained Delaunay triangulation on a half-edge mesh.
//!
//! The initial triangulation comes from a lexicographic sweep (every new point
//! lies outside the current hull), legalized by Lawson flips. Forced segments
//! are inserted by flipping away the edges they cross, after which a global
//! constrained Lawson pass restores the Delaunay property for every
//! unconstrained edge. Cocircular quadrilaterals are resolved towards the
//! diagonal with the lexicographically smaller `(min id, max id)` pair.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::point::{incircle_sign, on_segment, orient2d, segments_cross_properly, Point, EPS};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[inline]
fn next(h: usize) -> usize {
    if h % 3 == 2 {
        h - 2
    } else {
        h + 1
    }
}

#[inline]
fn prev(h: usize) -> usize {
    if h.is_multiple_of(3) {
        h + 2
    } else {
        h - 1
    }
}

#[inline]
fn undirected(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

struct Mesh<'a> {
    pts: &'a [Point],
    ids: &'a [u64],
    /// Origin vertex of each half-edge; triangle `t` owns `3t..3t+3`.
    v: Vec<usize>,
    twin: Vec<usize>,
    dir: HashMap<(usize, usize), usize>,
    constrained: HashSet<(usize, usize)>,
}

impl<'a> Mesh<'a> {
    fn new(pts: &'a [Point], ids: &'a [u64]) -> Self {
        let cap = 6 * pts.len();
        Mesh {
            pts,
            ids,
            v: Vec::with_capacity(cap),
            twin: Vec::with_capacity(cap),
            dir: HashMap::with_capacity(cap),
            constrained: HashSet::new(),
        }
    }

    fn dest(&self, h: usize) -> usize {
        self.v[next(h)]
    }

    fn apex(&self, h: usize) -> usize {
        self.v[prev(h)]
    }

    fn link(&mut self, a: usize, b: usize) {
        self.twin[a] = b;
        if b != NONE {
            self.twin[b] = a;
        }
    }

    fn add_triangle(&mut self, a: usize, b: usize, c: usize) -> usize {
        let h = self.v.len();
        self.v.extend([a, b, c]);
        self.twin.extend([NONE, NONE, NONE]);
        for k in 0..3 {
            let e = h + k;
            let (s, d) = (self.v[e], self.dest(e));
            self.dir.insert((s, d), e);
            if let Some(&o) = self.dir.get(&(d, s)) {
                self.link(e, o);
            }
        }
        h
    }

    fn is_constrained(&self, h: usize) -> bool {
        self.constrained.contains(&undirected(self.v[h], self.dest(h)))
    }

    /// Whether flipping `e` yields two strictly counter-clockwise triangles.
    fn flippable(&self, e: usize) -> bool {
        let f = self.twin[e];
        if f == NONE {
            return false;
        }
        let (p, q, r, s) = (self.v[e], self.dest(e), self.apex(e), self.apex(f));
        let pt = self.pts;
        orient2d(pt[s], pt[r], pt[p]) > 0.0 && orient2d(pt[r], pt[s], pt[q]) > 0.0
    }

    fn incircle_of(&self, e: usize) -> i8 {
        let f = self.twin[e];
        let (p, q, r, s) = (self.v[e], self.dest(e), self.apex(e), self.apex(f));
        let pt = self.pts;
        incircle_sign(pt[p], pt[q], pt[r], pt[s])
    }

    fn tie_key(&self, a: usize, b: usize) -> (u64, u64) {
        let (x, y) = (self.ids[a], self.ids[b]);
        (x.min(y), x.max(y))
    }

    /// Replaces diagonal `p-q` of the quad around `e` by `r-s`. Afterwards
    /// `e` runs `s -> r` and its twin `r -> s`.
    fn flip(&mut self, e: usize) {
        let f = self.twin[e];
        let (e1, e2, f1, f2) = (next(e), prev(e), next(f), prev(f));
        let (p, q, r, s) = (self.v[e], self.v[e1], self.v[e2], self.v[f2]);
        let (te1, te2, tf1, tf2) = (self.twin[e1], self.twin[e2], self.twin[f1], self.twin[f2]);
        for h in [e, e1, e2, f, f1, f2] {
            let key = (self.v[h], self.dest(h));
            self.dir.remove(&key);
        }
        self.v[e] = s;
        self.v[e1] = r;
        self.v[e2] = p;
        self.v[f] = r;
        self.v[f1] = s;
        self.v[f2] = q;
        self.link(e, f);
        self.link(e1, te2);
        self.link(e2, tf1);
        self.link(f1, tf2);
        self.link(f2, te1);
        for h in [e, e1, e2, f, f1, f2] {
            let key = (self.v[h], self.dest(h));
            self.dir.insert(key, h);
        }
    }

    /// Lawson flipping from the given edges until every reachable
    /// unconstrained edge is locally Delaunay.
    fn legalize(&mut self, mut stack: Vec<usize>) {
        let mut budget = 64 * self.v.len().max(64) * self.pts.len().max(8);
        while let Some(e) = stack.pop() {
            if self.twin[e] == NONE || self.is_constrained(e) {
                continue;
            }
            if self.incircle_of(e) > 0 && self.flippable(e) {
                let f = self.twin[e];
                self.flip(e);
                stack.extend([next(e), prev(e), next(f), prev(f)]);
                budget = budget.saturating_sub(1);
                if budget == 0 {
                    log::warn!("delaunay: flip budget exhausted, result may be non-optimal");
                    return;
                }
            }
        }
    }

    fn legalize_all(&mut self) {
        let all: Vec<usize> = (0..self.v.len())
            .filter(|&h| self.twin[h] != NONE && h < self.twin[h])
            .collect();
        self.legalize(all);
    }

    /// Flips cocircular quads towards the preferred diagonal. Every flip
    /// strictly lowers the sorted multiset of edge keys, so this terminates.
    fn tie_break(&mut self) {
        loop {
            let mut changed = false;
            for e in 0..self.v.len() {
                let f = self.twin[e];
                if f == NONE || e > f || self.is_constrained(e) {
                    continue;
                }
                let (p, q, r, s) = (self.v[e], self.dest(e), self.apex(e), self.apex(f));
                if self.tie_key(r, s) < self.tie_key(p, q) && self.incircle_of(e) == 0 && self.flippable(e) {
                    self.flip(e);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn insert_segment(&mut self, a: usize, b: usize) -> Result<()> {
        let key = undirected(a, b);
        if self.dir.contains_key(&(a, b)) || self.dir.contains_key(&(b, a)) {
            self.constrained.insert(key);
            return Ok(());
        }
        let (pa, pb) = (self.pts[a], self.pts[b]);
        let conflict =
            |what: String| Error::ConstraintConflict(format!("segment ({}, {}) {what}", self.ids[a], self.ids[b]));
        for (w, &pw) in self.pts.iter().enumerate() {
            if w != a && w != b && on_segment(pa, pb, pw) {
                return Err(conflict(format!("passes through vertex {}", self.ids[w])));
            }
        }
        let mut queue = VecDeque::new();
        for h in 0..self.v.len() {
            let t = self.twin[h];
            if t == NONE || h > t {
                continue;
            }
            let (u, w) = (self.v[h], self.dest(h));
            if segments_cross_properly(self.pts[u], self.pts[w], pa, pb) {
                if self.is_constrained(h) {
                    return Err(conflict(format!(
                        "crosses forced segment ({}, {})",
                        self.ids[u], self.ids[w]
                    )));
                }
                queue.push_back((u, w));
            }
        }
        let mut stall = 0usize;
        while let Some((u, w)) = queue.pop_front() {
            let Some(&e) = self.dir.get(&(u, w)) else {
                continue;
            };
            if self.flippable(e) {
                self.flip(e);
                stall = 0;
                let (r, s) = (self.dest(e), self.v[e]);
                if segments_cross_properly(self.pts[r], self.pts[s], pa, pb) {
                    queue.push_back((s, r));
                }
            } else {
                queue.push_back((u, w));
                stall += 1;
                if stall > 2 * queue.len() + 8 {
                    return Err(conflict("cannot be inserted (numerically degenerate)".into()));
                }
            }
        }
        if !(self.dir.contains_key(&(a, b)) || self.dir.contains_key(&(b, a))) {
            return Err(conflict("was not recovered".into()));
        }
        self.constrained.insert(key);
        Ok(())
    }
}

/// Lexicographic sweep: each point is outside the hull of its predecessors.
fn sweep(mesh: &mut Mesh<'_>) -> Result<()> {
    let pts = mesh.pts;
    let ids = mesh.ids;
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| {
        pts[i]
            .x
            .total_cmp(&pts[j].x)
            .then(pts[i].y.total_cmp(&pts[j].y))
            .then(ids[i].cmp(&ids[j]))
    });
    let (p0, p1) = (pts[order[0]], pts[order[1]]);
    let k = (2..order.len())
        .find(|&i| orient2d(p0, p1, pts[order[i]]).abs() > EPS)
        .ok_or_else(|| Error::degenerate("all points are collinear"))?;
    // The first k points are collinear; fan them to the first point off the line.
    let apex = order[k];
    let ccw = orient2d(p0, p1, pts[apex]) > 0.0;
    let mut first_new = Vec::new();
    for i in 0..k - 1 {
        let (a, b) = (order[i], order[i + 1]);
        let h = if ccw {
            mesh.add_triangle(a, b, apex)
        } else {
            mesh.add_triangle(b, a, apex)
        };
        first_new.push(h);
    }
    let mut hull: Vec<usize> = if ccw {
        order[..k].to_vec()
    } else {
        order[..k].iter().rev().copied().collect()
    };
    hull.push(apex);
    mesh.legalize(first_new);

    for &idx in &order[k + 1..] {
        let p = pts[idx];
        let m = hull.len();
        let vis: Vec<bool> = (0..m)
            .map(|i| orient2d(pts[hull[i]], pts[hull[(i + 1) % m]], p) < 0.0)
            .collect();
        let Some(i0) = (0..m).find(|&i| vis[i] && !vis[(i + m - 1) % m]) else {
            log::warn!("delaunay: point {} sees no hull edge, skipped", ids[idx]);
            continue;
        };
        let mut len = 0;
        while len < m && vis[(i0 + len) % m] {
            len += 1;
        }
        let mut stack = Vec::with_capacity(len);
        for j in 0..len {
            let a = hull[(i0 + j) % m];
            let b = hull[(i0 + j + 1) % m];
            stack.push(mesh.add_triangle(b, a, idx));
        }
        mesh.legalize(stack);
        let mut new_hull = Vec::with_capacity(m + 1 - len + 1);
        let end = (i0 + len) % m;
        let mut i = end;
        loop {
            new_hull.push(hull[i]);
            if i == i0 {
                break;
            }
            i = (i + 1) % m;
        }
        new_hull.push(idx);
        hull = new_hull;
    }
    Ok(())
}

/// A triangulation over keypoint ids.
#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: BTreeMap<u64, Point>,
    triangles: Vec<[u64; 3]>,
    edges: BTreeSet<(u64, u64)>,
    constrained: BTreeSet<(u64, u64)>,
    adjacency: BTreeMap<u64, BTreeSet<u64>>,
    apex: HashMap<(u64, u64), u64>,
    skipped: Vec<u64>,
}

impl Triangulation {
    pub fn vertices(&self) -> &BTreeMap<u64, Point> {
        &self.vertices
    }

    pub fn point(&self, id: u64) -> Option<Point> {
        self.vertices.get(&id).copied()
    }

    /// Counter-clockwise triangles, each rotated to start at its smallest id,
    /// in ascending order.
    pub fn triangles(&self) -> &[[u64; 3]] {
        &self.triangles
    }

    /// Undirected edges as `(min, max)` pairs.
    pub fn edges(&self) -> &BTreeSet<(u64, u64)> {
        &self.edges
    }

    pub fn constrained_edges(&self) -> &BTreeSet<(u64, u64)> {
        &self.constrained
    }

    pub fn has_edge(&self, a: u64, b: u64) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Graph neighbours of a vertex, ascending.
    pub fn neighbors(&self, id: u64) -> impl Iterator<Item = u64> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    /// Third vertex of the triangle on the left of the directed edge `a -> b`.
    pub fn left_apex(&self, a: u64, b: u64) -> Option<u64> {
        self.apex.get(&(a, b)).copied()
    }

    /// Input ids dropped because their position duplicated an earlier point.
    pub fn skipped(&self) -> &[u64] {
        &self.skipped
    }

    /// Boundary vertices in counter-clockwise order.
    pub fn boundary(&self) -> Vec<u64> {
        let mut succ: BTreeMap<u64, u64> = BTreeMap::new();
        for &(a, b) in self.apex.keys() {
            if !self.apex.contains_key(&(b, a)) {
                succ.insert(a, b);
            }
        }
        let Some((&start, _)) = succ.iter().next() else {
            return Vec::new();
        };
        let mut out = vec![start];
        let mut cur = succ[&start];
        while cur != start && out.len() <= succ.len() {
            out.push(cur);
            cur = succ[&cur];
        }
        out
    }

    pub fn to_dump(&self) -> TriangulationDump {
        TriangulationDump {
            vertices: self
                .vertices
                .iter()
                .map(|(&id, p)| VertexDump { id, x: p.x, y: p.y })
                .collect(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            triangles: self.triangles.clone(),
            constrained_edges: self.constrained.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    fn from_mesh(mesh: &Mesh<'_>, skipped: Vec<u64>) -> Self {
        let ids = mesh.ids;
        let mut vertices = BTreeMap::new();
        for (i, &id) in ids.iter().enumerate() {
            vertices.insert(id, mesh.pts[i]);
        }
        let mut triangles = Vec::with_capacity(mesh.v.len() / 3);
        let mut edges = BTreeSet::new();
        let mut adjacency: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
        let mut apex = HashMap::with_capacity(mesh.v.len());
        for t in 0..mesh.v.len() / 3 {
            let tri = [ids[mesh.v[3 * t]], ids[mesh.v[3 * t + 1]], ids[mesh.v[3 * t + 2]]];
            for k in 0..3 {
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                apex.insert((a, b), c);
                edges.insert((a.min(b), a.max(b)));
                adjacency.entry(a).or_default().insert(b);
                adjacency.entry(b).or_default().insert(a);
            }
            let r = (0..3).min_by_key(|&k| tri[k]).unwrap();
            triangles.push([tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]]);
        }
        triangles.sort_unstable();
        let constrained = mesh
            .constrained
            .iter()
            .map(|&(a, b)| (ids[a].min(ids[b]), ids[a].max(ids[b])))
            .collect();
        Triangulation {
            vertices,
            triangles,
            edges,
            constrained,
            adjacency,
            apex,
            skipped,
        }
    }
}

impl Serialize for Triangulation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_dump().serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDump {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

/// Plain JSON shape of a triangulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulationDump {
    pub vertices: Vec<VertexDump>,
    pub edges: Vec<[u64; 2]>,
    pub triangles: Vec<[u64; 3]>,
    pub constrained_edges: Vec<[u64; 2]>,
}

/// Sorts by id, rejects repeated ids and drops repeated positions.
fn prepare(points: &[(u64, Point)]) -> Result<(Vec<u64>, Vec<Point>, Vec<u64>)> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|&(id, _)| id);
    let mut ids = Vec::with_capacity(sorted.len());
    let mut pts = Vec::with_capacity(sorted.len());
    let mut skipped = Vec::new();
    let mut seen = HashSet::with_capacity(sorted.len());
    for (i, &(id, p)) in sorted.iter().enumerate() {
        if i > 0 && sorted[i - 1].0 == id {
            return Err(Error::DuplicateId(id));
        }
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::validation(format!("vertex {id} has a non-finite position")));
        }
        // +0.0 so that -0.0 and 0.0 hash alike
        if !seen.insert(((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())) {
            log::debug!("delaunay: vertex {id} duplicates an earlier position, skipped");
            skipped.push(id);
            continue;
        }
        ids.push(id);
        pts.push(p);
    }
    if pts.len() < 3 {
        return Err(Error::degenerate(format!(
            "triangulation needs at least 3 distinct points, got {}",
            pts.len()
        )));
    }
    Ok((ids, pts, skipped))
}

pub fn delaunay(points: &[(u64, Point)]) -> Result<Triangulation> {
    constrained_delaunay(points, &[])
}

/// Delaunay triangulation forced to contain every segment in `forced`.
/// Vertices lying on a forced segment, or forced segments that cross, are a
/// constraint conflict.
pub fn constrained_delaunay(points: &[(u64, Point)], forced: &[(u64, u64)]) -> Result<Triangulation> {
    let (ids, pts, skipped) = prepare(points)?;
    let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut segs = Vec::with_capacity(forced.len());
    for &(a, b) in forced {
        let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
            return Err(Error::validation(format!(
                "forced segment ({a}, {b}) references an unknown vertex"
            )));
        };
        if ia == ib {
            return Err(Error::validation(format!("forced segment ({a}, {b}) is a point")));
        }
        segs.push((ia, ib));
    }
    for (i, &(a, b)) in segs.iter().enumerate() {
        for &(c, d) in &segs[i + 1..] {
            if segments_cross_properly(pts[a], pts[b], pts[c], pts[d]) {
                return Err(Error::ConstraintConflict(format!(
                    "forced segments ({}, {}) and ({}, {}) cross",
                    ids[a], ids[b], ids[c], ids[d]
                )));
            }
        }
    }

    let mut mesh = Mesh::new(&pts, &ids);
    sweep(&mut mesh)?;
    mesh.legalize_all();
    for &(a, b) in &segs {
        mesh.insert_segment(a, b)?;
    }
    if !segs.is_empty() {
        mesh.legalize_all();
    }
    mesh.tie_break();
    Ok(Triangulation::from_mesh(&mesh, skipped))
}
