//! Computational-geometry kernel.

mod affine;
mod delaunay;
mod hull;
mod kd;
mod point;
mod polygon;

pub use affine::{affine_from_triangles, AffineMap};
pub use delaunay::{constrained_delaunay, delaunay, Triangulation, TriangulationDump, VertexDump};
pub use hull::{boundary_indices, classify_vertex_vs_hull_side, convex_hull, convex_hull_indices, SideClass};
pub use kd::{kd_partition, KdLeaf, KdPartition, Rect};
pub use point::{incircle, on_segment, orient2d, orientation, segments_cross_properly, Orientation, Point, EPS};
pub use polygon::{
    area, bounds, clip_convex, contains_point, convex_contains, ear_clip, ensure_ccw, intersection_area, is_convex,
    polygons_intersect, signed_area,
};
