//! Detection of deformed object instances by growing groups of feature
//! matches over template triangulations.
//!
//! The pipeline matches scene keypoints to template keypoints, picks
//! well-scored matching triangles as seeds, grows each seed across the
//! constrained Delaunay triangulation of the template while checking local
//! geometric coherence, merges seeds and finally keeps the best seed among
//! overlapping ones. A homography RANSAC detector is provided as a baseline,
//! along with a synthetic scene generator and evaluation metrics.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod geom;
pub mod growth;
pub mod io;
pub mod matching;
pub mod model;
pub mod par;
pub mod rectify;
pub mod scores;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
pub use growth::{detect, GrowthConfig};
pub use model::{Descriptor, Detection, Frame, GroundTruth, ImageTag, KeyPoint, KeyPointSet, Match, Seed};
