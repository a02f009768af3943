//! The detection engine: seed selection, growth, merging and final
//! selection.

mod config;
mod engine;
mod expansion;
mod selection;
mod triplets;

pub use config::GrowthConfig;
pub use engine::{detect, detect_with, merge_seeds, DetectOutcome, RoundLog};
pub use expansion::{expand_seed, expansion_step};
pub use selection::initial_seed_selection;
pub use triplets::{compose_matching_triangles, index_matches, redundant_triplets, MatchIndex};
