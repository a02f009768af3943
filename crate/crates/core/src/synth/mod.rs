//! Synthetic fixtures and evaluation.

mod eval;
mod generator;

pub use eval::{evaluate, format_table, frame_dims, iou, truth_mask, EvalReport, InstanceReport, IDENTIFIED_IOU};
pub use generator::{generate_scene, generate_template, random_descriptor, Outliers, SynthSpec, TransformKind};
