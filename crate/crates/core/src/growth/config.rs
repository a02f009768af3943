use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_text, KvReader};
use crate::scores::RcsMu;

/// Tuning of the detection engine.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthConfig {
    pub ratio_threshold: f64,
    pub ccs_threshold: f64,
    pub rcs_threshold: f64,
    pub coherence_threshold: f64,
    /// Number of spatial leaves, and so the maximum number of seeds picked
    /// per selection round.
    pub kd_leaves: usize,
    /// Cap on the matching triangles composed from one template triple.
    pub max_candidates_per_template_triplet: usize,
    /// Graph distance from the apex of an outside triangle searched for the
    /// third vertex of an expansion candidate.
    pub expansion_neighbor_depth: usize,
    /// A seed counts as properly expanded at this many matches.
    pub min_seed_size: usize,
    pub rcs_mu: RcsMu,
    /// Also add matched points swallowed by the hull after an expansion when
    /// they agree with the local affine map.
    pub absorb_enclosed: bool,
    /// Regularization of the rectifying spline.
    pub tps_lambda: f64,
    /// Upper bound on selection/expansion rounds.
    pub max_iterations: usize,
    /// Evaluate candidates and expand seeds on the thread pool.
    pub parallel: bool,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            ratio_threshold: 0.8,
            ccs_threshold: 0.6,
            rcs_threshold: 0.6,
            coherence_threshold: 0.7,
            kd_leaves: 5,
            max_candidates_per_template_triplet: 32,
            expansion_neighbor_depth: 1,
            min_seed_size: 6,
            rcs_mu: RcsMu::Corrected,
            absorb_enclosed: true,
            tps_lambda: 0.0,
            max_iterations: 64,
            parallel: crate::par::enabled(),
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold <= 1.0) {
            return Err(Error::validation(format!(
                "ratio_threshold must lie in (0, 1], got {}",
                self.ratio_threshold
            )));
        }
        unit("ccs_threshold", self.ccs_threshold)?;
        unit("rcs_threshold", self.rcs_threshold)?;
        unit("coherence_threshold", self.coherence_threshold)?;
        if self.kd_leaves == 0 {
            return Err(Error::validation("kd_leaves must be at least 1"));
        }
        if self.max_candidates_per_template_triplet == 0 {
            return Err(Error::validation(
                "max_candidates_per_template_triplet must be at least 1",
            ));
        }
        if self.min_seed_size < 3 {
            return Err(Error::validation("min_seed_size must be at least 3"));
        }
        if !(self.tps_lambda >= 0.0) {
            return Err(Error::validation("tps_lambda must be non-negative"));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation("max_iterations must be at least 1"));
        }
        Ok(())
    }

    /// Overrides fields from `key = value` text; unknown keys are rejected.
    pub fn apply_kv(&mut self, text: &str, source: &str) -> Result<()> {
        let mut kv = KvReader::new(text, source)?;
        macro_rules! field {
            ($($name:ident),*) => {$(
                if let Some(v) = kv.take(stringify!($name))? {
                    self.$name = v;
                }
            )*};
        }
        field!(
            ratio_threshold,
            ccs_threshold,
            rcs_threshold,
            coherence_threshold,
            kd_leaves,
            max_candidates_per_template_triplet,
            expansion_neighbor_depth,
            min_seed_size,
            rcs_mu,
            absorb_enclosed,
            tps_lambda,
            max_iterations,
            parallel
        );
        kv.finish()?;
        self.validate()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = GrowthConfig::default();
        cfg.apply_kv(&read_text(path)?, &path.display().to_string())?;
        Ok(cfg)
    }
}
